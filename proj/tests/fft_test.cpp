// Copyright 2026 The Urban Acoustics Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "test_util.hpp"
#include "urban/fft.hpp"

namespace urban::features {
namespace {

using cd = std::complex<double>;

std::vector<cd> NaiveDft(const std::vector<cd>& x) {
  const size_t n = x.size();
  std::vector<cd> out(n);
  for (size_t k = 0; k < n; ++k) {
    cd acc = 0.0;
    for (size_t j = 0; j < n; ++j) {
      const double angle = -2.0 * std::numbers::pi * static_cast<double>((j * k) % n) / static_cast<double>(n);
      acc += x[j] * cd(std::cos(angle), std::sin(angle));
    }
    out[k] = acc;
  }
  return out;
}

TEST(FftTest, ImpulseGivesFlatSpectrum) {
  const auto out = Fft(std::vector<cd>{1, 0, 0, 0});
  for (const auto& v : out) {
    EXPECT_DOUBLE_EQ(v.real(), 1.0);
    EXPECT_DOUBLE_EQ(v.imag(), 0.0);
  }
}

TEST(FftTest, ConstantConcentratesInDcBin) {
  const auto out = Fft(std::vector<cd>{1, 1, 1, 1});
  EXPECT_DOUBLE_EQ(out[0].real(), 4.0);
  for (size_t k = 1; k < 4; ++k) EXPECT_NEAR(std::abs(out[k]), 0.0, 1e-15);
}

TEST(FftTest, MatchesNaiveDftOnRandomInputs) {
  Rng rng(7);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<cd> x(1024);
    for (auto& v : x) v = cd(rng.Uniform(-1, 1), rng.Uniform(-1, 1));
    const auto fast = Fft(x);
    const auto slow = NaiveDft(x);
    for (size_t k = 0; k < x.size(); ++k) worst = std::max(worst, std::abs(fast[k] - slow[k]));
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(FftTest, Parseval) {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<cd> x(1024);
    for (auto& v : x) v = cd(rng.Uniform(-1, 1), rng.Uniform(-1, 1));
    const auto y = Fft(x);
    double ex = 0.0, ey = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
      ex += std::norm(x[i]);
      ey += std::norm(y[i]);
    }
    EXPECT_LT(std::abs(ex - ey / 1024.0) / ex, 1e-6);
  }
}

TEST(FftTest, SmallSizesMatchOracle) {
  Rng rng(3);
  for (size_t n : {1u, 2u, 8u, 64u}) {
    std::vector<cd> x(n);
    for (auto& v : x) v = cd(rng.Uniform(-1, 1), 0.0);
    const auto fast = Fft(x);
    const auto slow = NaiveDft(x);
    for (size_t k = 0; k < n; ++k) EXPECT_LT(std::abs(fast[k] - slow[k]), 1e-12) << n;
  }
}

TEST(FftTest, RejectsNonPowerOfTwo) {
  EXPECT_THROW(FftPlan(12), std::invalid_argument);
  EXPECT_THROW(FftPlan(0), std::invalid_argument);
  EXPECT_THROW(Fft(std::vector<cd>(6)), std::invalid_argument);
  EXPECT_TRUE(IsPowerOfTwo(1024));
  EXPECT_FALSE(IsPowerOfTwo(1000));
}

TEST(FftTest, PlanRejectsWrongLength) {
  FftPlan plan(8);
  std::vector<cd> x(4);
  EXPECT_THROW(plan.Forward(x), std::invalid_argument);
}

}  // namespace
}  // namespace urban::features
