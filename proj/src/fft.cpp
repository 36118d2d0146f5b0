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

#include "urban/fft.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace urban::features {

bool IsPowerOfTwo(size_t n) { return n != 0 && (n & (n - 1)) == 0; }

FftPlan::FftPlan(size_t n) : n_(n) {
  if (!IsPowerOfTwo(n)) throw std::invalid_argument("FFT length " + std::to_string(n) + " is not a power of two");
  int bits = 0;
  while ((size_t{1} << bits) < n) ++bits;
  bit_reverse_.resize(n);
  for (size_t i = 0; i < n; ++i) {
    size_t r = 0;
    for (int b = 0; b < bits; ++b)
      if (i & (size_t{1} << b)) r |= size_t{1} << (bits - 1 - b);
    bit_reverse_[i] = r;
  }
  twiddles_.resize(n / 2);
  for (size_t k = 0; k < n / 2; ++k) {
    const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    twiddles_[k] = {std::cos(angle), std::sin(angle)};
  }
}

void FftPlan::Forward(std::span<std::complex<double>> data) const {
  if (data.size() != n_) throw std::invalid_argument("FFT input length does not match the plan");
  for (size_t i = 0; i < n_; ++i)
    if (i < bit_reverse_[i]) std::swap(data[i], data[bit_reverse_[i]]);
  for (size_t len = 2; len <= n_; len <<= 1) {
    const size_t half = len / 2;
    const size_t stride = n_ / len;
    for (size_t start = 0; start < n_; start += len) {
      for (size_t j = 0; j < half; ++j) {
        const std::complex<double> t = twiddles_[j * stride] * data[start + j + half];
        const std::complex<double> u = data[start + j];
        data[start + j] = u + t;
        data[start + j + half] = u - t;
      }
    }
  }
}

std::vector<std::complex<double>> Fft(std::span<const std::complex<double>> input) {
  FftPlan plan(input.size());
  std::vector<std::complex<double>> out(input.begin(), input.end());
  plan.Forward(out);
  return out;
}

}  // namespace urban::features
