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

#include <algorithm>
#include <cmath>
#include <numbers>

#include "test_util.hpp"
#include "urban/audio_io.hpp"
#include "urban/features.hpp"

namespace urban::features {
namespace {

double OracleMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double OracleHz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

audio::AudioClip SineClip(double hz, int rate = 44100, size_t n = dsp::kStandardLength, int ch = 2) {
  audio::AudioClip c;
  c.sample_rate_hz = rate;
  std::vector<float> s(n);
  for (size_t i = 0; i < n; ++i) s[i] = static_cast<float>(0.5 * std::sin(2.0 * std::numbers::pi * hz * i / rate));
  c.channels.assign(static_cast<size_t>(ch), s);
  return c;
}

SpectrogramTensor RandomSpec(uint64_t seed) {
  SpectrogramTensor s(2, 64, 344);
  Rng rng(seed);
  for (float& v : s.data) v = static_cast<float>(rng.Uniform(-80.0, 0.0));
  return s;
}

TEST(MelScaleTest, KnownValues) {
  EXPECT_EQ(HzToMel(0.0), 0.0);
  EXPECT_NEAR(HzToMel(700.0), 781.17284, 1e-5);
  EXPECT_NEAR(HzToMel(700.0), 2595.0 * std::log10(2.0), 1e-12);
  for (double f : {100.0, 1000.0, 10000.0}) EXPECT_NEAR(MelToHz(HzToMel(f)), f, 1e-9 * f);
  EXPECT_THROW(HzToMel(-1.0), std::invalid_argument);
}

TEST(MelFilterbankTest, MatchesTriangleOracle) {
  const MelFilterbank fb(64, 1024, 44100, 0.0, 22050.0);
  ASSERT_EQ(fb.n_mels(), 64);
  ASSERT_EQ(fb.n_bins(), 513);
  ASSERT_EQ(fb.edges_hz().size(), 66u);
  const double top = OracleMel(22050.0);
  std::vector<double> edges(66);
  for (int i = 0; i < 66; ++i) edges[i] = OracleHz(top * i / 65.0);
  for (int i = 0; i < 66; ++i) EXPECT_NEAR(fb.edges_hz()[i], edges[i], 1e-6);
  for (int m = 0; m < 64; ++m) {
    for (int k = 0; k < 513; ++k) {
      const double f = k * 44100.0 / 1024.0;
      const double up = (f - edges[m]) / (edges[m + 1] - edges[m]);
      const double down = (edges[m + 2] - f) / (edges[m + 2] - edges[m + 1]);
      const double w = std::max(0.0, std::min(up, down));
      ASSERT_NEAR(fb.weight(m, k), w, 1e-9) << m << " " << k;
      if (f <= edges[m] || f >= edges[m + 2]) ASSERT_EQ(fb.weight(m, k), 0.0);
    }
  }
}

TEST(MelFilterbankTest, RowProperties) {
  const MelFilterbank fb = BuildMelFilterbank();
  int prev_begin = 0;
  for (int m = 0; m < fb.n_mels(); ++m) {
    double peak = 0.0;
    int first = -1, last = -1;
    for (int k = 0; k < fb.n_bins(); ++k) {
      const double w = fb.weight(m, k);
      ASSERT_GE(w, 0.0);
      peak = std::max(peak, w);
      if (w > 0.0) {
        if (first < 0) first = k;
        last = k;
      }
    }
    EXPECT_GT(peak, 0.0) << m;
    EXPECT_LE(peak, 1.0);
    EXPECT_GE(first, prev_begin);
    prev_begin = first;
    for (int k = first; k <= last; ++k) EXPECT_GT(fb.weight(m, k), 0.0) << m << " " << k;
    EXPECT_LE(fb.support_begin(m), first);
    EXPECT_GT(fb.support_end(m), last);
  }
}

TEST(MelFilterbankTest, RejectsAboveNyquist) {
  EXPECT_THROW(MelFilterbank(64, 1024, 44100, 0.0, 22051.0), std::invalid_argument);
  EXPECT_THROW(MelFilterbank(0, 1024, 44100, 0.0, 22050.0), std::invalid_argument);
}

TEST(HannWindowTest, Periodic) {
  const auto w = HannWindow(8);
  EXPECT_EQ(w[0], 0.0);
  EXPECT_NEAR(w[4], 1.0, 1e-15);
  EXPECT_NEAR(w[2], 0.5, 1e-15);
  EXPECT_NEAR(w[1], w[7], 1e-15);
}

TEST(StftTest, FrameCounts) {
  StftConfig cfg;
  EXPECT_EQ(cfg.FrameCount(dsp::kStandardLength), 344);
  cfg.drop_last_frame = false;
  EXPECT_EQ(cfg.FrameCount(dsp::kStandardLength), 345);
  const std::vector<float> x(dsp::kStandardLength, 0.0f);
  const auto spec = Stft(x, cfg);
  ASSERT_EQ(spec.size(), 513u);
  EXPECT_EQ(spec[0].size(), 345u);
  for (const auto& row : spec)
    for (auto v : row) ASSERT_EQ(std::abs(v), 0.0);
  EXPECT_EQ(Stft(x)[0].size(), 344u);
}

TEST(StftTest, SinusoidPeaksAtNearestBin) {
  const auto clip = SineClip(1000.0, 44100, dsp::kStandardLength, 1);
  const auto spec = Stft(clip.channels[0]);
  const int expected = static_cast<int>(std::lround(1000.0 * 1024 / 44100.0));
  ASSERT_EQ(expected, 23);
  for (size_t t = 2; t + 2 < spec[0].size(); ++t) {
    int best = 0;
    for (int k = 1; k < 513; ++k)
      if (std::abs(spec[k][t]) > std::abs(spec[best][t])) best = k;
    ASSERT_EQ(best, expected) << t;
  }
}

TEST(MelSpectrogramTest, ShapeAndZeroClip) {
  const MelSpectrogram mel;
  const auto zero = dsp::Standardize(SineClip(0.0, 8000, 100, 1));
  const auto out = mel(zero);
  EXPECT_EQ(out.channels, 2);
  EXPECT_EQ(out.mel_bins, 64);
  EXPECT_EQ(out.frames, 344);
  EXPECT_EQ(out.stage, Stage::kRawDb);
  for (float v : out.data) ASSERT_EQ(v, out.data[0]);
}

TEST(MelSpectrogramTest, TopDbClamp) {
  const MelSpectrogram mel;
  const auto out = mel(dsp::Standardize(SineClip(3000.0, 44100, 44100, 1)));
  const float peak = *std::max_element(out.data.begin(), out.data.end());
  const float low = *std::min_element(out.data.begin(), out.data.end());
  EXPECT_NEAR(peak - low, 80.0f, 1e-3);
}

TEST(MelSpectrogramTest, ThousandHertzLandsInCoveringFilter) {
  const MelSpectrogram mel;
  const auto out = mel(dsp::Standardize(SineClip(1000.0)));
  const auto& edges = mel.filterbank().edges_hz();
  for (int c = 0; c < 2; ++c) {
    for (int t = 1; t + 1 < out.frames; ++t) {
      int best = 0;
      for (int m = 1; m < 64; ++m)
        if (out.at(c, m, t) > out.at(c, best, t)) best = m;
      ASSERT_LT(edges[best], 1000.0) << t;
      ASSERT_GT(edges[best + 2], 1000.0) << t;
    }
  }
}

TEST(MaskTest, ZeroWidthIsIdentity) {
  auto s = RandomSpec(1);
  const auto before = s;
  Rng rng(2);
  FreqMask(s, 0, rng);
  TimeMask(s, 0, rng);
  EXPECT_EQ(s.data, before.data);
}

TEST(MaskTest, FreqMaskMakesRowsConstant) {
  for (uint64_t seed = 0; seed < 30; ++seed) {
    auto s = RandomSpec(100 + seed);
    const auto before = s;
    const float fill = static_cast<float>(TensorMean(s));
    Rng rng(seed);
    FreqMask(s, 6, rng);
    int masked = 0;
    for (int m = 0; m < 64; ++m) {
      bool constant = true;
      for (int c = 0; c < 2; ++c)
        for (int t = 0; t < 344; ++t) constant &= s.at(c, m, t) == fill;
      if (constant) {
        ++masked;
      } else {
        for (int c = 0; c < 2; ++c)
          for (int t = 0; t < 344; ++t) ASSERT_EQ(s.at(c, m, t), before.at(c, m, t));
      }
    }
    EXPECT_LE(masked, 6);
  }
}

TEST(MaskTest, TimeMaskLeavesOtherColumnsUntouched) {
  auto s = RandomSpec(7);
  const auto before = s;
  Rng rng(8);
  TimeMask(s, 34, rng);
  int masked = 0;
  for (int t = 0; t < 344; ++t) {
    bool changed = false;
    for (int c = 0; c < 2; ++c)
      for (int m = 0; m < 64; ++m) changed |= s.at(c, m, t) != before.at(c, m, t);
    if (changed) {
      ++masked;
      for (int c = 0; c < 2; ++c)
        for (int m = 1; m < 64; ++m) ASSERT_EQ(s.at(c, m, t), s.at(0, 0, t));
    }
  }
  EXPECT_LE(masked, 34);
}

TEST(MaskTest, ChangeCountBound) {
  dsp::AugmentConfig cfg;
  cfg.n_freq_masks = 2;
  cfg.n_time_masks = 3;
  const size_t bound = (2u * 6 * 344 + 3u * 34 * 64) * 2;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    auto s = RandomSpec(seed);
    const auto before = s;
    Rng rng(seed + 1000);
    ApplyMasks(s, cfg, rng);
    size_t changed = 0;
    for (size_t i = 0; i < s.data.size(); ++i) changed += s.data[i] != before.data[i];
    EXPECT_LE(changed, bound);
  }
}

TEST(NormalizeTest, TwoValued) {
  SpectrogramTensor s(1, 2, 2);
  s.data = {0, 2, 0, 2};
  const auto stats = Normalize(s);
  EXPECT_DOUBLE_EQ(stats.mu, 1.0);
  EXPECT_DOUBLE_EQ(stats.sigma, 1.0);
  EXPECT_EQ(s.data, (std::vector<float>{-1, 1, -1, 1}));
  EXPECT_EQ(s.stage, Stage::kNormalized);
}

TEST(NormalizeTest, ConstantBecomesZero) {
  SpectrogramTensor s(2, 3, 4);
  std::fill(s.data.begin(), s.data.end(), -37.5f);
  Normalize(s);
  for (float v : s.data) EXPECT_EQ(v, 0.0f);
}

TEST(NormalizeTest, FixedPointAndReconstruction) {
  auto s = RandomSpec(5);
  const auto raw = s;
  const auto stats = Normalize(s);
  for (size_t i = 0; i < s.data.size(); ++i)
    ASSERT_NEAR(s.data[i] * stats.sigma + stats.mu, raw.data[i], 1e-5 * std::max(1.0f, std::abs(raw.data[i])));
  const auto once = s;
  Normalize(s);
  for (size_t i = 0; i < s.data.size(); ++i) ASSERT_NEAR(s.data[i], once.data[i], 1e-6);
}

class ExtractTest : public ::testing::Test {
 protected:
  void SetUp() override {
    path_ = dir_.path() / "a.wav";
    auto clip = SineClip(440.0, 22050, 30000, 1);
    Rng rng(3);
    for (float& v : clip.channels[0]) v += static_cast<float>(rng.Uniform(-0.05, 0.05));
    audio::WritePcm16(path_, clip);
  }
  testing::TempDir dir_;
  std::filesystem::path path_;
};

void ExpectNormalized(const SpectrogramTensor& s) {
  ASSERT_EQ(s.channels, 2);
  ASSERT_EQ(s.mel_bins, 64);
  ASSERT_EQ(s.frames, 344);
  double sum = 0.0, ss = 0.0;
  for (float v : s.data) sum += v;
  const double mu = sum / s.data.size();
  for (float v : s.data) ss += (v - mu) * (v - mu);
  EXPECT_LT(std::abs(mu), 1e-4);
  EXPECT_LT(std::abs(std::sqrt(ss / s.data.size()) - 1.0), 1e-3);
}

TEST_F(ExtractTest, DeterministicWithoutAugmentation) {
  dsp::AugmentConfig off;
  off.enabled = false;
  Rng a(1), b(2);
  const auto x = ExtractFeatures(path_, off, a);
  EXPECT_EQ(x, ExtractFeatures(path_, off, b));
  ExpectNormalized(x);
}

TEST_F(ExtractTest, AugmentedIsDeterministicPerSeed) {
  dsp::AugmentConfig on;
  Rng a(DeriveSeed(5, SeedStream::kAugment, 1, 2)), b(DeriveSeed(5, SeedStream::kAugment, 1, 2));
  const auto x = ExtractFeatures(path_, on, a);
  EXPECT_EQ(x, ExtractFeatures(path_, on, b));
  ExpectNormalized(x);
}

TEST_F(ExtractTest, CacheRoundTripAndEquivalence) {
  dsp::AugmentConfig off;
  off.enabled = false;
  const MelSpectrogram mel;
  const FeatureCache cache(dir_.path() / "cache", mel.config());
  Rng rng(0);
  const auto plain = ExtractFeatures(path_, off, rng, mel, nullptr);
  const auto first = ExtractFeatures(path_, off, rng, mel, &cache);
  ASSERT_TRUE(std::filesystem::exists(cache.PathFor(path_)));
  const auto second = ExtractFeatures(path_, off, rng, mel, &cache);
  EXPECT_EQ(plain, first);
  EXPECT_EQ(plain, second);
  const auto raw = cache.Load(path_);
  ASSERT_TRUE(raw.has_value());
  EXPECT_EQ(*raw, mel(dsp::Standardize(audio::ReadWav(path_))));
}

TEST_F(ExtractTest, ErrorsCarryPath) {
  dsp::AugmentConfig off;
  Rng rng(0);
  const auto missing = dir_.path() / "nope.wav";
  try {
    ExtractFeatures(missing, off, rng);
    FAIL();
  } catch (const FeatureError& e) {
    EXPECT_NE(std::string(e.what()).find("nope.wav"), std::string::npos);
  }
}

TEST(TensorFileTest, RoundTripAndCorruption) {
  testing::TempDir dir;
  const auto s = RandomSpec(9);
  const auto p = dir.path() / "x.usfc";
  WriteTensorFile(p, s);
  EXPECT_EQ(ReadTensorFile(p).data, s.data);
  EXPECT_EQ(std::filesystem::file_size(p), 18u + 4u * s.data.size());
  std::filesystem::resize_file(p, 100);
  EXPECT_THROW(ReadTensorFile(p), std::runtime_error);
}

}  // namespace
}  // namespace urban::features
