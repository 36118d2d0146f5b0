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
#include "urban/dsp.hpp"

namespace urban::dsp {
namespace {

audio::AudioClip Clip(int rate, std::vector<std::vector<float>> channels) {
  audio::AudioClip c;
  c.sample_rate_hz = rate;
  c.channels = std::move(channels);
  return c;
}

audio::AudioClip Sine(int rate, double hz, size_t n, int channels = 1) {
  std::vector<float> s(n);
  for (size_t i = 0; i < n; ++i) s[i] = static_cast<float>(std::sin(2.0 * std::numbers::pi * hz * i / rate));
  return Clip(rate, std::vector<std::vector<float>>(static_cast<size_t>(channels), s));
}

TEST(ResampleTest, SameRateIsBitIdentical) {
  const auto in = Sine(44100, 440.0, 1000, 2);
  EXPECT_EQ(Resample(in).channels, in.channels);
}

TEST(ResampleTest, ConstantStaysConstant) {
  const auto out = Resample(Clip(22050, {std::vector<float>(100, 0.7f)}));
  EXPECT_EQ(out.sample_rate_hz, 44100);
  ASSERT_EQ(out.frames(), 200u);
  for (float v : out.channels[0]) EXPECT_FLOAT_EQ(v, 0.7f);
}

TEST(ResampleTest, RampWithEdgeHold) {
  const auto out = Resample(Clip(2, {{0, 1, 2, 3}}), 4);
  EXPECT_EQ(out.channels[0], (std::vector<float>{0, 0.5f, 1, 1.5f, 2, 2.5f, 3, 3}));
}

TEST(ResampleTest, LengthIsRounded) {
  EXPECT_EQ(Resample(Clip(3, {std::vector<float>(10)}), 4).frames(), 13u);  // 13.33
  EXPECT_EQ(Resample(Clip(8000, {std::vector<float>(3)}), 44100).frames(), 17u);  // 16.54
}

TEST(ResampleTest, RoundTripLowFrequencySine) {
  for (int rate : {8000, 16000, 22050, 48000}) {
    const auto in = Sine(rate, 440.0, static_cast<size_t>(rate / 2));
    const auto back = Resample(Resample(in, 44100), rate);
    ASSERT_EQ(back.frames(), in.frames());
    double worst = 0.0;
    for (size_t i = 0; i + 2 < in.frames(); ++i)
      worst = std::max(worst, static_cast<double>(std::abs(back.channels[0][i] - in.channels[0][i])));
    EXPECT_LT(worst, 0.01) << rate;
  }
}

TEST(ResampleTest, Errors) {
  EXPECT_THROW(Resample(Clip(8000, {{}})), std::invalid_argument);
  EXPECT_THROW(Resample(Clip(8000, {})), std::invalid_argument);
  EXPECT_THROW(Resample(Clip(8000, {{1.0f}}), 0), std::invalid_argument);
}

TEST(ResampleTest, SingleSampleNeverVanishes) {
  const auto out = Resample(Clip(96000, {{0.5f}}), 44100);
  ASSERT_EQ(out.frames(), 1u);
  EXPECT_FLOAT_EQ(out.channels[0][0], 0.5f);
}

TEST(RechannelTest, MonoIsDuplicated) {
  const auto out = Rechannel(Clip(8000, {{0.1f, -0.2f}}));
  ASSERT_EQ(out.channel_count(), 2u);
  EXPECT_EQ(out.channels[0], (std::vector<float>{0.1f, -0.2f}));
  EXPECT_EQ(out.channels[1], out.channels[0]);
}

TEST(RechannelTest, StereoUnchanged) {
  const auto in = Clip(8000, {{0.1f, 0.2f}, {0.3f, 0.4f}});
  EXPECT_EQ(Rechannel(in).channels, in.channels);
}

TEST(FixLengthTest, PadTruncateKeep) {
  EXPECT_EQ(FixLength(Clip(1, {{1, 1, 1}}), 5).channels[0], (std::vector<float>{1, 1, 1, 0, 0}));
  std::vector<float> longer(200000);
  for (size_t i = 0; i < longer.size(); ++i) longer[i] = static_cast<float>(i);
  const auto cut = FixLength(Clip(44100, {longer}));
  ASSERT_EQ(cut.frames(), kStandardLength);
  EXPECT_TRUE(std::equal(cut.channels[0].begin(), cut.channels[0].end(), longer.begin()));
  const auto exact = Clip(44100, {std::vector<float>(kStandardLength, 0.25f)});
  EXPECT_EQ(FixLength(exact).channels, exact.channels);
}

TEST(StandardizeTest, CanonicalClipUnchanged) {
  const auto in = Sine(44100, 300.0, kStandardLength, 2);
  const StandardClip s = Standardize(in);
  EXPECT_EQ(s.channel(0), in.channels[0]);
  EXPECT_EQ(s.channel(1), in.channels[1]);
}

TEST(StandardizeTest, MonoTwoSecondsAt22050) {
  const auto in = Sine(22050, 200.0, 44100);
  const StandardClip s = Standardize(in);
  ASSERT_EQ(s.channel(0).size(), kStandardLength);
  EXPECT_EQ(s.channel(0), s.channel(1));
  for (size_t i = 88200; i < kStandardLength; ++i) ASSERT_EQ(s.channel(0)[i], 0.0f) << i;
  EXPECT_NE(s.channel(0)[1000], 0.0f);
}

TEST(StandardizeTest, Idempotent) {
  const StandardClip once = Standardize(Sine(16000, 500.0, 30000));
  const StandardClip twice = Standardize(once.ToAudioClip());
  EXPECT_EQ(once, twice);
}

TEST(StandardizeTest, EmptyClipFails) {
  EXPECT_THROW(Standardize(Clip(44100, {{}})), std::invalid_argument);
}

TEST(TimeShiftTest, ZeroLimitIsIdentity) {
  const StandardClip s = Standardize(Sine(44100, 100.0, 1000));
  Rng rng(1);
  EXPECT_EQ(TimeShift(s, 0.0, rng), s);
}

TEST(TimeShiftTest, PreservesSamplesAndSameShiftOnBothChannels) {
  std::vector<float> left(kStandardLength), right(kStandardLength);
  Rng fill(2);
  for (size_t i = 0; i < kStandardLength; ++i) {
    left[i] = static_cast<float>(fill.Uniform(-1, 1));
    right[i] = -left[i];
  }
  const StandardClip s = Standardize(Clip(44100, {left, right}));
  Rng rng(3);
  const StandardClip t = TimeShift(s, 0.4, rng);
  for (size_t c = 0; c < 2; ++c) {
    auto a = s.channel(c), b = t.channel(c);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    EXPECT_EQ(a, b);
  }
  for (size_t i = 0; i < kStandardLength; ++i) ASSERT_EQ(t.channel(1)[i], -t.channel(0)[i]);
}

TEST(TimeShiftTest, DeterministicForSameRngState) {
  const StandardClip s = Standardize(Sine(44100, 100.0, 5000));
  Rng a(9), b(9);
  EXPECT_EQ(TimeShift(s, 0.4, a), TimeShift(s, 0.4, b));
}

TEST(TimeShiftTest, DrawsCoverBothSignsWithinBound) {
  Rng rng(4);
  const int64_t bound = static_cast<int64_t>(std::floor(0.4 * kStandardLength));
  bool neg = false, pos = false;
  for (int i = 0; i < 1000; ++i) {
    const int64_t s = DrawShift(0.4, kStandardLength, rng);
    EXPECT_LE(std::abs(s), bound);
    neg |= s < 0;
    pos |= s > 0;
  }
  EXPECT_TRUE(neg && pos);
}

TEST(RotateTest, ForwardThenBackRestores) {
  std::vector<float> v = {1, 2, 3, 4, 5};
  RotateInPlace(v, 2);
  EXPECT_EQ(v, (std::vector<float>{4, 5, 1, 2, 3}));
  RotateInPlace(v, -2);
  EXPECT_EQ(v, (std::vector<float>{1, 2, 3, 4, 5}));
  RotateInPlace(v, 12);
  RotateInPlace(v, -12);
  EXPECT_EQ(v, (std::vector<float>{1, 2, 3, 4, 5}));
}

TEST(AugmentConfigTest, Validation) {
  AugmentConfig c;
  EXPECT_NO_THROW(c.Validate());
  EXPECT_EQ(c.freq_mask_max, 6);
  EXPECT_EQ(c.time_mask_max, 34);
  c.shift_limit = 1.5;
  EXPECT_THROW(c.Validate(), std::invalid_argument);
  c = {};
  c.time_mask_max = -1;
  EXPECT_THROW(c.Validate(), std::invalid_argument);
}

}  // namespace
}  // namespace urban::dsp
