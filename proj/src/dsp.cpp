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

#include "urban/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace urban::dsp {
namespace {

void RequireNonEmpty(const audio::AudioClip& clip) {
  if (clip.channels.empty()) throw std::invalid_argument("clip has no channels");
  for (const auto& ch : clip.channels)
    if (ch.empty()) throw std::invalid_argument("clip has an empty channel");
}

}  // namespace

audio::AudioClip StandardClip::ToAudioClip() const {
  audio::AudioClip clip;
  clip.sample_rate_hz = kStandardRateHz;
  clip.channels.assign(channels_.begin(), channels_.end());
  return clip;
}

void AugmentConfig::Validate() const {
  if (!(shift_limit >= 0.0 && shift_limit <= 1.0))
    throw std::invalid_argument("shift_limit must lie in [0, 1]");
  if (freq_mask_max < 0 || time_mask_max < 0) throw std::invalid_argument("mask widths must be >= 0");
  if (n_freq_masks < 0 || n_time_masks < 0) throw std::invalid_argument("mask counts must be >= 0");
}

audio::AudioClip Resample(const audio::AudioClip& clip, int target_hz) {
  RequireNonEmpty(clip);
  if (target_hz <= 0) throw std::invalid_argument("target sample rate must be positive");
  if (clip.sample_rate_hz <= 0) throw std::invalid_argument("source sample rate must be positive");
  if (clip.sample_rate_hz == target_hz) return clip;

  const double step = static_cast<double>(clip.sample_rate_hz) / target_hz;
  const size_t n_in = clip.frames();
  const auto n_out = std::max<size_t>(
      1, static_cast<size_t>(std::llround(static_cast<double>(n_in) * target_hz / clip.sample_rate_hz)));

  audio::AudioClip out;
  out.sample_rate_hz = target_hz;
  out.channels.reserve(clip.channel_count());
  for (const auto& in : clip.channels) {
    std::vector<float> res(n_out);
    for (size_t i = 0; i < n_out; ++i) {
      const double pos = static_cast<double>(i) * step;
      const auto i0 = static_cast<size_t>(pos);
      if (i0 + 1 >= n_in) {
        res[i] = in[n_in - 1];
        continue;
      }
      const double frac = pos - static_cast<double>(i0);
      const double a = in[i0];
      res[i] = static_cast<float>(a + frac * (static_cast<double>(in[i0 + 1]) - a));
    }
    out.channels.push_back(std::move(res));
  }
  return out;
}

audio::AudioClip Rechannel(const audio::AudioClip& clip, int target_channels) {
  RequireNonEmpty(clip);
  if (target_channels != kStandardChannels)
    throw std::invalid_argument("only two-channel output is supported");
  if (clip.channel_count() > 2) throw std::invalid_argument("clip has more than two channels");
  if (clip.channel_count() == 2) return clip;
  audio::AudioClip out;
  out.sample_rate_hz = clip.sample_rate_hz;
  out.channels = {clip.channels[0], clip.channels[0]};
  return out;
}

audio::AudioClip FixLength(const audio::AudioClip& clip, size_t target_len) {
  RequireNonEmpty(clip);
  audio::AudioClip out = clip;
  for (auto& ch : out.channels) ch.resize(target_len, 0.0f);
  return out;
}

StandardClip Standardize(const audio::AudioClip& clip) {
  audio::AudioClip fixed = FixLength(Rechannel(Resample(clip)));
  return StandardClip({std::move(fixed.channels[0]), std::move(fixed.channels[1])});
}

int64_t DrawShift(double shift_limit, size_t length, Rng& rng) {
  const auto bound = static_cast<int64_t>(std::floor(shift_limit * static_cast<double>(length)));
  return rng.UniformInt(-bound, bound);
}

void RotateInPlace(std::vector<float>& samples, int64_t shift) {
  if (samples.empty()) return;
  const auto n = static_cast<int64_t>(samples.size());
  const int64_t s = ((shift % n) + n) % n;
  std::rotate(samples.begin(), samples.begin() + (n - s), samples.end());
}

StandardClip TimeShift(const StandardClip& clip, double shift_limit, Rng& rng) {
  const int64_t shift = DrawShift(shift_limit, kStandardLength, rng);
  auto channels = clip.channels_;
  for (auto& ch : channels) RotateInPlace(ch, shift);
  return StandardClip(std::move(channels));
}

}  // namespace urban::dsp
