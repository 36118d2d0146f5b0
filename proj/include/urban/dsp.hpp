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

#ifndef URBAN_DSP_HPP_
#define URBAN_DSP_HPP_

#include <array>
#include <cstdint>
#include <vector>

#include "urban/audio_io.hpp"
#include "urban/rng.hpp"

namespace urban::dsp {

inline constexpr int kStandardRateHz = 44100;
inline constexpr int kStandardChannels = 2;
inline constexpr size_t kStandardLength = 176400;  // 4 s at 44.1 kHz

// Two channels of exactly kStandardLength samples at kStandardRateHz. Only
// Standardize and TimeShift create one.
class StandardClip {
 public:
  const std::vector<float>& channel(size_t c) const { return channels_.at(c); }
  const std::array<std::vector<float>, kStandardChannels>& channels() const { return channels_; }
  static constexpr int sample_rate_hz() { return kStandardRateHz; }

  audio::AudioClip ToAudioClip() const;

  bool operator==(const StandardClip&) const = default;

 private:
  explicit StandardClip(std::array<std::vector<float>, kStandardChannels> channels)
      : channels_(std::move(channels)) {}

  friend StandardClip Standardize(const audio::AudioClip& clip);
  friend StandardClip TimeShift(const StandardClip& clip, double shift_limit, Rng& rng);

  std::array<std::vector<float>, kStandardChannels> channels_;
};

struct AugmentConfig {
  bool enabled = true;
  double shift_limit = 0.4;
  int freq_mask_max = 6;   // floor(0.1 * 64)
  int time_mask_max = 34;  // floor(0.1 * 344)
  int n_freq_masks = 1;
  int n_time_masks = 1;

  // Throws std::invalid_argument on out-of-range values.
  void Validate() const;
};

// Linear interpolation at source positions i * src/dst, holding the last
// sample past the end. Output length is round(n * dst / src).
audio::AudioClip Resample(const audio::AudioClip& clip, int target_hz = kStandardRateHz);

// Mono is duplicated; stereo passes through. Only two output channels are
// supported.
audio::AudioClip Rechannel(const audio::AudioClip& clip, int target_channels = kStandardChannels);

// Truncates or zero-pads at the end.
audio::AudioClip FixLength(const audio::AudioClip& clip, size_t target_len = kStandardLength);

// Resample, then rechannel, then fix length.
StandardClip Standardize(const audio::AudioClip& clip);

// Uniform integer in [-floor(limit * length), +floor(limit * length)].
int64_t DrawShift(double shift_limit, size_t length, Rng& rng);

// Circular rotation: out[(i + shift) mod n] = in[i].
void RotateInPlace(std::vector<float>& samples, int64_t shift);

// Rotates both channels by the same DrawShift amount.
StandardClip TimeShift(const StandardClip& clip, double shift_limit, Rng& rng);

}  // namespace urban::dsp

#endif  // URBAN_DSP_HPP_
