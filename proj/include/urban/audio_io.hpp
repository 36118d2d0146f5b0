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

#ifndef URBAN_AUDIO_IO_HPP_
#define URBAN_AUDIO_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace urban::audio {

// Decoded PCM audio. Samples are nominally in [-1, 1]; every channel has the
// same length.
struct AudioClip {
  std::vector<std::vector<float>> channels;
  int sample_rate_hz = 0;

  size_t channel_count() const { return channels.size(); }
  size_t frames() const { return channels.empty() ? 0 : channels.front().size(); }
};

enum class Codec { kIntegerPcm, kIeeeFloat };

struct WavFormat {
  Codec codec = Codec::kIntegerPcm;
  int bits_per_sample = 0;
  int channel_count = 0;
  int sample_rate_hz = 0;

  bool operator==(const WavFormat&) const = default;
};

class WavError : public std::runtime_error {
 public:
  enum class Kind {
    kInvalidRiff,
    kMissingFmt,
    kInvalidFmt,
    kMissingData,
    kUnsupportedFormat,
    kDataOverrun,
  };

  WavError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// Parses the RIFF/WAVE headers only.
WavFormat ProbeFormat(std::span<const uint8_t> bytes);

// Integer PCM is scaled by 2^-(bits-1) (8-bit is unsigned and offset by 128),
// IEEE float passes through. Channels beyond the second are dropped.
AudioClip DecodeWav(std::span<const uint8_t> bytes);

std::vector<uint8_t> ReadFileBytes(const std::filesystem::path& path);
AudioClip ReadWav(const std::filesystem::path& path);

// Minimal 16-bit PCM writer (round to nearest, clipped to [-1, 1)). Used by the
// synthetic corpus generator and by round-trip tests.
std::vector<uint8_t> EncodePcm16(const AudioClip& clip);
void WritePcm16(const std::filesystem::path& path, const AudioClip& clip);

}  // namespace urban::audio

#endif  // URBAN_AUDIO_IO_HPP_
