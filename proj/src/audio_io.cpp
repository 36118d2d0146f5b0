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

#include "urban/audio_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace urban::audio {
namespace {

constexpr uint16_t kTagPcm = 1;
constexpr uint16_t kTagFloat = 3;
constexpr uint16_t kTagExtensible = 0xFFFE;
constexpr size_t kMaxKeptChannels = 2;

uint16_t ReadU16(const uint8_t* p) { return static_cast<uint16_t>(p[0] | (p[1] << 8)); }

uint32_t ReadU32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

bool TagIs(const uint8_t* p, const char* tag) { return std::memcmp(p, tag, 4) == 0; }

struct Layout {
  WavFormat format;
  size_t data_offset = 0;
  size_t data_size = 0;
};

WavFormat ParseFmt(const uint8_t* p, uint32_t size) {
  using K = WavError::Kind;
  if (size < 16) throw WavError(K::kInvalidFmt, "fmt chunk shorter than 16 bytes");
  uint16_t tag = ReadU16(p);
  const uint16_t channels = ReadU16(p + 2);
  const uint32_t rate = ReadU32(p + 4);
  const uint16_t bits = ReadU16(p + 14);
  if (tag == kTagExtensible) {
    if (size < 40)
      throw WavError(K::kInvalidFmt, "WAVE_FORMAT_EXTENSIBLE fmt chunk shorter than 40 bytes");
    tag = ReadU16(p + 24);  // first two bytes of the sub-format GUID
  }
  if (channels == 0) throw WavError(K::kInvalidFmt, "fmt chunk declares zero channels");
  if (rate == 0 || rate > static_cast<uint32_t>(INT32_MAX))
    throw WavError(K::kInvalidFmt, "fmt chunk declares invalid sample rate " + std::to_string(rate));

  WavFormat f;
  f.bits_per_sample = bits;
  f.channel_count = channels;
  f.sample_rate_hz = static_cast<int>(rate);
  if (tag == kTagPcm) {
    f.codec = Codec::kIntegerPcm;
    if (bits != 8 && bits != 16 && bits != 24 && bits != 32)
      throw WavError(K::kUnsupportedFormat,
                     "unsupported PCM bit depth " + std::to_string(bits));
  } else if (tag == kTagFloat) {
    f.codec = Codec::kIeeeFloat;
    if (bits != 32)
      throw WavError(K::kUnsupportedFormat,
                     "unsupported IEEE float bit depth " + std::to_string(bits));
  } else {
    throw WavError(K::kUnsupportedFormat, "unsupported codec tag " + std::to_string(tag));
  }
  return f;
}

Layout ParseLayout(std::span<const uint8_t> bytes) {
  using K = WavError::Kind;
  if (bytes.size() < 12 || !TagIs(bytes.data(), "RIFF") || !TagIs(bytes.data() + 8, "WAVE"))
    throw WavError(K::kInvalidRiff, "invalid RIFF header");

  Layout layout;
  bool have_fmt = false;
  bool have_data = false;
  size_t pos = 12;
  while (pos + 8 <= bytes.size() && !(have_fmt && have_data)) {
    const uint8_t* chunk = bytes.data() + pos;
    const uint32_t size = ReadU32(chunk + 4);
    const size_t body = pos + 8;
    const size_t available = bytes.size() - body;
    if (TagIs(chunk, "fmt ")) {
      if (size > available) throw WavError(K::kInvalidFmt, "fmt chunk exceeds buffer");
      layout.format = ParseFmt(chunk + 8, size);
      have_fmt = true;
    } else if (TagIs(chunk, "data")) {
      if (size > available)
        throw WavError(K::kDataOverrun,
                       "data chunk declares " + std::to_string(size) + " bytes but only " +
                           std::to_string(available) + " remain");
      layout.data_offset = body;
      layout.data_size = size;
      have_data = true;
    }
    pos = body + size + (size & 1u);
  }
  if (!have_fmt) throw WavError(K::kMissingFmt, "missing fmt chunk");
  if (!have_data) throw WavError(K::kMissingData, "missing data chunk");
  return layout;
}

float DecodeSample(const uint8_t* p, const WavFormat& f) {
  if (f.codec == Codec::kIeeeFloat) {
    const uint32_t bits = ReadU32(p);
    float v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
  }
  switch (f.bits_per_sample) {
    case 8:
      return static_cast<float>((static_cast<int>(p[0]) - 128) / 128.0);
    case 16:
      return static_cast<float>(static_cast<int16_t>(ReadU16(p)) / 32768.0);
    case 24: {
      int32_t v = static_cast<int32_t>(p[0] | (p[1] << 8) | (p[2] << 16));
      if (v & 0x800000) v -= 0x1000000;
      return static_cast<float>(v / 8388608.0);
    }
    default:
      return static_cast<float>(static_cast<int32_t>(ReadU32(p)) / 2147483648.0);
  }
}

void PutU16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v & 0xff));
  out.push_back(static_cast<uint8_t>(v >> 8));
}

void PutU32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xff));
}

void PutTag(std::vector<uint8_t>& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

}  // namespace

WavFormat ProbeFormat(std::span<const uint8_t> bytes) { return ParseLayout(bytes).format; }

AudioClip DecodeWav(std::span<const uint8_t> bytes) {
  const Layout layout = ParseLayout(bytes);
  const WavFormat& f = layout.format;
  const size_t sample_bytes = static_cast<size_t>(f.bits_per_sample / 8);
  const size_t frame_bytes = sample_bytes * static_cast<size_t>(f.channel_count);
  const size_t frames = layout.data_size / frame_bytes;
  const size_t kept = std::min<size_t>(static_cast<size_t>(f.channel_count), kMaxKeptChannels);

  AudioClip clip;
  clip.sample_rate_hz = f.sample_rate_hz;
  clip.channels.assign(kept, std::vector<float>(frames));
  const uint8_t* data = bytes.data() + layout.data_offset;
  for (size_t i = 0; i < frames; ++i) {
    const uint8_t* frame = data + i * frame_bytes;
    for (size_t c = 0; c < kept; ++c) clip.channels[c][i] = DecodeSample(frame + c * sample_bytes, f);
  }
  return clip;
}

std::vector<uint8_t> ReadFileBytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

AudioClip ReadWav(const std::filesystem::path& path) {
  const std::vector<uint8_t> bytes = ReadFileBytes(path);
  try {
    return DecodeWav(bytes);
  } catch (const WavError& e) {
    throw WavError(e.kind(), path.string() + ": " + e.what());
  }
}

std::vector<uint8_t> EncodePcm16(const AudioClip& clip) {
  const auto channels = static_cast<uint16_t>(clip.channel_count());
  const auto frames = clip.frames();
  const uint32_t data_size = static_cast<uint32_t>(frames * channels * 2);
  std::vector<uint8_t> out;
  out.reserve(44 + data_size);
  PutTag(out, "RIFF");
  PutU32(out, 36 + data_size);
  PutTag(out, "WAVE");
  PutTag(out, "fmt ");
  PutU32(out, 16);
  PutU16(out, kTagPcm);
  PutU16(out, channels);
  PutU32(out, static_cast<uint32_t>(clip.sample_rate_hz));
  PutU32(out, static_cast<uint32_t>(clip.sample_rate_hz) * channels * 2);
  PutU16(out, static_cast<uint16_t>(channels * 2));
  PutU16(out, 16);
  PutTag(out, "data");
  PutU32(out, data_size);
  for (size_t i = 0; i < frames; ++i) {
    for (const auto& ch : clip.channels) {
      const double scaled = std::nearbyint(static_cast<double>(ch[i]) * 32768.0);
      const auto q = static_cast<int16_t>(std::clamp(scaled, -32768.0, 32767.0));
      PutU16(out, static_cast<uint16_t>(q));
    }
  }
  return out;
}

void WritePcm16(const std::filesystem::path& path, const AudioClip& clip) {
  const std::vector<uint8_t> bytes = EncodePcm16(clip);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace urban::audio
