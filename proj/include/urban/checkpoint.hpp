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

#ifndef URBAN_CHECKPOINT_HPP_
#define URBAN_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "urban/network.hpp"

namespace urban::nn {

struct CheckpointMeta {
  uint64_t seed = 0;
  int64_t epoch = 0;
  std::vector<int> class_ids;  // original dataset IDs, model output order
  bool bn_stats_initialized = false;
  // Resolved training settings, stored verbatim.
  std::map<std::string, std::string> settings;

  bool operator==(const CheckpointMeta&) const = default;
};

struct Checkpoint {
  ModelConfig model;
  ModelParams<float> params;
  CheckpointMeta meta;
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Layout, little-endian throughout: "USND", u16 version, u8 K, u32 metadata
// length, UTF-8 JSON metadata, then per tensor: u16 name length, name, u8 rank,
// u32 dims, f32 payload.
inline constexpr uint16_t kCheckpointVersion = 1;

std::vector<uint8_t> EncodeCheckpoint(const Checkpoint& ckpt);
Checkpoint DecodeCheckpoint(std::span<const uint8_t> bytes);

void SaveCheckpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

}  // namespace urban::nn

#endif  // URBAN_CHECKPOINT_HPP_
