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

#ifndef URBAN_RUN_CONFIG_HPP_
#define URBAN_RUN_CONFIG_HPP_

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "urban/features.hpp"
#include "urban/training.hpp"

namespace urban {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// "av7", "all10" or a comma-separated list of class IDs.
std::vector<int> ParseClassList(std::string_view text);
std::string ClassListName(const std::vector<int>& ids);

// Everything that determines a run. Serialized as "key = value" lines; '#'
// starts a comment. Doubles are written in shortest round-trip form, so a
// parsed file reproduces the run exactly.
//
// Keys and defaults:
//   data            corpus root (URBAN_ACOUSTICS_DATA when unset)
//   out             output directory
//   cache           feature cache directory, empty for none
//   threads         0 = OpenMP default
//   classes         av7
//   epochs          100
//   batch_size      16
//   lr              0.001
//   beta1 / beta2   0.9 / 0.999
//   adam_eps        1e-08
//   bn_momentum     0.1
//   bn_eps          1e-05
//   seed            0
//   split           random | folds (random)
//   split_ratio     0.8
//   test_folds      10
//   precision       f32 | f64 (f32)
//   eval_interval   1
//   clean_train_accuracy  false
//   augment         true
//   shift_limit     0.4
//   freq_mask_max   6
//   time_mask_max   34
//   n_freq_masks    1
//   n_time_masks    1
//   n_fft           1024
//   hop             512
//   n_mels          64
//   f_min_hz        0
//   f_max_hz        22050
//   top_db          80
//   drop_last_frame true
struct RunConfig {
  std::filesystem::path data;
  std::filesystem::path out;
  std::filesystem::path cache;
  int threads = 0;
  train::TrainConfig train;
  features::StftConfig stft;

  std::map<std::string, std::string> ToMap() const;
  // Unknown keys and malformed values throw ConfigError. Missing keys keep
  // their current values.
  void Apply(const std::map<std::string, std::string>& values);

  std::string Serialize() const;
  static std::map<std::string, std::string> ParseText(std::string_view text);

  void Save(const std::filesystem::path& path) const;
  static RunConfig Load(const std::filesystem::path& path);
};

}  // namespace urban

#endif  // URBAN_RUN_CONFIG_HPP_
