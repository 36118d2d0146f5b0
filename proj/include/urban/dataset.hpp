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

#ifndef URBAN_DATASET_HPP_
#define URBAN_DATASET_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace urban::dataset {

inline constexpr int kNumClasses = 10;

// UrbanSound8K labels in classID order.
inline constexpr std::array<std::string_view, kNumClasses> kClassNames = {
    "air_conditioner", "car_horn", "children_playing", "dog_bark", "drilling",
    "engine_idling",   "gun_shot", "jackhammer",       "siren",    "street_music"};

// Autonomous-vehicle subset: everything except drilling, jackhammer and
// street_music.
inline constexpr std::array<int, 7> kAv7ClassIds = {0, 1, 2, 3, 5, 6, 8};
inline constexpr std::array<int, 10> kAll10ClassIds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};

inline constexpr size_t kFullCorpusSize = 8732;

struct ManifestEntry {
  std::string file_name;
  int fold = 0;
  int class_id = 0;
  int64_t source_id = 0;
  double start_s = 0.0;
  double end_s = 0.0;
  int salience = 0;
  std::filesystem::path path;  // <root>/fold<fold>/<file_name>
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  std::vector<std::string> class_names;
  std::filesystem::path root_path;
};

// Metadata or corpus-layout problem. `row` is the 1-based line number in the
// CSV (the header is line 1), or 0 when not tied to a row.
class ManifestError : public std::runtime_error {
 public:
  ManifestError(const std::string& what, size_t row = 0)
      : std::runtime_error(what), row_(row) {}
  size_t row() const { return row_; }

 private:
  size_t row_;
};

DatasetManifest ParseMetadata(std::string_view csv_text, const std::filesystem::path& root);

// Candidate metadata locations, in probe order.
std::vector<std::filesystem::path> MetadataCandidates(const std::filesystem::path& root);

// Locates the CSV (<root>/UrbanSound8K.csv or <root>/metadata/UrbanSound8K.csv)
// and the audio folders (<root>/fold<n> or <root>/audio/fold<n>).
DatasetManifest LoadManifest(const std::filesystem::path& root);

class ClassSubset {
 public:
  ClassSubset() = default;
  // Kept IDs are sorted; duplicates, out-of-range IDs and an empty list throw
  // std::invalid_argument.
  explicit ClassSubset(std::span<const int> kept_class_ids);

  const std::vector<int>& kept_class_ids() const { return kept_; }
  int size() const { return static_cast<int>(kept_.size()); }
  bool Contains(int class_id) const;
  // Contiguous index of an original class ID, -1 if not kept.
  int IndexOf(int class_id) const;
  int ClassIdAt(int index) const { return kept_.at(static_cast<size_t>(index)); }
  std::vector<std::string> Names() const;

  bool operator==(const ClassSubset&) const = default;

 private:
  std::vector<int> kept_;
  std::array<int, kNumClasses> remap_{};
};

ClassSubset Av7Subset();
ClassSubset All10Subset();

struct SubsetSelection {
  std::vector<ManifestEntry> entries;
  ClassSubset subset;
};

SubsetSelection SelectSubset(const DatasetManifest& manifest, std::span<const int> kept_class_ids);

enum class SplitMode { kRandomStratified, kFoldHoldout };

struct SplitAssignment {
  std::vector<size_t> train_indices;  // ascending
  std::vector<size_t> test_indices;   // ascending
  uint64_t seed = 0;
  double ratio = 0.0;
  std::vector<std::string> warnings;
};

// Seeded shuffle split. Stratified mode splits each class independently with
// round(ratio * n_c) training items; a class with one item goes to train with
// a warning. Throws std::invalid_argument unless 0 < ratio < 1.
SplitAssignment Split(std::span<const ManifestEntry> entries, double ratio, uint64_t seed,
                      bool stratified);

// Entries whose fold is in `test_folds` form the test set.
SplitAssignment SplitByFold(std::span<const ManifestEntry> entries, std::span<const int> test_folds);

}  // namespace urban::dataset

#endif  // URBAN_DATASET_HPP_
