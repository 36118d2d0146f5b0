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

#include "urban/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "urban/rng.hpp"

namespace urban::dataset {
namespace {

constexpr std::array<std::string_view, 8> kRequiredColumns = {
    "slice_file_name", "fsID", "start", "end", "salience", "fold", "classID", "class"};

std::vector<std::string> SplitCsvLine(std::string_view line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field.push_back('"');
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        field.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(ch);
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
T ParseNumber(std::string_view text, std::string_view column, size_t row) {
  text = Trim(text);
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ManifestError("row " + std::to_string(row) + ": cannot parse " + std::string(column) +
                            " value '" + std::string(text) + "'",
                        row);
  }
  return value;
}

}  // namespace

DatasetManifest ParseMetadata(std::string_view csv_text, const std::filesystem::path& root) {
  if (csv_text.starts_with("\xEF\xBB\xBF")) csv_text.remove_prefix(3);

  DatasetManifest manifest;
  manifest.root_path = root;
  manifest.class_names.assign(kClassNames.begin(), kClassNames.end());

  std::map<std::string, size_t, std::less<>> columns;
  size_t line_no = 0;
  bool have_header = false;
  size_t pos = 0;
  while (pos <= csv_text.size()) {
    size_t end = csv_text.find('\n', pos);
    if (end == std::string_view::npos) end = csv_text.size();
    const std::string_view line = Trim(csv_text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;

    const std::vector<std::string> fields = SplitCsvLine(line);
    if (!have_header) {
      for (size_t i = 0; i < fields.size(); ++i) columns.emplace(std::string(Trim(fields[i])), i);
      for (std::string_view col : kRequiredColumns) {
        if (!columns.contains(col))
          throw ManifestError("missing required column '" + std::string(col) + "'", line_no);
      }
      have_header = true;
      continue;
    }

    auto field = [&](std::string_view col) -> std::string_view {
      const size_t idx = columns.find(col)->second;
      if (idx >= fields.size())
        throw ManifestError("row " + std::to_string(line_no) + ": missing field '" +
                                std::string(col) + "'",
                            line_no);
      return Trim(fields[idx]);
    };

    ManifestEntry e;
    e.file_name = std::string(field("slice_file_name"));
    e.source_id = ParseNumber<int64_t>(field("fsID"), "fsID", line_no);
    e.start_s = ParseNumber<double>(field("start"), "start", line_no);
    e.end_s = ParseNumber<double>(field("end"), "end", line_no);
    e.salience = ParseNumber<int>(field("salience"), "salience", line_no);
    e.fold = ParseNumber<int>(field("fold"), "fold", line_no);
    e.class_id = ParseNumber<int>(field("classID"), "classID", line_no);
    const std::string_view class_name = field("class");

    const std::string row = "row " + std::to_string(line_no);
    if (e.class_id < 0 || e.class_id >= kNumClasses)
      throw ManifestError(row + ": classID " + std::to_string(e.class_id) + " outside 0-9", line_no);
    if (class_name != kClassNames[static_cast<size_t>(e.class_id)])
      throw ManifestError(row + ": class '" + std::string(class_name) +
                              "' inconsistent with classID " + std::to_string(e.class_id),
                          line_no);
    if (e.fold < 1 || e.fold > 10)
      throw ManifestError(row + ": fold " + std::to_string(e.fold) + " outside 1-10", line_no);
    if (!(e.end_s >= e.start_s))
      throw ManifestError(row + ": end precedes start", line_no);
    if (e.end_s - e.start_s >= 5.0)
      throw ManifestError(row + ": slice is 5 s or longer", line_no);
    e.path = root / ("fold" + std::to_string(e.fold)) / e.file_name;
    manifest.entries.push_back(std::move(e));
  }
  if (!have_header) throw ManifestError("metadata CSV has no header row");
  if (manifest.entries.size() > kFullCorpusSize)
    throw ManifestError("metadata lists " + std::to_string(manifest.entries.size()) +
                        " entries, more than the corpus size");
  return manifest;
}

std::vector<std::filesystem::path> MetadataCandidates(const std::filesystem::path& root) {
  return {root / "UrbanSound8K.csv", root / "metadata" / "UrbanSound8K.csv"};
}

DatasetManifest LoadManifest(const std::filesystem::path& root) {
  std::filesystem::path csv_path;
  for (const auto& candidate : MetadataCandidates(root)) {
    if (std::filesystem::is_regular_file(candidate)) {
      csv_path = candidate;
      break;
    }
  }
  if (csv_path.empty()) {
    std::string msg = "metadata not found; looked for";
    for (const auto& c : MetadataCandidates(root)) msg += " " + c.string();
    throw ManifestError(msg);
  }
  std::ifstream in(csv_path, std::ios::binary);
  std::stringstream text;
  text << in.rdbuf();
  const std::filesystem::path audio_root =
      std::filesystem::is_directory(root / "audio") ? root / "audio" : root;
  try {
    return ParseMetadata(text.str(), audio_root);
  } catch (const ManifestError& e) {
    throw ManifestError(csv_path.string() + ": " + e.what(), e.row());
  }
}

ClassSubset::ClassSubset(std::span<const int> kept_class_ids) {
  if (kept_class_ids.empty()) throw std::invalid_argument("class subset is empty");
  kept_.assign(kept_class_ids.begin(), kept_class_ids.end());
  std::sort(kept_.begin(), kept_.end());
  if (std::adjacent_find(kept_.begin(), kept_.end()) != kept_.end())
    throw std::invalid_argument("class subset contains duplicate IDs");
  if (kept_.front() < 0 || kept_.back() >= kNumClasses)
    throw std::invalid_argument("class subset contains an ID outside 0-9");
  remap_.fill(-1);
  for (size_t i = 0; i < kept_.size(); ++i) remap_[static_cast<size_t>(kept_[i])] = static_cast<int>(i);
}

bool ClassSubset::Contains(int class_id) const { return IndexOf(class_id) >= 0; }

int ClassSubset::IndexOf(int class_id) const {
  if (class_id < 0 || class_id >= kNumClasses || kept_.empty()) return -1;
  return remap_[static_cast<size_t>(class_id)];
}

std::vector<std::string> ClassSubset::Names() const {
  std::vector<std::string> names;
  for (int id : kept_) names.emplace_back(kClassNames[static_cast<size_t>(id)]);
  return names;
}

ClassSubset Av7Subset() { return ClassSubset(kAv7ClassIds); }
ClassSubset All10Subset() { return ClassSubset(kAll10ClassIds); }

SubsetSelection SelectSubset(const DatasetManifest& manifest, std::span<const int> kept_class_ids) {
  SubsetSelection sel;
  sel.subset = ClassSubset(kept_class_ids);
  for (const auto& e : manifest.entries)
    if (sel.subset.Contains(e.class_id)) sel.entries.push_back(e);
  return sel;
}

SplitAssignment Split(std::span<const ManifestEntry> entries, double ratio, uint64_t seed,
                      bool stratified) {
  if (!(ratio > 0.0 && ratio < 1.0))
    throw std::invalid_argument("split ratio must lie strictly between 0 and 1");
  SplitAssignment out;
  out.seed = seed;
  out.ratio = ratio;
  Rng rng(DeriveSeed(seed, SeedStream::kSplit));

  std::map<int, std::vector<size_t>> groups;
  for (size_t i = 0; i < entries.size(); ++i)
    groups[stratified ? entries[i].class_id : 0].push_back(i);

  for (auto& [class_id, indices] : groups) {
    Shuffle(std::span<size_t>(indices), rng);
    size_t n_train = static_cast<size_t>(std::llround(ratio * static_cast<double>(indices.size())));
    if (indices.size() == 1) {
      n_train = 1;
      if (stratified)
        out.warnings.push_back("class " + std::to_string(class_id) +
                               " has a single sample; assigned to train");
    }
    out.train_indices.insert(out.train_indices.end(), indices.begin(), indices.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.test_indices.insert(out.test_indices.end(), indices.begin() + static_cast<std::ptrdiff_t>(n_train), indices.end());
  }
  std::sort(out.train_indices.begin(), out.train_indices.end());
  std::sort(out.test_indices.begin(), out.test_indices.end());
  return out;
}

SplitAssignment SplitByFold(std::span<const ManifestEntry> entries, std::span<const int> test_folds) {
  SplitAssignment out;
  for (size_t i = 0; i < entries.size(); ++i) {
    const bool test = std::find(test_folds.begin(), test_folds.end(), entries[i].fold) != test_folds.end();
    (test ? out.test_indices : out.train_indices).push_back(i);
  }
  if (!entries.empty())
    out.ratio = static_cast<double>(out.train_indices.size()) / static_cast<double>(entries.size());
  return out;
}

}  // namespace urban::dataset
