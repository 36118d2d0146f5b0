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

#ifndef URBAN_TRAINING_HPP_
#define URBAN_TRAINING_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "urban/checkpoint.hpp"
#include "urban/dataset.hpp"
#include "urban/dsp.hpp"
#include "urban/features.hpp"
#include "urban/network.hpp"

namespace urban::train {

enum class Precision { kFloat32, kFloat64 };

struct TrainConfig {
  int epochs = 100;
  int batch_size = 16;
  uint64_t seed = 0;
  double split_ratio = 0.8;
  std::vector<int> class_ids{dataset::kAv7ClassIds.begin(), dataset::kAv7ClassIds.end()};
  dsp::AugmentConfig augment;
  dataset::SplitMode split_mode = dataset::SplitMode::kRandomStratified;
  std::vector<int> test_folds{10};
  Precision precision = Precision::kFloat32;
  int eval_interval = 1;  // 0 evaluates only after the last epoch
  // Replace the running train-mode accuracy with an eval-mode pass over the
  // un-augmented training set.
  bool clean_train_accuracy = false;
  nn::AdamConfig adam;
  nn::BatchNormOptions batch_norm;

  // Throws std::invalid_argument.
  void Validate() const;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  std::optional<double> test_accuracy;

  bool operator==(const EpochRecord&) const = default;
};

// Rows are true classes, columns predictions.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::vector<std::string> class_names);

  int size() const { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& class_names() const { return names_; }
  int64_t count(int truth, int predicted) const { return counts_[Index(truth, predicted)]; }
  void Add(int truth, int predicted, int64_t n = 1);

  int64_t RowSum(int truth) const;
  int64_t Total() const;
  int64_t Trace() const;
  // trace / total; 0 for an empty matrix.
  double Accuracy() const;
  // Diagonal over row sum; nullopt for a class with no test items.
  std::optional<double> ClassAccuracy(int truth) const;

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  size_t Index(int truth, int predicted) const;

  std::vector<std::string> names_;
  std::vector<int64_t> counts_;
};

struct EvalResult {
  double accuracy = 0.0;
  ConfusionMatrix confusion;
  std::vector<std::optional<double>> per_class_accuracy;
  std::vector<int> predictions;  // per entry, class index
};

struct Prediction {
  int class_index = 0;
  std::string class_name;
  std::vector<double> probabilities;
};

// Shared feature extraction state: the mel transform and an optional disk
// cache for un-augmented tensors.
struct FeatureContext {
  features::MelSpectrogram mel;
  std::optional<features::FeatureCache> cache;

  explicit FeatureContext(const features::StftConfig& stft = {},
                          std::optional<std::filesystem::path> cache_dir = std::nullopt);
};

struct TrainOptions {
  // Called after every epoch; returning false stops training.
  std::function<bool(const EpochRecord&)> on_epoch;
  // When set, the best test-accuracy model is also written here.
  std::optional<std::filesystem::path> best_checkpoint;
  // Stored in the checkpoint metadata.
  std::map<std::string, std::string> settings;
};

struct TrainResult {
  nn::Checkpoint checkpoint;  // final model
  std::vector<EpochRecord> history;
  dataset::SplitAssignment split;
  std::vector<dataset::ManifestEntry> entries;  // subset entries the split indexes
  dataset::ClassSubset subset;
  std::optional<EvalResult> final_eval;         // absent when the test split is empty
};

// Seed fan-out: split from (seed), initialization from (seed), the epoch
// shuffle from (seed, epoch) and each training file's augmentation draws from
// (seed, epoch, entry index).
TrainResult Train(const dataset::DatasetManifest& manifest, const TrainConfig& config,
                  const FeatureContext& features, const TrainOptions& options = {});

// [begin, end) batch boundaries over n items; a trailing batch of one joins
// the previous batch.
std::vector<std::pair<size_t, size_t>> BatchRanges(size_t n, size_t batch_size);

// Reproduces the train/test split a config implies.
dataset::SplitAssignment MakeSplit(std::span<const dataset::ManifestEntry> entries, const TrainConfig& config);

// Eval-mode forward on un-augmented features. Ties go to the lowest class
// index. Throws std::invalid_argument on an empty entry list or a model whose
// classes differ from `subset`.
EvalResult Evaluate(const nn::Checkpoint& model, std::span<const dataset::ManifestEntry> entries,
                    const dataset::ClassSubset& subset, const FeatureContext& features,
                    int batch_size = 16);

Prediction Predict(const nn::Checkpoint& model, const std::filesystem::path& wav_path,
                   const FeatureContext& features);

// Un-augmented, normalized features as a [2, mel, frames] tensor.
nn::Tensor<float> FeatureTensor(const std::filesystem::path& wav_path, const FeatureContext& features);

void WriteHistoryCsv(const std::filesystem::path& path, std::span<const EpochRecord> history);
void WriteConfusionCsv(const std::filesystem::path& path, const ConfusionMatrix& m);
// Row-normalized, 4 decimals; an empty row is left blank.
void WriteNormalizedConfusionCsv(const std::filesystem::path& path, const ConfusionMatrix& m);

// Shortest decimal text that reads back to the same double.
std::string FormatDouble(double v);

}  // namespace urban::train

#endif  // URBAN_TRAINING_HPP_
