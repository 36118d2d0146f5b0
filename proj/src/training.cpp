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

#include "urban/training.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "urban/layers.hpp"
#include "urban/rng.hpp"

namespace urban::train {
namespace {

using dataset::ManifestEntry;
using nn::Tensor;

std::ofstream OpenOut(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::string CsvField(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

nn::ModelConfig ModelFor(int num_classes, const features::StftConfig& stft, const nn::BatchNormOptions& bn) {
  nn::ModelConfig m = nn::ModelConfig::Paper(num_classes);
  m.in_height = stft.n_mels;
  m.in_width = stft.FrameCount(dsp::kStandardLength);
  m.batch_norm = bn;
  return m;
}

Tensor<float> ToTensor(features::SpectrogramTensor&& spec) {
  Tensor<float> t({spec.channels, spec.mel_bins, spec.frames});
  std::copy(spec.data.begin(), spec.data.end(), t.values().begin());
  return t;
}

template <typename T>
Tensor<T> Stack(std::span<const Tensor<float>* const> items) {
  const auto& s = items.front()->shape();
  Tensor<T> batch({static_cast<int64_t>(items.size()), s[0], s[1], s[2]});
  T* out = batch.data();
  for (const auto* item : items) {
    for (float v : item->values()) *out++ = static_cast<T>(v);
  }
  return batch;
}

template <typename T>
EvalResult EvaluateNetwork(nn::Network<T>& net, std::span<const Tensor<float>> feats, std::span<const int> labels,
                           const std::vector<std::string>& names, int batch_size) {
  EvalResult r;
  r.confusion = ConfusionMatrix(names);
  r.predictions.reserve(feats.size());
  for (const auto& [b, e] : BatchRanges(feats.size(), static_cast<size_t>(batch_size))) {
    std::vector<const Tensor<float>*> items;
    for (size_t i = b; i < e; ++i) items.push_back(&feats[i]);
    const Tensor<T> logits = net.Forward(Stack<T>(items), nn::Mode::kEval);
    const std::vector<int> pred = nn::ArgmaxRows(logits);
    for (size_t i = b; i < e; ++i) {
      r.predictions.push_back(pred[i - b]);
      r.confusion.Add(labels[i], pred[i - b]);
    }
  }
  r.accuracy = r.confusion.Accuracy();
  for (int k = 0; k < r.confusion.size(); ++k) r.per_class_accuracy.push_back(r.confusion.ClassAccuracy(k));
  return r;
}

void CheckModelMatchesSubset(const nn::Checkpoint& model, const dataset::ClassSubset& subset) {
  const bool ids_differ = !model.meta.class_ids.empty() && model.meta.class_ids != subset.kept_class_ids();
  if (model.model.num_classes != subset.size() || ids_differ)
    throw std::invalid_argument("class subset mismatch: model has " + std::to_string(model.model.num_classes) +
                                " classes, data subset has " + std::to_string(subset.size()));
}

nn::Network<float> LoadNetwork(const nn::Checkpoint& model) {
  nn::Network<float> net(model.model, model.params);
  net.set_bn_stats_initialized(model.meta.bn_stats_initialized);
  return net;
}

template <typename T>
nn::Checkpoint Snapshot(const nn::Network<T>& net, const TrainConfig& config, const dataset::ClassSubset& subset,
                        int epoch, const TrainOptions& options) {
  nn::Checkpoint c;
  c.model = net.config();
  c.params = nn::CastParams<float>(net.params());
  c.meta.seed = config.seed;
  c.meta.epoch = epoch;
  c.meta.class_ids = subset.kept_class_ids();
  c.meta.bn_stats_initialized = net.bn_stats_initialized();
  c.meta.settings = options.settings;
  return c;
}

template <typename T>
TrainResult TrainImpl(TrainResult result, const TrainConfig& config, const FeatureContext& fx,
                      const TrainOptions& options) {
  const auto& entries = result.entries;
  const auto& split = result.split;
  const dataset::ClassSubset& subset = result.subset;
  const std::vector<std::string> names = subset.Names();
  const features::FeatureCache* disk = fx.cache ? &*fx.cache : nullptr;

  std::vector<int> labels(entries.size());
  for (size_t i = 0; i < entries.size(); ++i) labels[i] = subset.IndexOf(entries[i].class_id);

  const nn::ModelConfig mc = ModelFor(subset.size(), fx.mel.config(), config.batch_norm);
  nn::Network<T> net(mc, nn::InitParams<T>(mc, config.seed));
  nn::Adam<T> adam(net.params(), config.adam);

  std::vector<Tensor<float>> test_feats;
  std::vector<int> test_labels;
  auto evaluate_test = [&]() -> std::optional<EvalResult> {
    if (split.test_indices.empty()) return std::nullopt;
    if (test_feats.empty()) {
      for (size_t i : split.test_indices) {
        test_feats.push_back(FeatureTensor(entries[i].path, fx));
        test_labels.push_back(labels[i]);
      }
    }
    return EvaluateNetwork(net, test_feats, test_labels, names, config.batch_size);
  };

  std::vector<Tensor<float>> clean_train;  // filled only for clean training accuracy
  std::vector<int> clean_labels;
  double best_test = -1.0;
  bool last_evaluated = false;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::vector<size_t> order = split.train_indices;
    Rng shuffle_rng(DeriveSeed(config.seed, SeedStream::kShuffle, static_cast<uint64_t>(epoch)));
    Shuffle(std::span<size_t>(order), shuffle_rng);

    double loss_sum = 0.0;
    int64_t correct = 0;
    for (const auto& [b, e] : BatchRanges(order.size(), static_cast<size_t>(config.batch_size))) {
      std::vector<Tensor<float>> feats;
      std::vector<int> batch_labels;
      for (size_t p = b; p < e; ++p) {
        const size_t idx = order[p];
        Rng aug_rng(DeriveSeed(config.seed, SeedStream::kAugment, static_cast<uint64_t>(epoch), idx));
        feats.push_back(ToTensor(features::ExtractFeatures(entries[idx].path, config.augment, aug_rng, fx.mel, disk)));
        batch_labels.push_back(labels[idx]);
      }
      std::vector<const Tensor<float>*> items;
      for (const auto& f : feats) items.push_back(&f);
      nn::ForwardCache<T> cache;
      const Tensor<T> logits = net.Forward(Stack<T>(items), nn::Mode::kTrain, &cache);
      const nn::LossAndGrad<T> lg = nn::SoftmaxCrossEntropy(logits, std::span<const int>(batch_labels));
      const std::vector<int> pred = nn::ArgmaxRows(logits);
      for (size_t i = 0; i < pred.size(); ++i) correct += pred[i] == batch_labels[i];
      loss_sum += lg.loss * static_cast<double>(e - b);
      const nn::ModelParams<T> grads = net.Backward(cache, lg.grad_logits);
      adam.Step(net.mutable_params(), grads);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    rec.train_accuracy = static_cast<double>(correct) / static_cast<double>(order.size());
    if (config.clean_train_accuracy) {
      if (clean_train.empty()) {
        for (size_t i : split.train_indices) {
          clean_train.push_back(FeatureTensor(entries[i].path, fx));
          clean_labels.push_back(labels[i]);
        }
      }
      rec.train_accuracy = EvaluateNetwork(net, clean_train, clean_labels, names, config.batch_size).accuracy;
    }
    const bool due = (config.eval_interval > 0 && epoch % config.eval_interval == 0) || epoch == config.epochs;
    last_evaluated = false;
    if (due) {
      if (auto ev = evaluate_test()) {
        rec.test_accuracy = ev->accuracy;
        result.final_eval = std::move(ev);
        last_evaluated = true;
        if (options.best_checkpoint && *rec.test_accuracy > best_test) {
          best_test = *rec.test_accuracy;
          nn::SaveCheckpoint(*options.best_checkpoint, Snapshot(net, config, subset, epoch, options));
        }
      }
    }
    result.history.push_back(rec);
    if (options.on_epoch && !options.on_epoch(rec)) break;
  }
  if (!last_evaluated) result.final_eval = evaluate_test();
  result.checkpoint = Snapshot(net, config, subset, result.history.back().epoch, options);
  return result;
}

}  // namespace

std::vector<std::pair<size_t, size_t>> BatchRanges(size_t n, size_t batch_size) {
  std::vector<std::pair<size_t, size_t>> out;
  for (size_t b = 0; b < n; b += batch_size) out.emplace_back(b, std::min(n, b + batch_size));
  if (out.size() > 1 && out.back().second - out.back().first == 1) {
    out[out.size() - 2].second = out.back().second;
    out.pop_back();
  }
  return out;
}

void TrainConfig::Validate() const {
  if (epochs < 1) throw std::invalid_argument("epochs must be at least 1");
  if (batch_size < 1) throw std::invalid_argument("batch size must be at least 1");
  if (!(adam.lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (eval_interval < 0) throw std::invalid_argument("eval interval must be non-negative");
  if (split_mode == dataset::SplitMode::kRandomStratified && !(split_ratio > 0.0 && split_ratio < 1.0))
    throw std::invalid_argument("split ratio must lie in (0, 1)");
  if (split_mode == dataset::SplitMode::kFoldHoldout && test_folds.empty())
    throw std::invalid_argument("fold holdout needs at least one test fold");
  dataset::ClassSubset check(class_ids);
  augment.Validate();
}

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> class_names)
    : names_(std::move(class_names)), counts_(names_.size() * names_.size(), 0) {}

size_t ConfusionMatrix::Index(int truth, int predicted) const {
  if (truth < 0 || truth >= size() || predicted < 0 || predicted >= size())
    throw std::out_of_range("confusion matrix index out of range");
  return static_cast<size_t>(truth) * names_.size() + static_cast<size_t>(predicted);
}

void ConfusionMatrix::Add(int truth, int predicted, int64_t n) {
  if (n < 0) throw std::invalid_argument("confusion counts cannot be negative");
  counts_[Index(truth, predicted)] += n;
}

int64_t ConfusionMatrix::RowSum(int truth) const {
  int64_t s = 0;
  for (int p = 0; p < size(); ++p) s += count(truth, p);
  return s;
}

int64_t ConfusionMatrix::Total() const {
  int64_t s = 0;
  for (int64_t c : counts_) s += c;
  return s;
}

int64_t ConfusionMatrix::Trace() const {
  int64_t s = 0;
  for (int k = 0; k < size(); ++k) s += count(k, k);
  return s;
}

double ConfusionMatrix::Accuracy() const {
  const int64_t total = Total();
  return total == 0 ? 0.0 : static_cast<double>(Trace()) / static_cast<double>(total);
}

std::optional<double> ConfusionMatrix::ClassAccuracy(int truth) const {
  const int64_t row = RowSum(truth);
  if (row == 0) return std::nullopt;
  return static_cast<double>(count(truth, truth)) / static_cast<double>(row);
}

FeatureContext::FeatureContext(const features::StftConfig& stft, std::optional<std::filesystem::path> cache_dir)
    : mel(stft) {
  if (cache_dir) cache.emplace(*cache_dir, stft);
}

dataset::SplitAssignment MakeSplit(std::span<const ManifestEntry> entries, const TrainConfig& config) {
  if (config.split_mode == dataset::SplitMode::kFoldHoldout) return dataset::SplitByFold(entries, config.test_folds);
  return dataset::Split(entries, config.split_ratio, config.seed, true);
}

TrainResult Train(const dataset::DatasetManifest& manifest, const TrainConfig& config,
                  const FeatureContext& features, const TrainOptions& options) {
  config.Validate();
  dataset::SubsetSelection sel = dataset::SelectSubset(manifest, config.class_ids);
  if (sel.entries.empty()) throw std::invalid_argument("no entries belong to the selected classes");
  TrainResult result;
  result.split = MakeSplit(sel.entries, config);
  if (result.split.train_indices.empty()) throw std::invalid_argument("training split is empty");
  result.entries = std::move(sel.entries);
  result.subset = sel.subset;
  if (config.precision == Precision::kFloat64) return TrainImpl<double>(std::move(result), config, features, options);
  return TrainImpl<float>(std::move(result), config, features, options);
}

Tensor<float> FeatureTensor(const std::filesystem::path& wav_path, const FeatureContext& features) {
  dsp::AugmentConfig off;
  off.enabled = false;
  Rng unused(0);
  return ToTensor(features::ExtractFeatures(wav_path, off, unused, features.mel,
                                            features.cache ? &*features.cache : nullptr));
}

EvalResult Evaluate(const nn::Checkpoint& model, std::span<const ManifestEntry> entries,
                    const dataset::ClassSubset& subset, const FeatureContext& features, int batch_size) {
  if (entries.empty()) throw std::invalid_argument("nothing to evaluate: entry list is empty");
  if (batch_size < 1) throw std::invalid_argument("batch size must be at least 1");
  CheckModelMatchesSubset(model, subset);
  std::vector<Tensor<float>> feats;
  std::vector<int> labels;
  for (const auto& e : entries) {
    const int label = subset.IndexOf(e.class_id);
    if (label < 0)
      throw std::invalid_argument("class subset mismatch: " + e.file_name + " has class " +
                                  std::to_string(e.class_id) + ", which the model does not predict");
    labels.push_back(label);
    feats.push_back(FeatureTensor(e.path, features));
  }
  nn::Network<float> net = LoadNetwork(model);
  return EvaluateNetwork(net, feats, labels, subset.Names(), batch_size);
}

Prediction Predict(const nn::Checkpoint& model, const std::filesystem::path& wav_path,
                   const FeatureContext& features) {
  Tensor<float> x = FeatureTensor(wav_path, features);
  nn::Network<float> net = LoadNetwork(model);
  const auto& s = x.shape();
  x.Reshape({1, s[0], s[1], s[2]});
  const Tensor<float> logits = net.Forward(x, nn::Mode::kEval);
  const Tensor<double> probs = nn::Softmax(nn::Cast<double>(logits));
  Prediction p;
  p.probabilities.assign(probs.values().begin(), probs.values().end());
  p.class_index = nn::ArgmaxRows(logits).front();
  if (model.meta.class_ids.size() == p.probabilities.size()) {
    p.class_name = std::string(dataset::kClassNames.at(static_cast<size_t>(model.meta.class_ids[p.class_index])));
  } else {
    p.class_name = "class" + std::to_string(p.class_index);
  }
  return p;
}

std::string FormatDouble(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

void WriteHistoryCsv(const std::filesystem::path& path, std::span<const EpochRecord> history) {
  std::ofstream out = OpenOut(path);
  out << "epoch,train_loss,train_acc,test_acc\n";
  for (const auto& r : history) {
    out << r.epoch << ',' << FormatDouble(r.train_loss) << ',' << FormatDouble(r.train_accuracy) << ',';
    if (r.test_accuracy) out << FormatDouble(*r.test_accuracy);
    out << '\n';
  }
}

void WriteConfusionCsv(const std::filesystem::path& path, const ConfusionMatrix& m) {
  std::ofstream out = OpenOut(path);
  out << "true\\predicted";
  for (const auto& n : m.class_names()) out << ',' << CsvField(n);
  out << '\n';
  for (int t = 0; t < m.size(); ++t) {
    out << CsvField(m.class_names()[static_cast<size_t>(t)]);
    for (int p = 0; p < m.size(); ++p) out << ',' << m.count(t, p);
    out << '\n';
  }
}

void WriteNormalizedConfusionCsv(const std::filesystem::path& path, const ConfusionMatrix& m) {
  std::ofstream out = OpenOut(path);
  out << "true\\predicted";
  for (const auto& n : m.class_names()) out << ',' << CsvField(n);
  out << '\n';
  char buf[32];
  for (int t = 0; t < m.size(); ++t) {
    out << CsvField(m.class_names()[static_cast<size_t>(t)]);
    const int64_t row = m.RowSum(t);
    for (int p = 0; p < m.size(); ++p) {
      out << ',';
      if (row == 0) continue;
      std::snprintf(buf, sizeof(buf), "%.4f", static_cast<double>(m.count(t, p)) / static_cast<double>(row));
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace urban::train
