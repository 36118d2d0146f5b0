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

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "test_util.hpp"
#include "urban/audio_io.hpp"
#include "urban/synth.hpp"
#include "urban/training.hpp"

namespace urban::train {
namespace {

std::string Slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

TrainConfig TinyRun(int num_classes) {
  TrainConfig c;
  c.epochs = 1;
  c.batch_size = 4;
  c.seed = 3;
  c.class_ids = synth::SyntheticClassIds(num_classes);
  return c;
}

TEST(ConfusionMatrixTest, PerfectPredictions) {
  ConfusionMatrix m({"a", "b", "c"});
  for (int k = 0; k < 3; ++k) m.Add(k, k, k + 1);
  EXPECT_EQ(m.Accuracy(), 1.0);
  EXPECT_EQ(m.Trace(), 6);
  for (int t = 0; t < 3; ++t)
    for (int p = 0; p < 3; ++p)
      if (t != p) EXPECT_EQ(m.count(t, p), 0);
}

TEST(ConfusionMatrixTest, OneClassAllWrong) {
  ConfusionMatrix m({"a", "b", "c"});
  m.Add(2, 0, 5);
  EXPECT_EQ(m.Accuracy(), 0.0);
  EXPECT_EQ(m.RowSum(2), 5);
  EXPECT_EQ(m.ClassAccuracy(2), 0.0);
  EXPECT_FALSE(m.ClassAccuracy(0).has_value());
  EXPECT_FALSE(m.ClassAccuracy(1).has_value());
}

TEST(ConfusionMatrixTest, RandomMatricesFollowDefinitions) {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const int k = static_cast<int>(rng.UniformInt(1, 8));
    ConfusionMatrix m(std::vector<std::string>(static_cast<size_t>(k), "x"));
    std::vector<int64_t> per_class(static_cast<size_t>(k), 0);
    int64_t diag = 0, total = 0;
    for (int i = 0; i < 200; ++i) {
      const int t = static_cast<int>(rng.UniformInt(0, k - 1)), p = static_cast<int>(rng.UniformInt(0, k - 1));
      m.Add(t, p);
      ++per_class[static_cast<size_t>(t)];
      diag += t == p;
      ++total;
    }
    for (int t = 0; t < k; ++t) EXPECT_EQ(m.RowSum(t), per_class[static_cast<size_t>(t)]);
    EXPECT_DOUBLE_EQ(m.Accuracy(), static_cast<double>(diag) / static_cast<double>(total));
  }
  ConfusionMatrix m({"a"});
  EXPECT_THROW(m.Add(0, 1), std::out_of_range);
  EXPECT_THROW(m.Add(0, 0, -1), std::invalid_argument);
  EXPECT_EQ(ConfusionMatrix({"a", "b"}).Accuracy(), 0.0);
}

TEST(BatchRangesTest, TrailingSingletonIsMerged) {
  using R = std::vector<std::pair<size_t, size_t>>;
  EXPECT_EQ(BatchRanges(10, 4), (R{{0, 4}, {4, 8}, {8, 10}}));
  EXPECT_EQ(BatchRanges(9, 4), (R{{0, 4}, {4, 9}}));
  EXPECT_EQ(BatchRanges(17, 16), (R{{0, 17}}));
  EXPECT_EQ(BatchRanges(32, 16), (R{{0, 16}, {16, 32}}));
  EXPECT_EQ(BatchRanges(1, 16), (R{{0, 1}}));
  EXPECT_TRUE(BatchRanges(0, 16).empty());
}

TEST(TrainConfigTest, Validation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.Validate());
  EXPECT_EQ(c.epochs, 100);
  EXPECT_EQ(c.batch_size, 16);
  EXPECT_DOUBLE_EQ(c.split_ratio, 0.8);
  c.epochs = 0;
  EXPECT_THROW(c.Validate(), std::invalid_argument);
  c = {};
  c.batch_size = 0;
  EXPECT_THROW(c.Validate(), std::invalid_argument);
  c = {};
  c.split_ratio = 1.0;
  EXPECT_THROW(c.Validate(), std::invalid_argument);
  c = {};
  c.class_ids = {};
  EXPECT_THROW(c.Validate(), std::invalid_argument);
}

TEST(FormatDoubleTest, ShortestRoundTrip) {
  EXPECT_EQ(FormatDouble(0.5), "0.5");
  EXPECT_EQ(FormatDouble(1.0), "1");
  for (double v : {0.1, 1.0 / 3.0, 2.718281828459045, 1e-300}) EXPECT_EQ(std::stod(FormatDouble(v)), v);
}

TEST(CsvTest, WritersProduceExpectedText) {
  testing::TempDir dir;
  const std::vector<EpochRecord> h = {{1, 0.5, 0.25, std::nullopt}, {2, 0.125, 1.0, 0.75}};
  WriteHistoryCsv(dir.path() / "h.csv", h);
  EXPECT_EQ(Slurp(dir.path() / "h.csv"), "epoch,train_loss,train_acc,test_acc\n1,0.5,0.25,\n2,0.125,1,0.75\n");
  ConfusionMatrix m({"car_horn", "siren"});
  m.Add(0, 0, 2);
  m.Add(0, 1, 1);
  WriteConfusionCsv(dir.path() / "c.csv", m);
  EXPECT_EQ(Slurp(dir.path() / "c.csv"), "true\\predicted,car_horn,siren\ncar_horn,2,1\nsiren,0,0\n");
  WriteNormalizedConfusionCsv(dir.path() / "n.csv", m);
  EXPECT_EQ(Slurp(dir.path() / "n.csv"), "true\\predicted,car_horn,siren\ncar_horn,0.6667,0.3333\nsiren,,\n");
}

TEST(SynthTest, ClassIdsAndTones) {
  EXPECT_EQ(synth::SyntheticClassIds(7), (std::vector<int>{0, 1, 2, 3, 5, 6, 8}));
  EXPECT_EQ(synth::SyntheticClassIds(3), (std::vector<int>{0, 1, 2}));
  EXPECT_THROW(synth::SyntheticClassIds(1), std::invalid_argument);
  EXPECT_DOUBLE_EQ(synth::ToneHz(0, 7), 200.0);
  EXPECT_DOUBLE_EQ(synth::ToneHz(6, 7), 12800.0);
  EXPECT_DOUBLE_EQ(synth::ToneHz(9, 10), 12800.0);
}

TEST(SynthTest, SevenByTenCorpus) {
  testing::TempDir a, b, c;
  const auto m = synth::MakeSyntheticCorpus(a.path(), 5, 7, 10);
  ASSERT_EQ(m.entries.size(), 70u);
  size_t wavs = 0;
  for (const auto& e : std::filesystem::recursive_directory_iterator(a.path()))
    wavs += e.path().extension() == ".wav";
  EXPECT_EQ(wavs, 70u);
  std::set<int> ids;
  for (const auto& e : m.entries) {
    ids.insert(e.class_id);
    const auto clip = audio::ReadWav(e.path);
    EXPECT_GE(clip.frames(), static_cast<size_t>(clip.sample_rate_hz));
    EXPECT_LE(clip.frames(), static_cast<size_t>(4 * clip.sample_rate_hz));
  }
  EXPECT_EQ(ids, (std::set<int>{0, 1, 2, 3, 5, 6, 8}));
  EXPECT_EQ(dataset::LoadManifest(a.path()).entries.size(), 70u);

  const auto again = synth::MakeSyntheticCorpus(b.path(), 5, 7, 10);
  const auto other = synth::MakeSyntheticCorpus(c.path(), 6, 7, 10);
  bool any_diff = false;
  for (size_t i = 0; i < 70; ++i) {
    EXPECT_EQ(audio::ReadFileBytes(m.entries[i].path), audio::ReadFileBytes(again.entries[i].path));
    any_diff |= audio::ReadFileBytes(m.entries[i].path) != audio::ReadFileBytes(other.entries[i].path);
  }
  EXPECT_TRUE(any_diff);
}

TEST(SynthTest, ClassesHaveDistinctPeakMelBins) {
  testing::TempDir dir;
  const auto m = synth::MakeSyntheticCorpus(dir.path(), 9, 7, 3);
  const FeatureContext ctx;
  const auto& edges = ctx.mel.filterbank().edges_hz();
  const auto subset = dataset::ClassSubset(synth::SyntheticClassIds(7));
  std::vector<std::set<int>> peaks(7);
  for (const auto& e : m.entries) {
    const int k = subset.IndexOf(e.class_id);
    const double tone = synth::ToneHz(k, 7);
    const auto x = FeatureTensor(e.path, ctx);
    // Mel row with the largest time-averaged energy in the first channel.
    int best = 0;
    double best_sum = -1e300;
    for (int mel = 0; mel < 64; ++mel) {
      double s = 0.0;
      for (int t = 0; t < 344; ++t) s += x[static_cast<size_t>(mel) * 344 + t];
      if (s > best_sum) {
        best_sum = s;
        best = mel;
      }
    }
    EXPECT_LT(edges[best], tone) << e.file_name;
    EXPECT_GT(edges[best + 2], tone) << e.file_name;
    peaks[static_cast<size_t>(k)].insert(best);
  }
  for (size_t i = 0; i < 7; ++i)
    for (size_t j = i + 1; j < 7; ++j)
      for (int p : peaks[i]) EXPECT_EQ(peaks[j].count(p), 0u) << i << " " << j;
}

class TrainTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new testing::TempDir("train");
    four_ = synth::MakeSyntheticCorpus(dir_->path() / "four", 1, 2, 2);
    eight_ = synth::MakeSyntheticCorpus(dir_->path() / "eight", 2, 2, 4);
    TrainConfig c = TinyRun(2);
    c.split_mode = dataset::SplitMode::kFoldHoldout;
    c.test_folds = {4};
    c.epochs = 2;
    model_ = new nn::Checkpoint(Train(eight_, c, FeatureContext()).checkpoint);
  }
  static void TearDownTestSuite() {
    delete model_;
    delete dir_;
  }
  static testing::TempDir* dir_;
  static dataset::DatasetManifest four_, eight_;
  static nn::Checkpoint* model_;
};

testing::TempDir* TrainTest::dir_ = nullptr;
dataset::DatasetManifest TrainTest::four_, TrainTest::eight_;
nn::Checkpoint* TrainTest::model_ = nullptr;

TEST_F(TrainTest, OneEpochOnFourExamples) {
  ASSERT_EQ(four_.entries.size(), 4u);
  TrainConfig c = TinyRun(2);
  c.split_ratio = 0.5;
  const TrainResult r = Train(four_, c, FeatureContext());
  ASSERT_EQ(r.history.size(), 1u);
  EXPECT_EQ(r.history[0].epoch, 1);
  EXPECT_TRUE(std::isfinite(r.history[0].train_loss));
  EXPECT_GE(r.history[0].train_loss, 0.0);
  EXPECT_GE(r.history[0].train_accuracy, 0.0);
  EXPECT_LE(r.history[0].train_accuracy, 1.0);
  EXPECT_EQ(r.split.train_indices.size(), 2u);
  EXPECT_EQ(r.split.test_indices.size(), 2u);
  ASSERT_TRUE(r.final_eval.has_value());
  EXPECT_EQ(r.final_eval->confusion.Total(), 2);
  EXPECT_TRUE(r.history[0].test_accuracy.has_value());
  EXPECT_EQ(r.checkpoint.meta.epoch, 1);
  EXPECT_EQ(r.checkpoint.meta.class_ids, (std::vector<int>{0, 1}));
  EXPECT_TRUE(r.checkpoint.meta.bn_stats_initialized);
  EXPECT_EQ(r.checkpoint.model.num_classes, 2);
}

TEST_F(TrainTest, CallbackStopsEarlyAndBestCheckpointIsWritten) {
  TrainConfig c = TinyRun(2);
  c.split_ratio = 0.5;
  c.epochs = 5;
  TrainOptions o;
  int calls = 0;
  o.on_epoch = [&](const EpochRecord&) { return ++calls < 2; };
  o.best_checkpoint = dir_->path() / "best.usnd";
  o.settings = {{"note", "x"}};
  const TrainResult r = Train(four_, c, FeatureContext(), o);
  EXPECT_EQ(r.history.size(), 2u);
  EXPECT_EQ(calls, 2);
  EXPECT_EQ(r.checkpoint.meta.settings.at("note"), "x");
  EXPECT_TRUE(std::filesystem::exists(*o.best_checkpoint));
}

TEST_F(TrainTest, DoublePrecisionRunsAreIdentical) {
  TrainConfig c = TinyRun(2);
  c.precision = Precision::kFloat64;
  c.split_ratio = 0.5;
  c.epochs = 2;
  c.batch_size = 2;
  const TrainResult a = Train(four_, c, FeatureContext());
  const TrainResult b = Train(four_, c, FeatureContext());
  EXPECT_EQ(a.history, b.history);
  EXPECT_TRUE(a.checkpoint.params == b.checkpoint.params);
  WriteHistoryCsv(dir_->path() / "a.csv", a.history);
  WriteHistoryCsv(dir_->path() / "b.csv", b.history);
  EXPECT_EQ(Slurp(dir_->path() / "a.csv"), Slurp(dir_->path() / "b.csv"));
  c.seed = 4;
  EXPECT_NE(Train(four_, c, FeatureContext()).history, a.history);
}

TEST_F(TrainTest, EvaluateIsOrderInvariant) {
  const auto subset = dataset::ClassSubset(synth::SyntheticClassIds(2));
  std::vector<dataset::ManifestEntry> entries = eight_.entries;
  const FeatureContext ctx;
  const EvalResult fwd = Evaluate(*model_, entries, subset, ctx);
  std::reverse(entries.begin(), entries.end());
  const EvalResult rev = Evaluate(*model_, entries, subset, ctx, 3);
  EXPECT_EQ(fwd.confusion, rev.confusion);
  EXPECT_EQ(fwd.accuracy, rev.accuracy);
  std::vector<int> back(rev.predictions.rbegin(), rev.predictions.rend());
  EXPECT_EQ(fwd.predictions, back);
  EXPECT_EQ(fwd.confusion.Total(), 8);
  EXPECT_DOUBLE_EQ(fwd.accuracy, fwd.confusion.Accuracy());
}

TEST_F(TrainTest, EvaluateSameWithAndWithoutCache) {
  const auto subset = dataset::ClassSubset(synth::SyntheticClassIds(2));
  const FeatureContext plain, cached({}, dir_->path() / "cache");
  const EvalResult a = Evaluate(*model_, eight_.entries, subset, plain);
  const EvalResult b = Evaluate(*model_, eight_.entries, subset, cached);
  const EvalResult c = Evaluate(*model_, eight_.entries, subset, cached);
  EXPECT_EQ(a.confusion, b.confusion);
  EXPECT_EQ(a.confusion, c.confusion);
  EXPECT_EQ(a.predictions, c.predictions);
}

TEST_F(TrainTest, EvaluateErrors) {
  const auto subset = dataset::ClassSubset(synth::SyntheticClassIds(2));
  const FeatureContext ctx;
  EXPECT_THROW(Evaluate(*model_, {}, subset, ctx), std::invalid_argument);
  const auto three = dataset::ClassSubset(std::vector<int>{0, 1, 2});
  try {
    Evaluate(*model_, eight_.entries, three, ctx);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("class subset mismatch"), std::string::npos);
  }
}

TEST_F(TrainTest, PredictMatchesEvaluate) {
  const auto subset = dataset::ClassSubset(synth::SyntheticClassIds(2));
  const FeatureContext ctx;
  const EvalResult ev = Evaluate(*model_, eight_.entries, subset, ctx);
  for (size_t i = 0; i < eight_.entries.size(); ++i) {
    const Prediction p = Predict(*model_, eight_.entries[i].path, ctx);
    ASSERT_EQ(p.probabilities.size(), 2u);
    EXPECT_NEAR(p.probabilities[0] + p.probabilities[1], 1.0, 1e-6);
    EXPECT_EQ(p.class_index, ev.predictions[i]);
    EXPECT_EQ(p.class_name, dataset::kClassNames[static_cast<size_t>(subset.ClassIdAt(p.class_index))]);
  }
}

TEST_F(TrainTest, PredictOnSilence) {
  audio::AudioClip silent;
  silent.sample_rate_hz = 22050;
  silent.channels = {std::vector<float>(22050, 0.0f)};
  const auto path = dir_->path() / "silent.wav";
  audio::WritePcm16(path, silent);
  const Prediction p = Predict(*model_, path, FeatureContext());
  EXPECT_GE(p.class_index, 0);
  EXPECT_LT(p.class_index, 2);
  for (double v : p.probabilities) EXPECT_TRUE(std::isfinite(v));
  EXPECT_NEAR(p.probabilities[0] + p.probabilities[1], 1.0, 1e-6);
}

}  // namespace
}  // namespace urban::train
