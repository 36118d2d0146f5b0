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

// Command-line front end: prepare, train, eval, predict, synth.

#include <omp.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "urban/checkpoint.hpp"
#include "urban/dataset.hpp"
#include "urban/features.hpp"
#include "urban/run_config.hpp"
#include "urban/synth.hpp"
#include "urban/training.hpp"

namespace fs = std::filesystem;

namespace urban {
namespace {

constexpr int kExitOk = 0;
constexpr int kExitItemFailures = 1;
constexpr int kExitConfig = 2;

constexpr const char* kDataEnv = "URBAN_ACOUSTICS_DATA";

// Flag values kept as text and funnelled through RunConfig::Apply, so flags,
// config files and checkpoint metadata share one parser.
using Overrides = std::map<std::string, std::string>;

void AddOverride(CLI::App* app, Overrides& o, const std::string& flag, const std::string& key,
                 const std::string& help) {
  app->add_option(flag, o[key], help);
}

Overrides Given(const Overrides& o) {
  Overrides out;
  for (const auto& [k, v] : o)
    if (!v.empty()) out[k] = v;
  return out;
}

std::string Percent(std::optional<double> v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f%%", 100.0 * *v);
  return buf;
}

void PrintEval(const train::EvalResult& r) {
  std::printf("accuracy %s (%lld/%lld)\n", Percent(r.accuracy).c_str(),
              static_cast<long long>(r.confusion.Trace()), static_cast<long long>(r.confusion.Total()));
  for (int k = 0; k < r.confusion.size(); ++k)
    std::printf("  %-18s %8s  (%lld items)\n", r.confusion.class_names()[static_cast<size_t>(k)].c_str(),
                Percent(r.per_class_accuracy[static_cast<size_t>(k)]).c_str(),
                static_cast<long long>(r.confusion.RowSum(k)));
}

void WriteConfusion(const fs::path& dir, const train::ConfusionMatrix& m) {
  train::WriteConfusionCsv(dir / "confusion.csv", m);
  train::WriteNormalizedConfusionCsv(dir / "confusion_normalized.csv", m);
}

void ApplyThreads(int threads) {
  if (threads > 0) omp_set_num_threads(threads);
}

std::optional<fs::path> CacheDir(const RunConfig& rc) {
  if (rc.cache.empty()) return std::nullopt;
  return rc.cache;
}

fs::path RequireData(const fs::path& data) {
  if (data.empty()) throw ConfigError(std::string("no corpus given: pass --data or set ") + kDataEnv);
  return data;
}

int RunPrepare(RunConfig rc, const Overrides& o) {
  rc.Apply(Given(o));
  ApplyThreads(rc.threads);
  const auto manifest = dataset::LoadManifest(RequireData(rc.data));
  const auto sel = dataset::SelectSubset(manifest, rc.train.class_ids);
  train::FeatureContext fx(rc.stft, CacheDir(rc));

  std::vector<int64_t> counts(static_cast<size_t>(sel.subset.size()), 0);
  int failures = 0;
  for (const auto& e : sel.entries) {
    try {
      if (!fs::exists(e.path)) throw std::runtime_error(e.path.string() + ": file not found");
      if (fx.cache) train::FeatureTensor(e.path, fx);
      else audio::ProbeFormat(audio::ReadFileBytes(e.path));
      ++counts[static_cast<size_t>(sel.subset.IndexOf(e.class_id))];
    } catch (const std::exception& ex) {
      ++failures;
      std::fprintf(stderr, "unreadable: %s\n", ex.what());
    }
  }
  std::printf("corpus %s: %zu entries, %d classes\n", manifest.root_path.string().c_str(), sel.entries.size(),
              sel.subset.size());
  const auto names = sel.subset.Names();
  for (size_t k = 0; k < names.size(); ++k) std::printf("  %-18s %lld\n", names[k].c_str(), static_cast<long long>(counts[k]));
  if (failures) std::printf("%d unreadable file(s)\n", failures);
  if (!rc.cache.empty()) {
    fs::create_directories(rc.cache);
    rc.Save(rc.cache / "run_config");
  }
  return failures ? kExitItemFailures : kExitOk;
}

int RunTrain(RunConfig rc, const Overrides& o) {
  rc.Apply(Given(o));
  ApplyThreads(rc.threads);
  if (rc.out.empty()) throw ConfigError("train needs --out");
  rc.train.Validate();
  rc.stft.Validate();
  const auto manifest = dataset::LoadManifest(RequireData(rc.data));
  fs::create_directories(rc.out);
  rc.Save(rc.out / "run_config");

  train::FeatureContext fx(rc.stft, CacheDir(rc));
  train::TrainOptions opts;
  opts.settings = rc.ToMap();
  opts.best_checkpoint = rc.out / "best.usnd";
  opts.on_epoch = [&](const train::EpochRecord& r) {
    std::printf("epoch %3d  loss %.6f  train %s  test %s\n", r.epoch, r.train_loss,
                Percent(r.train_accuracy).c_str(), Percent(r.test_accuracy).c_str());
    std::fflush(stdout);
    return true;
  };
  for (const auto& w : train::MakeSplit(dataset::SelectSubset(manifest, rc.train.class_ids).entries, rc.train).warnings)
    std::fprintf(stderr, "warning: %s\n", w.c_str());

  const train::TrainResult result = train::Train(manifest, rc.train, fx, opts);
  nn::SaveCheckpoint(rc.out / "model.usnd", result.checkpoint);
  train::WriteHistoryCsv(rc.out / "history.csv", result.history);
  if (result.final_eval) {
    WriteConfusion(rc.out, result.final_eval->confusion);
    PrintEval(*result.final_eval);
  } else {
    std::printf("test split is empty; no confusion matrix written\n");
  }
  std::printf("wrote %s\n", (rc.out / "model.usnd").string().c_str());
  return kExitOk;
}

int RunEval(const fs::path& checkpoint_path, RunConfig cli, const Overrides& o, const std::string& subset_flag,
            bool all_entries) {
  cli.Apply(Given(o));
  ApplyThreads(cli.threads);
  const nn::Checkpoint ckpt = nn::LoadCheckpoint(checkpoint_path);

  // The training run's settings reproduce its split; flags win over them.
  RunConfig rc;
  rc.Apply(ckpt.meta.settings);
  rc.data = cli.data;
  rc.cache = cli.cache;
  rc.threads = cli.threads;
  rc.out = cli.out.empty() ? checkpoint_path.parent_path() / "eval" : cli.out;
  if (!subset_flag.empty()) rc.train.class_ids = ParseClassList(subset_flag);

  const dataset::ClassSubset subset(rc.train.class_ids);
  if (!ckpt.meta.class_ids.empty() && ckpt.meta.class_ids != subset.kept_class_ids())
    throw ConfigError("class subset mismatch: checkpoint predicts " + ClassListName(ckpt.meta.class_ids) +
                      ", requested " + ClassListName(subset.kept_class_ids()));

  const auto manifest = dataset::LoadManifest(RequireData(rc.data));
  for (const auto& e : manifest.entries)
    if (!subset.Contains(e.class_id) && subset_flag.empty())
      throw ConfigError("class subset mismatch: checkpoint predicts " + ClassListName(subset.kept_class_ids()) +
                        " but the corpus contains class " + std::to_string(e.class_id) +
                        " (pass --classes to evaluate on the matching subset)");
  const auto sel = dataset::SelectSubset(manifest, subset.kept_class_ids());
  std::vector<dataset::ManifestEntry> entries;
  if (all_entries) {
    entries = sel.entries;
  } else {
    for (size_t i : train::MakeSplit(sel.entries, rc.train).test_indices) entries.push_back(sel.entries[i]);
  }

  train::FeatureContext fx(rc.stft, CacheDir(rc));
  const train::EvalResult r = train::Evaluate(ckpt, entries, subset, fx, rc.train.batch_size);
  fs::create_directories(rc.out);
  WriteConfusion(rc.out, r.confusion);
  rc.Save(rc.out / "run_config");
  PrintEval(r);
  return kExitOk;
}

int RunPredict(const fs::path& checkpoint_path, const std::vector<std::string>& files, int threads) {
  ApplyThreads(threads);
  const nn::Checkpoint ckpt = nn::LoadCheckpoint(checkpoint_path);
  RunConfig rc;
  rc.Apply(ckpt.meta.settings);
  train::FeatureContext fx(rc.stft);
  int failures = 0;
  for (const auto& f : files) {
    try {
      const train::Prediction p = train::Predict(ckpt, f, fx);
      std::printf("%s\t%s", f.c_str(), p.class_name.c_str());
      for (double v : p.probabilities) std::printf("\t%.4f", v);
      std::printf("\n");
    } catch (const std::exception& e) {
      ++failures;
      std::fprintf(stderr, "error: %s\n", e.what());
    }
  }
  return failures ? kExitItemFailures : kExitOk;
}

int RunSynth(const fs::path& out, int classes, int per_class, uint64_t seed) {
  const auto manifest = synth::MakeSyntheticCorpus(out, seed, classes, per_class);
  RunConfig rc;
  rc.data = out;
  rc.out = out;
  rc.train.seed = seed;
  rc.train.class_ids = synth::SyntheticClassIds(classes);
  rc.Save(out / "run_config");
  std::printf("wrote %zu clips for %d classes to %s\n", manifest.entries.size(), classes, out.string().c_str());
  return kExitOk;
}

int Main(int argc, char** argv) {
  CLI::App app{"Urban sound classification with mel spectrograms and a CNN"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker thread cap (0 = OpenMP default)")->check(CLI::NonNegativeNumber);

  std::string config_file;
  fs::path data, cache, out;
  Overrides train_o, prepare_o, eval_o;

  auto* prepare = app.add_subcommand("prepare", "Validate a corpus and fill the feature cache");
  prepare->add_option("--data", data, "Corpus root")->envname(kDataEnv);
  prepare->add_option("--cache", cache, "Feature cache directory");
  AddOverride(prepare, prepare_o, "--classes", "classes", "av7, all10 or a list of class IDs (default av7)");

  auto* train_cmd = app.add_subcommand("train", "Train a model");
  train_cmd->add_option("--config", config_file, "Start from a saved run_config file");
  train_cmd->add_option("--data", data, "Corpus root")->envname(kDataEnv);
  train_cmd->add_option("--out", out, "Output directory");
  train_cmd->add_option("--cache", cache, "Feature cache directory");
  AddOverride(train_cmd, train_o, "--classes", "classes", "av7, all10 or a list of class IDs (default av7)");
  AddOverride(train_cmd, train_o, "--epochs", "epochs", "Epochs (default 100)");
  AddOverride(train_cmd, train_o, "--seed", "seed", "Master seed (default 0)");
  AddOverride(train_cmd, train_o, "--batch", "batch_size", "Batch size (default 16)");
  AddOverride(train_cmd, train_o, "--lr", "lr", "Adam learning rate (default 0.001)");
  AddOverride(train_cmd, train_o, "--split", "split", "random or folds (default random)");
  AddOverride(train_cmd, train_o, "--split-ratio", "split_ratio", "Training share for random splits (default 0.8)");
  AddOverride(train_cmd, train_o, "--test-folds", "test_folds", "Held-out folds for --split folds (default 10)");
  AddOverride(train_cmd, train_o, "--precision", "precision", "f32 or f64 (default f32)");
  AddOverride(train_cmd, train_o, "--eval-interval", "eval_interval", "Evaluate every N epochs (default 1)");
  bool no_augment = false, clean_acc = false;
  train_cmd->add_flag("--no-augment", no_augment, "Disable time shift and masking");
  train_cmd->add_flag("--clean-train-accuracy", clean_acc, "Measure training accuracy in eval mode");

  fs::path checkpoint;
  std::string eval_classes;
  bool eval_all = false;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  eval->add_option("--data", data, "Corpus root")->envname(kDataEnv);
  eval->add_option("--out", out, "Directory for confusion CSVs (default <checkpoint dir>/eval)");
  eval->add_option("--cache", cache, "Feature cache directory");
  eval->add_option("--classes", eval_classes, "Class subset; must match the checkpoint");
  eval->add_flag("--all", eval_all, "Evaluate every entry instead of the training run's test split");

  std::vector<std::string> wavs;
  auto* predict = app.add_subcommand("predict", "Classify WAV files");
  predict->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  predict->add_option("wav", wavs, "WAV files")->required();

  int synth_classes = 7, per_class = 10;
  uint64_t synth_seed = 0;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic tone corpus");
  synth_cmd->add_option("--out", out, "Output directory")->required();
  synth_cmd->add_option("--classes", synth_classes, "Number of classes (2-10)")->check(CLI::Range(2, 10));
  synth_cmd->add_option("--per-class", per_class, "Clips per class")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--seed", synth_seed, "Seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  RunConfig base;
  if (!config_file.empty()) base = RunConfig::Load(config_file);
  base.threads = threads ? threads : base.threads;
  if (!data.empty()) base.data = data;
  if (!cache.empty()) base.cache = cache;
  if (!out.empty()) base.out = out;
  if (no_augment) train_o["augment"] = "false";
  if (clean_acc) train_o["clean_train_accuracy"] = "true";

  if (*prepare) return RunPrepare(base, prepare_o);
  if (*train_cmd) return RunTrain(base, train_o);
  if (*eval) return RunEval(checkpoint, base, eval_o, eval_classes, eval_all);
  if (*predict) return RunPredict(checkpoint, wavs, threads);
  return RunSynth(out, synth_classes, per_class, synth_seed);
}

}  // namespace
}  // namespace urban

int main(int argc, char** argv) {
  try {
    return urban::Main(argc, argv);
  } catch (const urban::features::FeatureError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return urban::kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return urban::kExitConfig;
  }
}
