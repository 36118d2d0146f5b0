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

#include "urban/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace urban {
namespace {

std::string Trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename N>
N ParseNum(const std::string& key, const std::string& v) {
  N out{};
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size())
    throw ConfigError("invalid value '" + v + "' for " + key);
  return out;
}

bool ParseBool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("invalid boolean '" + v + "' for " + key);
}

std::string Bool(bool b) { return b ? "true" : "false"; }

std::string JoinInts(const std::vector<int>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::vector<int> SplitInts(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(ParseNum<int>(key, Trim(item)));
  return out;
}

}  // namespace

std::vector<int> ParseClassList(std::string_view text) {
  const std::string t = Trim(text);
  if (t == "av7") return {dataset::kAv7ClassIds.begin(), dataset::kAv7ClassIds.end()};
  if (t == "all10") return {dataset::kAll10ClassIds.begin(), dataset::kAll10ClassIds.end()};
  std::vector<int> ids = SplitInts("classes", t);
  try {
    return dataset::ClassSubset(ids).kept_class_ids();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid class list '") + t + "': " + e.what());
  }
}

std::string ClassListName(const std::vector<int>& ids) {
  if (std::equal(ids.begin(), ids.end(), dataset::kAv7ClassIds.begin(), dataset::kAv7ClassIds.end()))
    return "av7";
  if (std::equal(ids.begin(), ids.end(), dataset::kAll10ClassIds.begin(), dataset::kAll10ClassIds.end()))
    return "all10";
  return JoinInts(ids);
}

std::map<std::string, std::string> RunConfig::ToMap() const {
  using train::FormatDouble;
  const auto& t = train;
  const auto& a = t.augment;
  return {
      {"data", data.string()},
      {"out", out.string()},
      {"cache", cache.string()},
      {"threads", std::to_string(threads)},
      {"classes", ClassListName(t.class_ids)},
      {"epochs", std::to_string(t.epochs)},
      {"batch_size", std::to_string(t.batch_size)},
      {"lr", FormatDouble(t.adam.lr)},
      {"beta1", FormatDouble(t.adam.beta1)},
      {"beta2", FormatDouble(t.adam.beta2)},
      {"adam_eps", FormatDouble(t.adam.eps)},
      {"bn_momentum", FormatDouble(t.batch_norm.momentum)},
      {"bn_eps", FormatDouble(t.batch_norm.eps)},
      {"seed", std::to_string(t.seed)},
      {"split", t.split_mode == dataset::SplitMode::kFoldHoldout ? "folds" : "random"},
      {"split_ratio", FormatDouble(t.split_ratio)},
      {"test_folds", JoinInts(t.test_folds)},
      {"precision", t.precision == train::Precision::kFloat64 ? "f64" : "f32"},
      {"eval_interval", std::to_string(t.eval_interval)},
      {"clean_train_accuracy", Bool(t.clean_train_accuracy)},
      {"augment", Bool(a.enabled)},
      {"shift_limit", FormatDouble(a.shift_limit)},
      {"freq_mask_max", std::to_string(a.freq_mask_max)},
      {"time_mask_max", std::to_string(a.time_mask_max)},
      {"n_freq_masks", std::to_string(a.n_freq_masks)},
      {"n_time_masks", std::to_string(a.n_time_masks)},
      {"n_fft", std::to_string(stft.n_fft)},
      {"hop", std::to_string(stft.hop)},
      {"n_mels", std::to_string(stft.n_mels)},
      {"f_min_hz", FormatDouble(stft.f_min_hz)},
      {"f_max_hz", FormatDouble(stft.f_max_hz)},
      {"top_db", FormatDouble(stft.top_db)},
      {"drop_last_frame", Bool(stft.drop_last_frame)},
  };
}

void RunConfig::Apply(const std::map<std::string, std::string>& values) {
  auto& t = train;
  auto& a = t.augment;
  for (const auto& [key, v] : values) {
    if (key == "data") data = v;
    else if (key == "out") out = v;
    else if (key == "cache") cache = v;
    else if (key == "threads") threads = ParseNum<int>(key, v);
    else if (key == "classes") t.class_ids = ParseClassList(v);
    else if (key == "epochs") t.epochs = ParseNum<int>(key, v);
    else if (key == "batch_size") t.batch_size = ParseNum<int>(key, v);
    else if (key == "lr") t.adam.lr = ParseNum<double>(key, v);
    else if (key == "beta1") t.adam.beta1 = ParseNum<double>(key, v);
    else if (key == "beta2") t.adam.beta2 = ParseNum<double>(key, v);
    else if (key == "adam_eps") t.adam.eps = ParseNum<double>(key, v);
    else if (key == "bn_momentum") t.batch_norm.momentum = ParseNum<double>(key, v);
    else if (key == "bn_eps") t.batch_norm.eps = ParseNum<double>(key, v);
    else if (key == "seed") t.seed = ParseNum<uint64_t>(key, v);
    else if (key == "split") {
      if (v == "random") t.split_mode = dataset::SplitMode::kRandomStratified;
      else if (v == "folds") t.split_mode = dataset::SplitMode::kFoldHoldout;
      else throw ConfigError("split must be 'random' or 'folds', got '" + v + "'");
    } else if (key == "split_ratio") t.split_ratio = ParseNum<double>(key, v);
    else if (key == "test_folds") t.test_folds = SplitInts(key, v);
    else if (key == "precision") {
      if (v == "f32") t.precision = train::Precision::kFloat32;
      else if (v == "f64") t.precision = train::Precision::kFloat64;
      else throw ConfigError("precision must be 'f32' or 'f64', got '" + v + "'");
    } else if (key == "eval_interval") t.eval_interval = ParseNum<int>(key, v);
    else if (key == "clean_train_accuracy") t.clean_train_accuracy = ParseBool(key, v);
    else if (key == "augment") a.enabled = ParseBool(key, v);
    else if (key == "shift_limit") a.shift_limit = ParseNum<double>(key, v);
    else if (key == "freq_mask_max") a.freq_mask_max = ParseNum<int>(key, v);
    else if (key == "time_mask_max") a.time_mask_max = ParseNum<int>(key, v);
    else if (key == "n_freq_masks") a.n_freq_masks = ParseNum<int>(key, v);
    else if (key == "n_time_masks") a.n_time_masks = ParseNum<int>(key, v);
    else if (key == "n_fft") stft.n_fft = ParseNum<int>(key, v);
    else if (key == "hop") stft.hop = ParseNum<int>(key, v);
    else if (key == "n_mels") stft.n_mels = ParseNum<int>(key, v);
    else if (key == "f_min_hz") stft.f_min_hz = ParseNum<double>(key, v);
    else if (key == "f_max_hz") stft.f_max_hz = ParseNum<double>(key, v);
    else if (key == "top_db") stft.top_db = ParseNum<double>(key, v);
    else if (key == "drop_last_frame") stft.drop_last_frame = ParseBool(key, v);
    else throw ConfigError("unknown config key '" + key + "'");
  }
}

std::string RunConfig::Serialize() const {
  std::string s = "# urban-acoustics run configuration\n";
  for (const auto& [k, v] : ToMap()) s += k + " = " + v + "\n";
  return s;
}

std::map<std::string, std::string> RunConfig::ParseText(std::string_view text) {
  std::map<std::string, std::string> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = Trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    out[Trim(std::string_view(t).substr(0, eq))] = Trim(std::string_view(t).substr(eq + 1));
  }
  return out;
}

void RunConfig::Save(const std::filesystem::path& path) const {
  std::ofstream f(path, std::ios::trunc);
  f << Serialize();
  if (!f) throw ConfigError("cannot write " + path.string());
}

RunConfig RunConfig::Load(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  RunConfig c;
  try {
    c.Apply(ParseText(ss.str()));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return c;
}

}  // namespace urban
