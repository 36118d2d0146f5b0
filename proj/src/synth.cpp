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

#include "urban/synth.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>

#include "urban/audio_io.hpp"
#include "urban/rng.hpp"

namespace urban::synth {

std::vector<int> SyntheticClassIds(int num_classes) {
  if (num_classes < 2 || num_classes > dataset::kNumClasses)
    throw std::invalid_argument("synthetic corpus supports 2 to 10 classes, got " +
                                std::to_string(num_classes));
  if (num_classes == 7) return {dataset::kAv7ClassIds.begin(), dataset::kAv7ClassIds.end()};
  std::vector<int> ids(static_cast<size_t>(num_classes));
  for (int k = 0; k < num_classes; ++k) ids[static_cast<size_t>(k)] = k;
  return ids;
}

double ToneHz(int class_index, int num_classes) {
  if (num_classes <= 7) return 200.0 * std::exp2(class_index);
  return 200.0 * std::exp2(6.0 * class_index / (num_classes - 1));
}

dataset::DatasetManifest MakeSyntheticCorpus(const std::filesystem::path& out_dir, uint64_t seed,
                                             int num_classes, int per_class) {
  const std::vector<int> ids = SyntheticClassIds(num_classes);
  if (per_class < 1) throw std::invalid_argument("per_class must be at least 1");
  constexpr int kRates[] = {8000, 22050, 44100};

  std::ostringstream csv;
  csv << "slice_file_name,fsID,start,end,salience,fold,classID,class\n";
  for (int k = 0; k < num_classes; ++k) {
    const int class_id = ids[static_cast<size_t>(k)];
    const double tone = ToneHz(k, num_classes);
    std::vector<int> rates;
    for (int r : kRates)
      if (tone < 0.45 * r) rates.push_back(r);
    for (int i = 0; i < per_class; ++i) {
      Rng rng(DeriveSeed(seed, SeedStream::kSynth, static_cast<uint64_t>(k), static_cast<uint64_t>(i)));
      const int rate = rates[static_cast<size_t>(rng.UniformInt(0, static_cast<int64_t>(rates.size()) - 1))];
      const int channels = static_cast<int>(rng.UniformInt(1, 2));
      const double seconds = rng.Uniform(1.0, 4.0);
      const double phase = rng.Uniform(0.0, 2.0 * std::numbers::pi);
      const auto n = static_cast<size_t>(std::llround(seconds * rate));

      audio::AudioClip clip;
      clip.sample_rate_hz = rate;
      clip.channels.assign(static_cast<size_t>(channels), std::vector<float>(n));
      for (size_t t = 0; t < n; ++t) {
        const double s = 0.5 * std::sin(2.0 * std::numbers::pi * tone * static_cast<double>(t) / rate + phase);
        for (auto& ch : clip.channels) ch[t] = static_cast<float>(s + rng.Uniform(-0.1, 0.1));
      }

      const int fold = i % 10 + 1;
      const int source_id = 100000 + k * 1000 + i;
      const std::string name =
          std::to_string(source_id) + "-" + std::to_string(class_id) + "-0-" + std::to_string(i) + ".wav";
      const auto dir = out_dir / ("fold" + std::to_string(fold));
      std::filesystem::create_directories(dir);
      audio::WritePcm16(dir / name, clip);
      const double end = static_cast<double>(n) / rate;
      csv << name << ',' << source_id << ",0," << end << ",1," << fold << ',' << class_id << ','
          << dataset::kClassNames[static_cast<size_t>(class_id)] << '\n';
    }
  }
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream f(out_dir / "UrbanSound8K.csv", std::ios::trunc);
    f << csv.str();
    if (!f) throw std::runtime_error("cannot write " + (out_dir / "UrbanSound8K.csv").string());
  }
  return dataset::LoadManifest(out_dir);
}

}  // namespace urban::synth
