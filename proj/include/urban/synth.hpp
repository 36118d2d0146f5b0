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

#ifndef URBAN_SYNTH_HPP_
#define URBAN_SYNTH_HPP_

#include <cstdint>
#include <filesystem>
#include <vector>

#include "urban/dataset.hpp"

namespace urban::synth {

// Dataset class IDs used for a K-class synthetic corpus: the av7 IDs for
// K = 7, otherwise 0..K-1. Requires 2 <= K <= 10.
std::vector<int> SyntheticClassIds(int num_classes);

// Tone frequency for class index k: 200 * 2^k for K <= 7, otherwise
// 200 * 2^(6k / (K - 1)) so the top class stays at 12.8 kHz.
double ToneHz(int class_index, int num_classes);

// Writes per_class WAV files per class under <out>/fold<n>/ plus
// <out>/UrbanSound8K.csv and returns the parsed manifest. Each clip is a
// sinusoid (amplitude 0.5, random phase) plus uniform noise of amplitude 0.1,
// 1-4 s long, at a sample rate from {8000, 22050, 44100} whose Nyquist limit
// clears the tone, with 1 or 2 channels. Item i of a class goes to fold
// (i mod 10) + 1.
dataset::DatasetManifest MakeSyntheticCorpus(const std::filesystem::path& out_dir, uint64_t seed,
                                             int num_classes, int per_class);

}  // namespace urban::synth

#endif  // URBAN_SYNTH_HPP_
