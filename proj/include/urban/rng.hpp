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

#ifndef URBAN_RNG_HPP_
#define URBAN_RNG_HPP_

#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <utility>

namespace urban {

// Independent streams fanned out from one master seed. The numeric values are
// part of the reproducibility contract; never renumber them.
enum class SeedStream : uint64_t {
  kSplit = 1,
  kInit = 2,
  kShuffle = 3,
  kAugment = 4,
  kSynth = 5,
};

// SplitMix64 finalizer.
constexpr uint64_t Mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// seed' = Mix64(Mix64(Mix64(master ^ stream) ^ a) ^ b)
constexpr uint64_t DeriveSeed(uint64_t master, SeedStream stream, uint64_t a = 0,
                              uint64_t b = 0) {
  return Mix64(Mix64(Mix64(master ^ static_cast<uint64_t>(stream)) ^ a) ^ b);
}

// MT19937-64 with distribution code written out here, so draws are identical
// across standard library implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t NextU64() { return engine_(); }

  // Uniform integer in [lo, hi] by rejection sampling.
  int64_t UniformInt(int64_t lo, int64_t hi) {
    if (hi <= lo) return lo;
    const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<int64_t>(NextU64());
    const uint64_t limit =
        std::numeric_limits<uint64_t>::max() - std::numeric_limits<uint64_t>::max() % span;
    uint64_t r;
    do {
      r = NextU64();
    } while (r >= limit);
    return lo + static_cast<int64_t>(r % span);
  }

  // Uniform double in [0, 1) with 53 random bits.
  double Uniform01() { return static_cast<double>(NextU64() >> 11) * 0x1.0p-53; }

  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform01(); }

 private:
  std::mt19937_64 engine_;
};

// Fisher-Yates, last element first.
template <typename T>
void Shuffle(std::span<T> items, Rng& rng) {
  for (size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<size_t>(rng.UniformInt(0, static_cast<int64_t>(i - 1)));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace urban

#endif  // URBAN_RNG_HPP_
