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

#ifndef URBAN_FFT_HPP_
#define URBAN_FFT_HPP_

#include <complex>
#include <span>
#include <vector>

namespace urban::features {

bool IsPowerOfTwo(size_t n);

// Iterative radix-2 decimation-in-time FFT with precomputed twiddles.
// Unnormalized forward transform: X[k] = sum_j x[j] exp(-2 pi i jk / n).
class FftPlan {
 public:
  // Throws std::invalid_argument unless n is a power of two.
  explicit FftPlan(size_t n);

  size_t size() const { return n_; }
  void Forward(std::span<std::complex<double>> data) const;

 private:
  size_t n_;
  std::vector<size_t> bit_reverse_;
  std::vector<std::complex<double>> twiddles_;  // exp(-2 pi i k / n), k < n/2
};

std::vector<std::complex<double>> Fft(std::span<const std::complex<double>> input);

}  // namespace urban::features

#endif  // URBAN_FFT_HPP_
