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

#include "urban/gemm.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace urban::kernels {
namespace {

#if defined(__AVX512F__)
constexpr int kVectorBytes = 64;
#else
constexpr int kVectorBytes = 32;
#endif

template <typename T>
struct Blocking {
  static constexpr int kMr = 8;
  static constexpr int kNr = 2 * kVectorBytes / static_cast<int>(sizeof(T));
  static constexpr int64_t kMc = 96;
  static constexpr int64_t kKc = 256;
  static constexpr int64_t kNc = 2048;
};

template <typename T>
inline T At(const T* p, int64_t ld, Trans t, int64_t row, int64_t col) {
  return t == Trans::kNo ? p[row * ld + col] : p[col * ld + row];
}

// Packs op(B)[k0:k0+kc, j0:j0+nc] into column panels of width kNr, each panel
// laid out k-major. Missing columns are zero.
template <typename T>
void PackB(Trans tb, const T* b, int64_t ldb, int64_t k0, int64_t kc,
           int64_t j0, int64_t nc, T* out) {
  constexpr int kNr = Blocking<T>::kNr;
  const int64_t panels = (nc + kNr - 1) / kNr;
#pragma omp parallel for schedule(static)
  for (int64_t p = 0; p < panels; ++p) {
    T* dst = out + p * kc * kNr;
    const int64_t jb = j0 + p * kNr;
    const int64_t width = std::min<int64_t>(kNr, j0 + nc - jb);
    if (tb == Trans::kNo) {
      for (int64_t kk = 0; kk < kc; ++kk) {
        T* row = dst + kk * kNr;
        const T* src = b + (k0 + kk) * ldb + jb;
        for (int64_t j = 0; j < width; ++j) row[j] = src[j];
        for (int64_t j = width; j < kNr; ++j) row[j] = T(0);
      }
    } else {
      for (int64_t j = 0; j < width; ++j) {
        const T* src = b + (jb + j) * ldb + k0;
        for (int64_t kk = 0; kk < kc; ++kk) dst[kk * kNr + j] = src[kk];
      }
      for (int64_t j = width; j < kNr; ++j)
        for (int64_t kk = 0; kk < kc; ++kk) dst[kk * kNr + j] = T(0);
    }
  }
}

template <typename T>
void PackA(Trans ta, const T* a, int64_t lda, int64_t i0, int64_t mc,
           int64_t k0, int64_t kc, T* out) {
  constexpr int kMr = Blocking<T>::kMr;
  const int64_t panels = (mc + kMr - 1) / kMr;
  for (int64_t p = 0; p < panels; ++p) {
    T* dst = out + p * kc * kMr;
    const int64_t ib = i0 + p * kMr;
    const int64_t height = std::min<int64_t>(kMr, i0 + mc - ib);
    for (int64_t kk = 0; kk < kc; ++kk) {
      T* col = dst + kk * kMr;
      for (int64_t r = 0; r < height; ++r) col[r] = At(a, lda, ta, ib + r, k0 + kk);
      for (int64_t r = height; r < kMr; ++r) col[r] = T(0);
    }
  }
}

template <typename T>
void MicroKernel(int64_t kc, const T* __restrict a, const T* __restrict b,
                 T* c, int64_t ldc, int64_t rows, int64_t cols, bool load) {
  constexpr int kMr = Blocking<T>::kMr;
  constexpr int kNr = Blocking<T>::kNr;
  alignas(64) T acc[kMr][kNr];
  if (load) {
    for (int r = 0; r < kMr; ++r)
      for (int j = 0; j < kNr; ++j)
        acc[r][j] = (r < rows && j < cols) ? c[r * ldc + j] : T(0);
  } else {
    for (int r = 0; r < kMr; ++r)
      for (int j = 0; j < kNr; ++j) acc[r][j] = T(0);
  }
  for (int64_t kk = 0; kk < kc; ++kk) {
    const T* bk = b + kk * kNr;
    const T* ak = a + kk * kMr;
#pragma GCC unroll 8
    for (int r = 0; r < kMr; ++r) {
      const T ar = ak[r];
#pragma omp simd
      for (int j = 0; j < kNr; ++j) acc[r][j] = std::fma(ar, bk[j], acc[r][j]);
    }
  }
  for (int64_t r = 0; r < rows; ++r)
    for (int64_t j = 0; j < cols; ++j) c[r * ldc + j] = acc[r][j];
}

}  // namespace

template <typename T>
void Gemm(Trans trans_a, Trans trans_b, int64_t m, int64_t n, int64_t k,
          const T* a, int64_t lda, const T* b, int64_t ldb, T* c, int64_t ldc,
          bool accumulate) {
  using B = Blocking<T>;
  if (m <= 0 || n <= 0) return;
  if (k <= 0) {
    if (!accumulate)
      for (int64_t i = 0; i < m; ++i) std::fill(c + i * ldc, c + i * ldc + n, T(0));
    return;
  }
  const int64_t nc_max = std::min(B::kNc, n);
  std::vector<T> packed_b(static_cast<size_t>(
      ((nc_max + B::kNr - 1) / B::kNr) * B::kNr * std::min(B::kKc, k)));

  for (int64_t j0 = 0; j0 < n; j0 += B::kNc) {
    const int64_t nc = std::min(B::kNc, n - j0);
    for (int64_t k0 = 0; k0 < k; k0 += B::kKc) {
      const int64_t kc = std::min(B::kKc, k - k0);
      const bool load = accumulate || k0 > 0;
      PackB(trans_b, b, ldb, k0, kc, j0, nc, packed_b.data());
      const int64_t m_blocks = (m + B::kMc - 1) / B::kMc;
#pragma omp parallel
      {
        std::vector<T> packed_a(static_cast<size_t>(
            ((B::kMc + B::kMr - 1) / B::kMr) * B::kMr * kc));
#pragma omp for schedule(static)
        for (int64_t mb = 0; mb < m_blocks; ++mb) {
          const int64_t i0 = mb * B::kMc;
          const int64_t mc = std::min(B::kMc, m - i0);
          PackA(trans_a, a, lda, i0, mc, k0, kc, packed_a.data());
          for (int64_t jr = 0; jr < nc; jr += B::kNr) {
            const T* bp = packed_b.data() + (jr / B::kNr) * kc * B::kNr;
            const int64_t cols = std::min<int64_t>(B::kNr, nc - jr);
            for (int64_t ir = 0; ir < mc; ir += B::kMr) {
              const T* ap = packed_a.data() + (ir / B::kMr) * kc * B::kMr;
              const int64_t rows = std::min<int64_t>(B::kMr, mc - ir);
              MicroKernel(kc, ap, bp, c + (i0 + ir) * ldc + j0 + jr, ldc, rows,
                          cols, load);
            }
          }
        }
      }
    }
  }
}

template <typename T>
void GemmReference(Trans trans_a, Trans trans_b, int64_t m, int64_t n,
                   int64_t k, const T* a, int64_t lda, const T* b, int64_t ldb,
                   T* c, int64_t ldc, bool accumulate) {
  for (int64_t i = 0; i < m; ++i) {
    for (int64_t j = 0; j < n; ++j) {
      T acc = accumulate ? c[i * ldc + j] : T(0);
      for (int64_t kk = 0; kk < k; ++kk)
        acc = std::fma(At(a, lda, trans_a, i, kk), At(b, ldb, trans_b, kk, j), acc);
      c[i * ldc + j] = acc;
    }
  }
}

template void Gemm<float>(Trans, Trans, int64_t, int64_t, int64_t, const float*,
                          int64_t, const float*, int64_t, float*, int64_t, bool);
template void Gemm<double>(Trans, Trans, int64_t, int64_t, int64_t,
                           const double*, int64_t, const double*, int64_t,
                           double*, int64_t, bool);
template void GemmReference<float>(Trans, Trans, int64_t, int64_t, int64_t,
                                   const float*, int64_t, const float*, int64_t,
                                   float*, int64_t, bool);
template void GemmReference<double>(Trans, Trans, int64_t, int64_t, int64_t,
                                    const double*, int64_t, const double*,
                                    int64_t, double*, int64_t, bool);

}  // namespace urban::kernels
