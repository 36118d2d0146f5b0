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

#ifndef URBAN_GEMM_HPP_
#define URBAN_GEMM_HPP_

#include <cstdint>

namespace urban::kernels {

enum class Trans { kNo, kYes };

// Row-major C[M x N] = beta*C + op(A)[M x K] * op(B)[K x N], beta in {0, 1}.
//
// Every output element accumulates its K products with fused multiply-add in
// strictly increasing k order, independent of blocking and thread count. A
// naive loop written the same way therefore reproduces the result bit for bit.
template <typename T>
void Gemm(Trans trans_a, Trans trans_b, int64_t m, int64_t n, int64_t k,
          const T* a, int64_t lda, const T* b, int64_t ldb, T* c, int64_t ldc,
          bool accumulate);

// Serial triple loop with the same accumulation order. Test oracle and
// benchmark baseline.
template <typename T>
void GemmReference(Trans trans_a, Trans trans_b, int64_t m, int64_t n,
                   int64_t k, const T* a, int64_t lda, const T* b, int64_t ldb,
                   T* c, int64_t ldc, bool accumulate);

}  // namespace urban::kernels

#endif  // URBAN_GEMM_HPP_
