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

#ifndef URBAN_LAYERS_HPP_
#define URBAN_LAYERS_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "urban/tensor.hpp"

namespace urban::nn {

struct Conv2dGeometry {
  int64_t kernel_h = 1, kernel_w = 1;
  int64_t pad_h = 0, pad_w = 0;
  int64_t stride_h = 1, stride_w = 1;
};

// floor((in + 2 * pad - kernel) / stride) + 1
int64_t ConvOutputSize(int64_t in, int64_t kernel, int64_t pad, int64_t stride);

template <typename T>
struct Conv2dGrads {
  Tensor<T> input;   // empty when not requested
  Tensor<T> weight;
  Tensor<T> bias;
};

// Cross-correlation with zero padding. input [N, C, H, W], weight [F, C, kh, kw],
// bias [F] -> [N, F, H', W']. Lowered to im2col + Gemm.
template <typename T>
Tensor<T> Conv2dForward(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                        const Conv2dGeometry& g);

template <typename T>
Conv2dGrads<T> Conv2dBackward(const Tensor<T>& grad_output, const Tensor<T>& input,
                              const Tensor<T>& weight, const Conv2dGeometry& g,
                              bool need_input_grad = true);

// Patch matrix [C * kh * kw, H' * W'] of one image; rows ordered (c, i, j).
template <typename T>
void Im2Col(const T* image, int64_t channels, int64_t height, int64_t width,
            const Conv2dGeometry& g, T* cols);

// Adds patch-matrix columns back into the image (the adjoint of Im2Col).
template <typename T>
void Col2ImAdd(const T* cols, int64_t channels, int64_t height, int64_t width,
               const Conv2dGeometry& g, T* image);

// Serial loop implementations kept as oracles for tests and benchmarks. They
// accumulate in the same (c, i, j) fused multiply-add order as the lowered path.
namespace reference {

template <typename T>
Tensor<T> Conv2dForward(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                        const Conv2dGeometry& g);

template <typename T>
Conv2dGrads<T> Conv2dBackward(const Tensor<T>& grad_output, const Tensor<T>& input,
                              const Tensor<T>& weight, const Conv2dGeometry& g);

}  // namespace reference

template <typename T>
Tensor<T> Relu(const Tensor<T>& input);

// Passes grad where input > 0.
template <typename T>
Tensor<T> ReluBackward(const Tensor<T>& grad_output, const Tensor<T>& input);

enum class Mode { kTrain, kEval };

struct BatchNormOptions {
  double momentum = 0.1;
  double eps = 1e-5;
};

template <typename T>
struct BatchNormCache {
  Tensor<T> normalized;        // x_hat
  std::vector<T> inv_std;      // per channel
};

// Per-channel normalization over (N, H, W). Train mode uses the biased batch
// variance and folds the batch statistics into the running estimates (the
// running variance receives the unbiased estimate); eval mode uses the
// running statistics.
template <typename T>
Tensor<T> BatchNorm2dForward(const Tensor<T>& input, const Tensor<T>& gamma, const Tensor<T>& beta,
                             Tensor<T>& running_mean, Tensor<T>& running_var, Mode mode,
                             const BatchNormOptions& opts = {}, BatchNormCache<T>* cache = nullptr);

template <typename T>
struct BatchNormGrads {
  Tensor<T> input, gamma, beta;
};

// Train-mode backward.
template <typename T>
BatchNormGrads<T> BatchNorm2dBackward(const Tensor<T>& grad_output, const Tensor<T>& gamma,
                                      const BatchNormCache<T>& cache);

// Adaptive average pooling to an out_h x out_w grid. Cell (i, j) averages rows
// [floor(i*H/out_h), floor((i+1)*H/out_h)) and the analogous columns.
template <typename T>
Tensor<T> AdaptiveAvgPool2d(const Tensor<T>& input, int64_t out_h, int64_t out_w);

template <typename T>
Tensor<T> AdaptiveAvgPool2dBackward(const Tensor<T>& grad_output, const Shape& input_shape);

// input [N, D], weight [O, D], bias [O] -> x W^T + b.
template <typename T>
Tensor<T> LinearForward(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias);

template <typename T>
struct LinearGrads {
  Tensor<T> input, weight, bias;
};

template <typename T>
LinearGrads<T> LinearBackward(const Tensor<T>& grad_output, const Tensor<T>& input,
                              const Tensor<T>& weight);

template <typename T>
struct LossAndGrad {
  double loss = 0.0;      // batch mean
  Tensor<T> grad_logits;  // (softmax - onehot) / N
};

template <typename T>
LossAndGrad<T> SoftmaxCrossEntropy(const Tensor<T>& logits, std::span<const int> labels);

// Row-wise softmax through a stable log-sum-exp.
template <typename T>
Tensor<T> Softmax(const Tensor<T>& logits);

// Index of the largest logit per row, ties to the lowest index.
template <typename T>
std::vector<int> ArgmaxRows(const Tensor<T>& logits);

}  // namespace urban::nn

#endif  // URBAN_LAYERS_HPP_
