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

#include "urban/layers.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <limits>
#include <stdexcept>
#include <string>

#include "urban/gemm.hpp"

namespace urban::nn {
namespace {

using kernels::Gemm;
using kernels::Trans;

struct ConvDims {
  int64_t n, c, h, w, f, out_h, out_w;
  int64_t patch() const { return out_h * out_w; }
};

template <typename T>
ConvDims CheckConv(const Tensor<T>& input, const Tensor<T>& weight, const Conv2dGeometry& g) {
  if (input.rank() != 4) throw ShapeError("conv2d input must be [N, C, H, W], got " + ShapeString(input.shape()));
  if (weight.rank() != 4) throw ShapeError("conv2d weight must be [F, C, kh, kw], got " + ShapeString(weight.shape()));
  ConvDims d{input.dim(0), input.dim(1), input.dim(2), input.dim(3), weight.dim(0), 0, 0};
  if (weight.dim(1) != d.c)
    throw ShapeError("conv2d weight expects " + std::to_string(weight.dim(1)) + " input channels, got " +
                     std::to_string(d.c));
  if (weight.dim(2) != g.kernel_h || weight.dim(3) != g.kernel_w)
    throw ShapeError("conv2d weight kernel does not match the geometry");
  if (d.h + 2 * g.pad_h < g.kernel_h || d.w + 2 * g.pad_w < g.kernel_w)
    throw ShapeError("conv2d kernel larger than the padded input " + ShapeString(input.shape()));
  if (g.stride_h < 1 || g.stride_w < 1) throw ShapeError("conv2d stride must be >= 1");
  d.out_h = ConvOutputSize(d.h, g.kernel_h, g.pad_h, g.stride_h);
  d.out_w = ConvOutputSize(d.w, g.kernel_w, g.pad_w, g.stride_w);
  return d;
}

// Sum in eight interleaved lanes combined in a fixed order, so the loop
// vectorizes and the result does not depend on the thread count.
template <typename T>
double LaneSum(const T* x, int64_t n) {
  double lanes[8] = {};
  int64_t i = 0;
  for (; i + 8 <= n; i += 8)
    for (int l = 0; l < 8; ++l) lanes[l] += x[i + l];
  for (; i < n; ++i) lanes[i % 8] += x[i];
  return ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) + ((lanes[4] + lanes[5]) + (lanes[6] + lanes[7]));
}

template <typename T>
double LaneSumSquares(const T* x, int64_t n, double mean) {
  double lanes[8] = {};
  int64_t i = 0;
  for (; i + 8 <= n; i += 8)
    for (int l = 0; l < 8; ++l) {
      const double d = x[i + l] - mean;
      lanes[l] += d * d;
    }
  for (; i < n; ++i) {
    const double d = x[i] - mean;
    lanes[i % 8] += d * d;
  }
  return ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) + ((lanes[4] + lanes[5]) + (lanes[6] + lanes[7]));
}

template <typename T>
double LaneDot(const T* x, const T* y, int64_t n) {
  double lanes[8] = {};
  int64_t i = 0;
  for (; i + 8 <= n; i += 8)
    for (int l = 0; l < 8; ++l) lanes[l] += static_cast<double>(x[i + l]) * y[i + l];
  for (; i < n; ++i) lanes[i % 8] += static_cast<double>(x[i]) * y[i];
  return ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) + ((lanes[4] + lanes[5]) + (lanes[6] + lanes[7]));
}

}  // namespace

int64_t ConvOutputSize(int64_t in, int64_t kernel, int64_t pad, int64_t stride) {
  return (in + 2 * pad - kernel) / stride + 1;
}

template <typename T>
void Im2Col(const T* image, int64_t channels, int64_t height, int64_t width,
            const Conv2dGeometry& g, T* cols) {
  const int64_t out_h = ConvOutputSize(height, g.kernel_h, g.pad_h, g.stride_h);
  const int64_t out_w = ConvOutputSize(width, g.kernel_w, g.pad_w, g.stride_w);
  const int64_t rows = channels * g.kernel_h * g.kernel_w;
#pragma omp parallel for schedule(static)
  for (int64_t r = 0; r < rows; ++r) {
    const int64_t c = r / (g.kernel_h * g.kernel_w);
    const int64_t i = (r / g.kernel_w) % g.kernel_h;
    const int64_t j = r % g.kernel_w;
    const T* plane = image + c * height * width;
    T* dst = cols + r * out_h * out_w;
    for (int64_t oh = 0; oh < out_h; ++oh) {
      const int64_t ih = oh * g.stride_h - g.pad_h + i;
      T* drow = dst + oh * out_w;
      if (ih < 0 || ih >= height) {
        std::fill(drow, drow + out_w, T(0));
        continue;
      }
      const T* srow = plane + ih * width;
      for (int64_t ow = 0; ow < out_w; ++ow) {
        const int64_t iw = ow * g.stride_w - g.pad_w + j;
        drow[ow] = (iw >= 0 && iw < width) ? srow[iw] : T(0);
      }
    }
  }
}

template <typename T>
void Col2ImAdd(const T* cols, int64_t channels, int64_t height, int64_t width,
               const Conv2dGeometry& g, T* image) {
  const int64_t out_h = ConvOutputSize(height, g.kernel_h, g.pad_h, g.stride_h);
  const int64_t out_w = ConvOutputSize(width, g.kernel_w, g.pad_w, g.stride_w);
#pragma omp parallel for schedule(static)
  for (int64_t c = 0; c < channels; ++c) {
    T* plane = image + c * height * width;
    for (int64_t i = 0; i < g.kernel_h; ++i) {
      for (int64_t j = 0; j < g.kernel_w; ++j) {
        const T* src = cols + ((c * g.kernel_h + i) * g.kernel_w + j) * out_h * out_w;
        for (int64_t oh = 0; oh < out_h; ++oh) {
          const int64_t ih = oh * g.stride_h - g.pad_h + i;
          if (ih < 0 || ih >= height) continue;
          T* drow = plane + ih * width;
          const T* srow = src + oh * out_w;
          for (int64_t ow = 0; ow < out_w; ++ow) {
            const int64_t iw = ow * g.stride_w - g.pad_w + j;
            if (iw >= 0 && iw < width) drow[iw] += srow[ow];
          }
        }
      }
    }
  }
}

template <typename T>
Tensor<T> Conv2dForward(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                        const Conv2dGeometry& g) {
  const ConvDims d = CheckConv(input, weight, g);
  RequireShape(bias.shape(), {d.f}, "conv2d bias");
  const int64_t ck = d.c * g.kernel_h * g.kernel_w;
  const int64_t p = d.patch();
  Tensor<T> out({d.n, d.f, d.out_h, d.out_w});
  std::vector<T> cols(static_cast<size_t>(ck * p));
  for (int64_t n = 0; n < d.n; ++n) {
    Im2Col(input.data() + n * d.c * d.h * d.w, d.c, d.h, d.w, g, cols.data());
    T* y = out.data() + n * d.f * p;
    Gemm(Trans::kNo, Trans::kNo, d.f, p, ck, weight.data(), ck, cols.data(), p, y, p, false);
#pragma omp parallel for schedule(static)
    for (int64_t f = 0; f < d.f; ++f) {
      const T b = bias[static_cast<size_t>(f)];
      for (int64_t q = 0; q < p; ++q) y[f * p + q] += b;
    }
  }
  return out;
}

template <typename T>
Conv2dGrads<T> Conv2dBackward(const Tensor<T>& grad_output, const Tensor<T>& input,
                              const Tensor<T>& weight, const Conv2dGeometry& g,
                              bool need_input_grad) {
  const ConvDims d = CheckConv(input, weight, g);
  RequireShape(grad_output.shape(), {d.n, d.f, d.out_h, d.out_w}, "conv2d grad_output");
  const int64_t ck = d.c * g.kernel_h * g.kernel_w;
  const int64_t p = d.patch();

  Conv2dGrads<T> grads;
  grads.weight = Tensor<T>(weight.shape());
  grads.bias = Tensor<T>({d.f});
  if (need_input_grad) grads.input = Tensor<T>(input.shape());
  std::vector<T> cols(static_cast<size_t>(ck * p));
  std::vector<T> dcols(need_input_grad ? static_cast<size_t>(ck * p) : 0);

  for (int64_t n = 0; n < d.n; ++n) {
    const T* dy = grad_output.data() + n * d.f * p;
#pragma omp parallel for schedule(static)
    for (int64_t f = 0; f < d.f; ++f) {
      grads.bias[static_cast<size_t>(f)] += static_cast<T>(LaneSum(dy + f * p, p));
    }
    Im2Col(input.data() + n * d.c * d.h * d.w, d.c, d.h, d.w, g, cols.data());
    Gemm(Trans::kNo, Trans::kYes, d.f, ck, p, dy, p, cols.data(), p, grads.weight.data(), ck, true);
    if (need_input_grad) {
      Gemm(Trans::kYes, Trans::kNo, ck, p, d.f, weight.data(), ck, dy, p, dcols.data(), p, false);
      Col2ImAdd(dcols.data(), d.c, d.h, d.w, g, grads.input.data() + n * d.c * d.h * d.w);
    }
  }
  return grads;
}

namespace reference {

template <typename T>
Tensor<T> Conv2dForward(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                        const Conv2dGeometry& g) {
  const ConvDims d = CheckConv(input, weight, g);
  RequireShape(bias.shape(), {d.f}, "conv2d bias");
  Tensor<T> out({d.n, d.f, d.out_h, d.out_w});
  const T* x = input.data();
  const T* w = weight.data();
  T* y = out.data();
  for (int64_t n = 0; n < d.n; ++n)
    for (int64_t f = 0; f < d.f; ++f)
      for (int64_t oh = 0; oh < d.out_h; ++oh)
        for (int64_t ow = 0; ow < d.out_w; ++ow) {
          T acc = T(0);
          for (int64_t c = 0; c < d.c; ++c)
            for (int64_t i = 0; i < g.kernel_h; ++i)
              for (int64_t j = 0; j < g.kernel_w; ++j) {
                const int64_t ih = oh * g.stride_h - g.pad_h + i;
                const int64_t iw = ow * g.stride_w - g.pad_w + j;
                const bool inside = ih >= 0 && ih < d.h && iw >= 0 && iw < d.w;
                const T v = inside ? x[((n * d.c + c) * d.h + ih) * d.w + iw] : T(0);
                acc = std::fma(w[((f * d.c + c) * g.kernel_h + i) * g.kernel_w + j], v, acc);
              }
          y[((n * d.f + f) * d.out_h + oh) * d.out_w + ow] = acc + bias[static_cast<size_t>(f)];
        }
  return out;
}

template <typename T>
Conv2dGrads<T> Conv2dBackward(const Tensor<T>& grad_output, const Tensor<T>& input,
                              const Tensor<T>& weight, const Conv2dGeometry& g) {
  const ConvDims d = CheckConv(input, weight, g);
  RequireShape(grad_output.shape(), {d.n, d.f, d.out_h, d.out_w}, "conv2d grad_output");
  Conv2dGrads<T> grads{Tensor<T>(input.shape()), Tensor<T>(weight.shape()), Tensor<T>({d.f})};
  for (int64_t n = 0; n < d.n; ++n)
    for (int64_t f = 0; f < d.f; ++f)
      for (int64_t oh = 0; oh < d.out_h; ++oh)
        for (int64_t ow = 0; ow < d.out_w; ++ow) {
          const T dy = grad_output[static_cast<size_t>(((n * d.f + f) * d.out_h + oh) * d.out_w + ow)];
          grads.bias[static_cast<size_t>(f)] += dy;
          for (int64_t c = 0; c < d.c; ++c)
            for (int64_t i = 0; i < g.kernel_h; ++i)
              for (int64_t j = 0; j < g.kernel_w; ++j) {
                const int64_t ih = oh * g.stride_h - g.pad_h + i;
                const int64_t iw = ow * g.stride_w - g.pad_w + j;
                if (ih < 0 || ih >= d.h || iw < 0 || iw >= d.w) continue;
                const auto xi = static_cast<size_t>(((n * d.c + c) * d.h + ih) * d.w + iw);
                const auto wi = static_cast<size_t>(((f * d.c + c) * g.kernel_h + i) * g.kernel_w + j);
                grads.weight[wi] += input[xi] * dy;
                grads.input[xi] += weight[wi] * dy;
              }
        }
  return grads;
}

}  // namespace reference

template <typename T>
Tensor<T> Relu(const Tensor<T>& input) {
  Tensor<T> out(input.shape());
  const size_t n = input.size();
#pragma omp parallel for schedule(static)
  for (size_t i = 0; i < n; ++i) out[i] = input[i] > T(0) ? input[i] : T(0);
  return out;
}

template <typename T>
Tensor<T> ReluBackward(const Tensor<T>& grad_output, const Tensor<T>& input) {
  RequireShape(grad_output.shape(), input.shape(), "relu grad_output");
  Tensor<T> out(input.shape());
  const size_t n = input.size();
#pragma omp parallel for schedule(static)
  for (size_t i = 0; i < n; ++i) out[i] = input[i] > T(0) ? grad_output[i] : T(0);
  return out;
}

template <typename T>
Tensor<T> BatchNorm2dForward(const Tensor<T>& input, const Tensor<T>& gamma, const Tensor<T>& beta,
                             Tensor<T>& running_mean, Tensor<T>& running_var, Mode mode,
                             const BatchNormOptions& opts, BatchNormCache<T>* cache) {
  if (input.rank() != 4) throw ShapeError("batchnorm input must be [N, C, H, W]");
  const int64_t n = input.dim(0), c = input.dim(1), hw = input.dim(2) * input.dim(3);
  for (const Tensor<T>* t : std::initializer_list<const Tensor<T>*>{&gamma, &beta, &running_mean, &running_var})
    RequireShape(t->shape(), {c}, "batchnorm parameter");
  const int64_t count = n * hw;
  if (mode == Mode::kTrain && count < 2)
    throw std::invalid_argument("batchnorm train mode needs at least two values per channel");

  Tensor<T> out(input.shape());
  if (cache && mode == Mode::kTrain) {
    cache->normalized = Tensor<T>(input.shape());
    cache->inv_std.assign(static_cast<size_t>(c), T(0));
  }
#pragma omp parallel for schedule(static)
  for (int64_t ch = 0; ch < c; ++ch) {
    const auto ci = static_cast<size_t>(ch);
    double mean, inv_std;
    if (mode == Mode::kTrain) {
      double sum = 0.0;
      for (int64_t b = 0; b < n; ++b) sum += LaneSum(input.data() + (b * c + ch) * hw, hw);
      mean = sum / static_cast<double>(count);
      double ss = 0.0;
      for (int64_t b = 0; b < n; ++b) ss += LaneSumSquares(input.data() + (b * c + ch) * hw, hw, mean);
      const double var = ss / static_cast<double>(count);
      inv_std = 1.0 / std::sqrt(var + opts.eps);
      const double unbiased = ss / static_cast<double>(count - 1);
      running_mean[ci] = static_cast<T>((1.0 - opts.momentum) * running_mean[ci] + opts.momentum * mean);
      running_var[ci] = static_cast<T>((1.0 - opts.momentum) * running_var[ci] + opts.momentum * unbiased);
      if (cache) cache->inv_std[ci] = static_cast<T>(inv_std);
    } else {
      mean = running_mean[ci];
      inv_std = 1.0 / std::sqrt(static_cast<double>(running_var[ci]) + opts.eps);
    }
    const double gm = gamma[ci], bt = beta[ci];
    for (int64_t b = 0; b < n; ++b) {
      const int64_t off = (b * c + ch) * hw;
      const T* x = input.data() + off;
      T* y = out.data() + off;
      T* xh = (cache && mode == Mode::kTrain) ? cache->normalized.data() + off : nullptr;
      for (int64_t i = 0; i < hw; ++i) {
        const double norm = (x[i] - mean) * inv_std;
        if (xh) xh[i] = static_cast<T>(norm);
        y[i] = static_cast<T>(gm * norm + bt);
      }
    }
  }
  return out;
}

template <typename T>
BatchNormGrads<T> BatchNorm2dBackward(const Tensor<T>& grad_output, const Tensor<T>& gamma,
                                      const BatchNormCache<T>& cache) {
  RequireShape(grad_output.shape(), cache.normalized.shape(), "batchnorm grad_output");
  const int64_t n = grad_output.dim(0), c = grad_output.dim(1),
                hw = grad_output.dim(2) * grad_output.dim(3);
  const auto count = static_cast<double>(n * hw);
  BatchNormGrads<T> grads{Tensor<T>(grad_output.shape()), Tensor<T>({c}), Tensor<T>({c})};
#pragma omp parallel for schedule(static)
  for (int64_t ch = 0; ch < c; ++ch) {
    const auto ci = static_cast<size_t>(ch);
    double sum_dy = 0.0, sum_dy_xh = 0.0;
    for (int64_t b = 0; b < n; ++b) {
      const int64_t off = (b * c + ch) * hw;
      sum_dy += LaneSum(grad_output.data() + off, hw);
      sum_dy_xh += LaneDot(grad_output.data() + off, cache.normalized.data() + off, hw);
    }
    grads.gamma[ci] = static_cast<T>(sum_dy_xh);
    grads.beta[ci] = static_cast<T>(sum_dy);
    const double scale = static_cast<double>(gamma[ci]) * cache.inv_std[ci] / count;
    for (int64_t b = 0; b < n; ++b) {
      const int64_t off = (b * c + ch) * hw;
      const T* dy = grad_output.data() + off;
      const T* xh = cache.normalized.data() + off;
      T* dx = grads.input.data() + off;
      for (int64_t i = 0; i < hw; ++i)
        dx[i] = static_cast<T>(scale * (count * dy[i] - sum_dy - xh[i] * sum_dy_xh));
    }
  }
  return grads;
}

template <typename T>
Tensor<T> AdaptiveAvgPool2d(const Tensor<T>& input, int64_t out_h, int64_t out_w) {
  if (input.rank() != 4) throw ShapeError("avgpool input must be [N, C, H, W]");
  const int64_t planes = input.dim(0) * input.dim(1), h = input.dim(2), w = input.dim(3);
  if (h < out_h || w < out_w)
    throw ShapeError("avgpool input " + ShapeString(input.shape()) + " smaller than the output grid");
  Tensor<T> out({input.dim(0), input.dim(1), out_h, out_w});
#pragma omp parallel for schedule(static)
  for (int64_t p = 0; p < planes; ++p) {
    const T* x = input.data() + p * h * w;
    T* y = out.data() + p * out_h * out_w;
    for (int64_t i = 0; i < out_h; ++i) {
      const int64_t r0 = i * h / out_h, r1 = (i + 1) * h / out_h;
      for (int64_t j = 0; j < out_w; ++j) {
        const int64_t c0 = j * w / out_w, c1 = (j + 1) * w / out_w;
        double sum = 0.0;
        for (int64_t r = r0; r < r1; ++r)
          for (int64_t cc = c0; cc < c1; ++cc) sum += x[r * w + cc];
        y[i * out_w + j] = static_cast<T>(sum / static_cast<double>((r1 - r0) * (c1 - c0)));
      }
    }
  }
  return out;
}

template <typename T>
Tensor<T> AdaptiveAvgPool2dBackward(const Tensor<T>& grad_output, const Shape& input_shape) {
  const int64_t planes = input_shape.at(0) * input_shape.at(1), h = input_shape.at(2), w = input_shape.at(3);
  const int64_t out_h = grad_output.dim(2), out_w = grad_output.dim(3);
  RequireShape(grad_output.shape(), {input_shape[0], input_shape[1], out_h, out_w}, "avgpool grad_output");
  Tensor<T> grad(input_shape);
#pragma omp parallel for schedule(static)
  for (int64_t p = 0; p < planes; ++p) {
    const T* dy = grad_output.data() + p * out_h * out_w;
    T* dx = grad.data() + p * h * w;
    for (int64_t i = 0; i < out_h; ++i) {
      const int64_t r0 = i * h / out_h, r1 = (i + 1) * h / out_h;
      for (int64_t j = 0; j < out_w; ++j) {
        const int64_t c0 = j * w / out_w, c1 = (j + 1) * w / out_w;
        const T share = static_cast<T>(dy[i * out_w + j] / static_cast<double>((r1 - r0) * (c1 - c0)));
        for (int64_t r = r0; r < r1; ++r)
          for (int64_t cc = c0; cc < c1; ++cc) dx[r * w + cc] = share;
      }
    }
  }
  return grad;
}

template <typename T>
Tensor<T> LinearForward(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias) {
  if (input.rank() != 2 || weight.rank() != 2) throw ShapeError("linear expects [N, D] input and [O, D] weight");
  const int64_t n = input.dim(0), d = input.dim(1), o = weight.dim(0);
  if (weight.dim(1) != d)
    throw ShapeError("linear weight " + ShapeString(weight.shape()) + " does not accept input " +
                     ShapeString(input.shape()));
  RequireShape(bias.shape(), {o}, "linear bias");
  Tensor<T> out({n, o});
  Gemm(Trans::kNo, Trans::kYes, n, o, d, input.data(), d, weight.data(), d, out.data(), o, false);
  for (int64_t r = 0; r < n; ++r)
    for (int64_t j = 0; j < o; ++j) out[static_cast<size_t>(r * o + j)] += bias[static_cast<size_t>(j)];
  return out;
}

template <typename T>
LinearGrads<T> LinearBackward(const Tensor<T>& grad_output, const Tensor<T>& input,
                              const Tensor<T>& weight) {
  const int64_t n = input.dim(0), d = input.dim(1), o = weight.dim(0);
  RequireShape(grad_output.shape(), {n, o}, "linear grad_output");
  LinearGrads<T> grads{Tensor<T>(input.shape()), Tensor<T>(weight.shape()), Tensor<T>({o})};
  Gemm(Trans::kNo, Trans::kNo, n, d, o, grad_output.data(), o, weight.data(), d, grads.input.data(), d, false);
  Gemm(Trans::kYes, Trans::kNo, o, d, n, grad_output.data(), o, input.data(), d, grads.weight.data(), d, false);
  for (int64_t r = 0; r < n; ++r)
    for (int64_t j = 0; j < o; ++j) grads.bias[static_cast<size_t>(j)] += grad_output[static_cast<size_t>(r * o + j)];
  return grads;
}

namespace {

template <typename T>
double LogSumExp(const T* row, int64_t k) {
  const double mx = *std::max_element(row, row + k);
  double sum = 0.0;
  for (int64_t j = 0; j < k; ++j) sum += std::exp(static_cast<double>(row[j]) - mx);
  return mx + std::log(sum);
}

}  // namespace

template <typename T>
LossAndGrad<T> SoftmaxCrossEntropy(const Tensor<T>& logits, std::span<const int> labels) {
  if (logits.rank() != 2) throw ShapeError("logits must be [N, K]");
  const int64_t n = logits.dim(0), k = logits.dim(1);
  if (static_cast<int64_t>(labels.size()) != n) throw ShapeError("label count does not match the batch");
  LossAndGrad<T> result{0.0, Tensor<T>(logits.shape())};
  for (int64_t r = 0; r < n; ++r) {
    const int label = labels[static_cast<size_t>(r)];
    if (label < 0 || label >= k) throw std::out_of_range("label " + std::to_string(label) + " outside [0, K)");
    const T* row = logits.data() + r * k;
    const double lse = LogSumExp(row, k);
    result.loss += lse - row[label];
    T* g = result.grad_logits.data() + r * k;
    for (int64_t j = 0; j < k; ++j) {
      const double p = std::exp(static_cast<double>(row[j]) - lse);
      g[j] = static_cast<T>((p - (j == label ? 1.0 : 0.0)) / static_cast<double>(n));
    }
  }
  result.loss /= static_cast<double>(n);
  return result;
}

template <typename T>
Tensor<T> Softmax(const Tensor<T>& logits) {
  const int64_t n = logits.dim(0), k = logits.dim(1);
  Tensor<T> out(logits.shape());
  for (int64_t r = 0; r < n; ++r) {
    const T* row = logits.data() + r * k;
    const double lse = LogSumExp(row, k);
    for (int64_t j = 0; j < k; ++j) out[static_cast<size_t>(r * k + j)] = static_cast<T>(std::exp(row[j] - lse));
  }
  return out;
}

template <typename T>
std::vector<int> ArgmaxRows(const Tensor<T>& logits) {
  const int64_t n = logits.dim(0), k = logits.dim(1);
  std::vector<int> out(static_cast<size_t>(n));
  for (int64_t r = 0; r < n; ++r) {
    const T* row = logits.data() + r * k;
    out[static_cast<size_t>(r)] = static_cast<int>(std::max_element(row, row + k) - row);
  }
  return out;
}

#define URBAN_INSTANTIATE_LAYERS(T)                                                               \
  template void Im2Col<T>(const T*, int64_t, int64_t, int64_t, const Conv2dGeometry&, T*);       \
  template void Col2ImAdd<T>(const T*, int64_t, int64_t, int64_t, const Conv2dGeometry&, T*);    \
  template Tensor<T> Conv2dForward<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,      \
                                      const Conv2dGeometry&);                                    \
  template Conv2dGrads<T> Conv2dBackward<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, \
                                            const Conv2dGeometry&, bool);                        \
  template Tensor<T> reference::Conv2dForward<T>(const Tensor<T>&, const Tensor<T>&,             \
                                                 const Tensor<T>&, const Conv2dGeometry&);       \
  template Conv2dGrads<T> reference::Conv2dBackward<T>(const Tensor<T>&, const Tensor<T>&,       \
                                                       const Tensor<T>&, const Conv2dGeometry&); \
  template Tensor<T> Relu<T>(const Tensor<T>&);                                                  \
  template Tensor<T> ReluBackward<T>(const Tensor<T>&, const Tensor<T>&);                        \
  template Tensor<T> BatchNorm2dForward<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, \
                                           Tensor<T>&, Tensor<T>&, Mode,                         \
                                           const BatchNormOptions&, BatchNormCache<T>*);         \
  template BatchNormGrads<T> BatchNorm2dBackward<T>(const Tensor<T>&, const Tensor<T>&,          \
                                                    const BatchNormCache<T>&);                   \
  template Tensor<T> AdaptiveAvgPool2d<T>(const Tensor<T>&, int64_t, int64_t);                   \
  template Tensor<T> AdaptiveAvgPool2dBackward<T>(const Tensor<T>&, const Shape&);               \
  template Tensor<T> LinearForward<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);     \
  template LinearGrads<T> LinearBackward<T>(const Tensor<T>&, const Tensor<T>&,                  \
                                            const Tensor<T>&);                                   \
  template LossAndGrad<T> SoftmaxCrossEntropy<T>(const Tensor<T>&, std::span<const int>);        \
  template Tensor<T> Softmax<T>(const Tensor<T>&);                                               \
  template std::vector<int> ArgmaxRows<T>(const Tensor<T>&);

URBAN_INSTANTIATE_LAYERS(float)
URBAN_INSTANTIATE_LAYERS(double)

#undef URBAN_INSTANTIATE_LAYERS

}  // namespace urban::nn
