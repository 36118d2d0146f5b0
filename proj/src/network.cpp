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

#include "urban/network.hpp"

#include <cmath>
#include <stdexcept>

#include "urban/rng.hpp"

namespace urban::nn {

std::vector<std::array<int64_t, 3>> ModelConfig::BlockOutputShapes() const {
  std::vector<std::array<int64_t, 3>> shapes;
  int64_t c = in_channels, h = in_height, w = in_width;
  for (const auto& b : blocks) {
    if (h + 2 * b.pad_h < b.kernel_h || w + 2 * b.pad_w < b.kernel_w)
      throw ShapeError("conv block does not fit its input");
    h = ConvOutputSize(h, b.kernel_h, b.pad_h, b.stride_h);
    w = ConvOutputSize(w, b.kernel_w, b.pad_w, b.stride_w);
    c = b.out_filters;
    shapes.push_back({c, h, w});
  }
  return shapes;
}

void ModelConfig::Validate() const {
  if (blocks.empty()) throw ShapeError("model needs at least one conv block");
  if (num_classes < 1 || hidden < 1 || in_channels < 1) throw ShapeError("model sizes must be positive");
  for (const auto& b : blocks)
    if (b.out_filters < 1 || b.kernel_h < 1 || b.kernel_w < 1 || b.stride_h < 1 || b.stride_w < 1 ||
        b.pad_h < 0 || b.pad_w < 0)
      throw ShapeError("invalid conv block parameters");
  const auto last = BlockOutputShapes().back();
  if (last[1] < pool_h || last[2] < pool_w) throw ShapeError("final feature map smaller than the pooling grid");
}

template <typename T>
ModelParams<T> ZeroParams(const ModelConfig& config) {
  config.Validate();
  ModelParams<T> p;
  int64_t in_c = config.in_channels;
  for (const auto& b : config.blocks) {
    ConvBlockParams<T> bp;
    bp.weight = Tensor<T>({b.out_filters, in_c, b.kernel_h, b.kernel_w});
    bp.bias = Tensor<T>({b.out_filters});
    bp.bn_gamma = Tensor<T>({b.out_filters});
    bp.bn_beta = Tensor<T>({b.out_filters});
    bp.bn_running_mean = Tensor<T>({b.out_filters});
    bp.bn_running_var = Tensor<T>({b.out_filters}, T(1));
    p.blocks.push_back(std::move(bp));
    in_c = b.out_filters;
  }
  p.fc1_weight = Tensor<T>({config.hidden, config.flat_features()});
  p.fc1_bias = Tensor<T>({config.hidden});
  p.fc2_weight = Tensor<T>({config.num_classes, config.hidden});
  p.fc2_bias = Tensor<T>({config.num_classes});
  return p;
}

template <typename T>
ModelParams<T> InitParams(const ModelConfig& config, uint64_t seed) {
  ModelParams<T> p = ZeroParams<T>(config);
  Rng rng(DeriveSeed(seed, SeedStream::kInit));
  auto fill = [&](Tensor<T>& w) {
    int64_t fan_in = 1;
    for (size_t i = 1; i < w.rank(); ++i) fan_in *= w.dim(i);
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (auto& v : w.values()) v = static_cast<T>(rng.Uniform(-bound, bound));
  };
  for (auto& b : p.blocks) {
    fill(b.weight);
    b.bn_gamma.Fill(T(1));
  }
  fill(p.fc1_weight);
  fill(p.fc2_weight);
  return p;
}

template <typename T>
int64_t CountParams(const ModelParams<T>& params) {
  int64_t n = 0;
  params.ForEachTrainable([&](const std::string&, const Tensor<T>& t) { n += static_cast<int64_t>(t.size()); });
  return n;
}

int64_t CountParams(const ModelConfig& config) {
  config.Validate();
  int64_t n = 0, in_c = config.in_channels;
  for (const auto& b : config.blocks) {
    n += b.out_filters * in_c * b.kernel_h * b.kernel_w + b.out_filters;  // conv
    n += 2 * b.out_filters;                                               // gamma, beta
    in_c = b.out_filters;
  }
  n += config.hidden * config.flat_features() + config.hidden;
  n += config.num_classes * config.hidden + config.num_classes;
  return n;
}

template <typename To, typename From>
ModelParams<To> CastParams(const ModelParams<From>& src) {
  ModelParams<To> out;
  for (const auto& b : src.blocks)
    out.blocks.push_back({Cast<To>(b.weight), Cast<To>(b.bias), Cast<To>(b.bn_gamma), Cast<To>(b.bn_beta),
                          Cast<To>(b.bn_running_mean), Cast<To>(b.bn_running_var)});
  out.fc1_weight = Cast<To>(src.fc1_weight);
  out.fc1_bias = Cast<To>(src.fc1_bias);
  out.fc2_weight = Cast<To>(src.fc2_weight);
  out.fc2_bias = Cast<To>(src.fc2_bias);
  return out;
}

template <typename T>
Network<T>::Network(ModelConfig config, ModelParams<T> params)
    : config_(std::move(config)), params_(std::move(params)) {
  const ModelParams<T> expected = ZeroParams<T>(config_);
  std::vector<Shape> want;
  expected.ForEachTensor([&](const std::string&, const Tensor<T>& t) { want.push_back(t.shape()); });
  size_t i = 0;
  params_.ForEachTensor([&](const std::string& name, const Tensor<T>& t) {
    if (i >= want.size()) throw ShapeError("unexpected tensor " + name);
    RequireShape(t.shape(), want[i++], name.c_str());
  });
  if (i != want.size() || params_.blocks.size() != config_.blocks.size())
    throw ShapeError("parameter set does not match the model config");
}

template <typename T>
Tensor<T> Network<T>::Forward(const Tensor<T>& batch, Mode mode, ForwardCache<T>* cache) {
  if (batch.rank() != 4)
    throw ShapeError("network input must be [N, C, H, W], got " + ShapeString(batch.shape()));
  const int64_t n = batch.dim(0);
  RequireShape(batch.shape(), {n, config_.in_channels, config_.in_height, config_.in_width}, "network input");
  if (cache) cache->blocks.assign(config_.blocks.size(), {});

  Tensor<T> x = batch;
  for (size_t i = 0; i < config_.blocks.size(); ++i) {
    auto& p = params_.blocks[i];
    Tensor<T> conv = Conv2dForward(x, p.weight, p.bias, config_.blocks[i].geometry());
    Tensor<T> act = Relu(conv);
    conv = Tensor<T>();
    BatchNormCache<T>* norm_cache = cache ? &cache->blocks[i].norm : nullptr;
    Tensor<T> y = BatchNorm2dForward(act, p.bn_gamma, p.bn_beta, p.bn_running_mean, p.bn_running_var, mode,
                                     config_.batch_norm, norm_cache);
    if (cache) {
      cache->blocks[i].input = std::move(x);
      cache->blocks[i].activation = std::move(act);
    }
    x = std::move(y);
  }
  if (mode == Mode::kTrain) bn_stats_initialized_ = true;

  Tensor<T> pooled = AdaptiveAvgPool2d(x, config_.pool_h, config_.pool_w);
  if (cache) cache->pool_input_shape = x.shape();
  pooled.Reshape({n, config_.flat_features()});
  Tensor<T> hidden_pre = LinearForward(pooled, params_.fc1_weight, params_.fc1_bias);
  Tensor<T> hidden = Relu(hidden_pre);
  Tensor<T> logits = LinearForward(hidden, params_.fc2_weight, params_.fc2_bias);
  if (cache) {
    cache->flat = std::move(pooled);
    cache->hidden_pre = std::move(hidden_pre);
    cache->hidden = std::move(hidden);
  }
  return logits;
}

template <typename T>
ModelParams<T> Network<T>::Backward(const ForwardCache<T>& cache, const Tensor<T>& grad_logits) const {
  if (cache.blocks.size() != config_.blocks.size() || cache.hidden.empty())
    throw std::logic_error("Backward needs the cache of a train-mode forward pass");
  ModelParams<T> grads = ZeroParams<T>(config_);

  LinearGrads<T> fc2 = LinearBackward(grad_logits, cache.hidden, params_.fc2_weight);
  grads.fc2_weight = std::move(fc2.weight);
  grads.fc2_bias = std::move(fc2.bias);
  Tensor<T> dh = ReluBackward(fc2.input, cache.hidden_pre);
  LinearGrads<T> fc1 = LinearBackward(dh, cache.flat, params_.fc1_weight);
  grads.fc1_weight = std::move(fc1.weight);
  grads.fc1_bias = std::move(fc1.bias);

  const int64_t n = cache.flat.dim(0);
  Tensor<T> dpool = std::move(fc1.input);
  dpool.Reshape({n, config_.blocks.back().out_filters, config_.pool_h, config_.pool_w});
  Tensor<T> dy = AdaptiveAvgPool2dBackward(dpool, cache.pool_input_shape);

  for (size_t i = config_.blocks.size(); i-- > 0;) {
    const auto& bc = cache.blocks[i];
    const auto& p = params_.blocks[i];
    BatchNormGrads<T> bn = BatchNorm2dBackward(dy, p.bn_gamma, bc.norm);
    grads.blocks[i].bn_gamma = std::move(bn.gamma);
    grads.blocks[i].bn_beta = std::move(bn.beta);
    Tensor<T> dconv = ReluBackward(bn.input, bc.activation);
    Conv2dGrads<T> conv = Conv2dBackward(dconv, bc.input, p.weight, config_.blocks[i].geometry(), i > 0);
    grads.blocks[i].weight = std::move(conv.weight);
    grads.blocks[i].bias = std::move(conv.bias);
    dy = std::move(conv.input);
  }
  return grads;
}

template <typename T>
Adam<T>::Adam(const ModelParams<T>& params, AdamConfig config) : config_(config) {
  params.ForEachTrainable([&](const std::string&, const Tensor<T>& t) {
    m_.emplace_back(t.size(), 0.0);
    v_.emplace_back(t.size(), 0.0);
  });
}

template <typename T>
void Adam<T>::Step(ModelParams<T>& params, const ModelParams<T>& grads) {
  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  std::vector<const Tensor<T>*> g;
  grads.ForEachTrainable([&](const std::string&, const Tensor<T>& t) { g.push_back(&t); });
  size_t idx = 0;
  params.ForEachTrainable([&](const std::string& name, Tensor<T>& p) {
    if (idx >= g.size() || g[idx]->size() != p.size()) throw ShapeError("gradient does not match " + name);
    const Tensor<T>& gt = *g[idx];
    auto& m = m_[idx];
    auto& v = v_[idx];
    const auto count = static_cast<int64_t>(p.size());
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < count; ++i) {
      const auto k = static_cast<size_t>(i);
      const double gi = gt[k];
      m[k] = config_.beta1 * m[k] + (1.0 - config_.beta1) * gi;
      v[k] = config_.beta2 * v[k] + (1.0 - config_.beta2) * gi * gi;
      const double m_hat = m[k] / c1;
      const double v_hat = v[k] / c2;
      p[k] = static_cast<T>(p[k] - config_.lr * m_hat / (std::sqrt(v_hat) + config_.eps));
    }
    ++idx;
  });
}

template ModelParams<float> ZeroParams<float>(const ModelConfig&);
template ModelParams<double> ZeroParams<double>(const ModelConfig&);
template ModelParams<float> InitParams<float>(const ModelConfig&, uint64_t);
template ModelParams<double> InitParams<double>(const ModelConfig&, uint64_t);
template int64_t CountParams<float>(const ModelParams<float>&);
template int64_t CountParams<double>(const ModelParams<double>&);
template ModelParams<float> CastParams<float, double>(const ModelParams<double>&);
template ModelParams<double> CastParams<double, float>(const ModelParams<float>&);
template ModelParams<float> CastParams<float, float>(const ModelParams<float>&);
template ModelParams<double> CastParams<double, double>(const ModelParams<double>&);
template class Network<float>;
template class Network<double>;
template class Adam<float>;
template class Adam<double>;

}  // namespace urban::nn
