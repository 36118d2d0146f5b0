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

#ifndef URBAN_NETWORK_HPP_
#define URBAN_NETWORK_HPP_

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "urban/layers.hpp"
#include "urban/tensor.hpp"

namespace urban::nn {

struct ConvBlockConfig {
  int64_t out_filters = 0;
  int64_t kernel_h = 0, kernel_w = 0;
  int64_t pad_h = 0, pad_w = 0;
  int64_t stride_h = 1, stride_w = 1;

  Conv2dGeometry geometry() const { return {kernel_h, kernel_w, pad_h, pad_w, stride_h, stride_w}; }
  bool operator==(const ConvBlockConfig&) const = default;
};

// The four convolution blocks: filters, kernel, padding, stride.
inline const std::vector<ConvBlockConfig>& PaperConvBlocks() {
  static const std::vector<ConvBlockConfig> kBlocks = {
      {32, 3, 5, 2, 2, 2, 2},
      {64, 3, 5, 2, 2, 1, 1},
      {128, 5, 5, 2, 2, 1, 1},
      {256, 5, 5, 2, 2, 1, 1},
  };
  return kBlocks;
}

struct ModelConfig {
  int64_t in_channels = 2;
  int64_t in_height = 64;
  int64_t in_width = 344;
  std::vector<ConvBlockConfig> blocks = PaperConvBlocks();
  int64_t pool_h = 2;
  int64_t pool_w = 4;
  int64_t hidden = 512;
  int64_t num_classes = 10;
  BatchNormOptions batch_norm;

  static ModelConfig Paper(int64_t num_classes) {
    ModelConfig c;
    c.num_classes = num_classes;
    return c;
  }

  int64_t flat_features() const { return blocks.back().out_filters * pool_h * pool_w; }
  // [C, H, W] after each block.
  std::vector<std::array<int64_t, 3>> BlockOutputShapes() const;
  // Throws ShapeError if a block or the pooling grid does not fit.
  void Validate() const;

  bool operator==(const ModelConfig& o) const {
    return in_channels == o.in_channels && in_height == o.in_height && in_width == o.in_width &&
           blocks == o.blocks && pool_h == o.pool_h && pool_w == o.pool_w && hidden == o.hidden &&
           num_classes == o.num_classes;
  }
};

template <typename T>
struct ConvBlockParams {
  Tensor<T> weight;  // [F, C, kh, kw]
  Tensor<T> bias;    // [F]
  Tensor<T> bn_gamma;
  Tensor<T> bn_beta;
  Tensor<T> bn_running_mean;
  Tensor<T> bn_running_var;
};

template <typename T>
struct ModelParams {
  std::vector<ConvBlockParams<T>> blocks;
  Tensor<T> fc1_weight;  // [hidden, flat]
  Tensor<T> fc1_bias;
  Tensor<T> fc2_weight;  // [K, hidden]
  Tensor<T> fc2_bias;

  // Visits trainable tensors in a fixed order with stable names.
  template <typename Self, typename Fn>
  static void VisitTrainable(Self& self, Fn&& fn) {
    for (size_t i = 0; i < self.blocks.size(); ++i) {
      const std::string p = "block" + std::to_string(i + 1) + ".";
      fn(p + "conv.weight", self.blocks[i].weight);
      fn(p + "conv.bias", self.blocks[i].bias);
      fn(p + "bn.gamma", self.blocks[i].bn_gamma);
      fn(p + "bn.beta", self.blocks[i].bn_beta);
    }
    fn(std::string("fc1.weight"), self.fc1_weight);
    fn(std::string("fc1.bias"), self.fc1_bias);
    fn(std::string("fc2.weight"), self.fc2_weight);
    fn(std::string("fc2.bias"), self.fc2_bias);
  }

  // Trainable tensors followed by the batch-norm running statistics.
  template <typename Self, typename Fn>
  static void VisitAll(Self& self, Fn&& fn) {
    VisitTrainable(self, fn);
    for (size_t i = 0; i < self.blocks.size(); ++i) {
      const std::string p = "block" + std::to_string(i + 1) + ".";
      fn(p + "bn.running_mean", self.blocks[i].bn_running_mean);
      fn(p + "bn.running_var", self.blocks[i].bn_running_var);
    }
  }

  template <typename Fn> void ForEachTrainable(Fn&& fn) { VisitTrainable(*this, fn); }
  template <typename Fn> void ForEachTrainable(Fn&& fn) const { VisitTrainable(*this, fn); }
  template <typename Fn> void ForEachTensor(Fn&& fn) { VisitAll(*this, fn); }
  template <typename Fn> void ForEachTensor(Fn&& fn) const { VisitAll(*this, fn); }

  bool operator==(const ModelParams& o) const {
    bool same = true;
    std::vector<const Tensor<T>*> mine, theirs;
    ForEachTensor([&](const std::string&, const Tensor<T>& t) { mine.push_back(&t); });
    o.ForEachTensor([&](const std::string&, const Tensor<T>& t) { theirs.push_back(&t); });
    if (mine.size() != theirs.size()) return false;
    for (size_t i = 0; i < mine.size() && same; ++i) same = *mine[i] == *theirs[i];
    return same;
  }
};

// Zero-filled tensors shaped by `config` (running variance is 1).
template <typename T>
ModelParams<T> ZeroParams(const ModelConfig& config);

// Kaiming-uniform weights with bound sqrt(6 / fan_in); zero biases; gamma 1,
// beta 0; running statistics (0, 1). Draws come from the kInit seed stream.
template <typename T>
ModelParams<T> InitParams(const ModelConfig& config, uint64_t seed);

// Weights, biases, gamma and beta. Running statistics are not counted.
template <typename T>
int64_t CountParams(const ModelParams<T>& params);
int64_t CountParams(const ModelConfig& config);

template <typename To, typename From>
ModelParams<To> CastParams(const ModelParams<From>& src);

template <typename T>
struct BlockCache {
  Tensor<T> input;        // conv input
  Tensor<T> activation;   // ReLU output, batch-norm input
  BatchNormCache<T> norm;
};

template <typename T>
struct ForwardCache {
  std::vector<BlockCache<T>> blocks;
  Shape pool_input_shape;
  Tensor<T> flat;      // [N, flat]
  Tensor<T> hidden_pre;  // fc1 output before ReLU
  Tensor<T> hidden;    // after ReLU
};

// Per block conv -> ReLU -> batch norm; then adaptive average pooling,
// flatten, fc1, ReLU, fc2.
template <typename T>
class Network {
 public:
  Network(ModelConfig config, ModelParams<T> params);

  const ModelConfig& config() const { return config_; }
  const ModelParams<T>& params() const { return params_; }
  ModelParams<T>& mutable_params() { return params_; }

  // True once a train-mode forward has updated the running statistics.
  bool bn_stats_initialized() const { return bn_stats_initialized_; }
  void set_bn_stats_initialized(bool v) { bn_stats_initialized_ = v; }

  // batch [N, C, H, W] -> logits [N, K]. Train mode updates the running
  // statistics and fills `cache` for Backward.
  Tensor<T> Forward(const Tensor<T>& batch, Mode mode, ForwardCache<T>* cache = nullptr);

  // Gradients of every trainable tensor; running-stat slots are left zero.
  ModelParams<T> Backward(const ForwardCache<T>& cache, const Tensor<T>& grad_logits) const;

 private:
  ModelConfig config_;
  ModelParams<T> params_;
  bool bn_stats_initialized_ = false;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction: p -= lr * m_hat / (sqrt(v_hat) + eps).
template <typename T>
class Adam {
 public:
  Adam(const ModelParams<T>& params, AdamConfig config = {});

  int64_t step_count() const { return t_; }
  const AdamConfig& config() const { return config_; }
  void Step(ModelParams<T>& params, const ModelParams<T>& grads);

 private:
  AdamConfig config_;
  int64_t t_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

}  // namespace urban::nn

#endif  // URBAN_NETWORK_HPP_
