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

#ifndef URBAN_TENSOR_HPP_
#define URBAN_TENSOR_HPP_

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace urban::nn {

using Shape = std::vector<int64_t>;

inline std::string ShapeString(const Shape& shape) {
  std::string s = "(";
  for (size_t i = 0; i < shape.size(); ++i) s += (i ? ", " : "") + std::to_string(shape[i]);
  return s + ")";
}

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Dense row-major tensor. Every dimension is >= 1 and the element count equals
// the product of the shape.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0)) : shape_(std::move(shape)) {
    for (int64_t d : shape_)
      if (d < 1) throw ShapeError("tensor dimension < 1 in " + ShapeString(shape_));
    data_.assign(static_cast<size_t>(
                     std::accumulate(shape_.begin(), shape_.end(), int64_t{1}, std::multiplies<>())),
                 fill);
  }

  const Shape& shape() const { return shape_; }
  size_t rank() const { return shape_.size(); }
  int64_t dim(size_t i) const { return shape_.at(i); }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }

  T& operator[](size_t i) { return data_[i]; }
  const T& operator[](size_t i) const { return data_[i]; }

  void Fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  // Same data, new shape with the same element count.
  void Reshape(Shape shape) {
    const auto n = std::accumulate(shape.begin(), shape.end(), int64_t{1}, std::multiplies<>());
    if (static_cast<size_t>(n) != data_.size())
      throw ShapeError("cannot reshape " + ShapeString(shape_) + " to " + ShapeString(shape));
    shape_ = std::move(shape);
  }

  bool operator==(const Tensor&) const = default;

 private:
  Shape shape_;
  std::vector<T> data_;
};

template <typename To, typename From>
Tensor<To> Cast(const Tensor<From>& src) {
  if (src.empty()) return {};
  Tensor<To> out(src.shape());
  for (size_t i = 0; i < src.size(); ++i) out[i] = static_cast<To>(src[i]);
  return out;
}

inline void RequireShape(const Shape& got, const Shape& want, const char* what) {
  if (got != want)
    throw ShapeError(std::string(what) + ": expected " + ShapeString(want) + ", got " + ShapeString(got));
}

}  // namespace urban::nn

#endif  // URBAN_TENSOR_HPP_
