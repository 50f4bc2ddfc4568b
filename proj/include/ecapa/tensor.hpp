// Copyright (c) 2026 The ecapa-cpp Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ECAPA_TENSOR_HPP_
#define ECAPA_TENSOR_HPP_

#include <Eigen/Dense>
#include <initializer_list>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "ecapa/common.hpp"
#include "ecapa/rng.hpp"

namespace ecapa {

using Index = Eigen::Index;
using Shape = std::vector<Index>;

inline Index numel_of(const Shape& shape) {
  Index n = 1;
  for (Index d : shape) n *= d;
  return n;
}

inline std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

// Dense n-d array, row-major, the carrier of features, activations,
// parameters and gradients. Shape conventions used across the project:
//   [B,C,T]  frame-level feature maps (batch, channel, time)
//   [B,F]    per-utterance vectors (pooled stats, embeddings, logits)
//   [Cout,Cin,k] conv weights, [Fout,Fin] dense weights, [C] biases
// Eigen does the arithmetic through the map views below.
template <typename Scalar>
class Tensor {
 public:
  using Storage = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  using MatrixRM =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using MatMap = Eigen::Map<MatrixRM>;
  using ConstMatMap = Eigen::Map<const MatrixRM>;
  using ArrMap = Eigen::Map<Storage>;
  using ConstArrMap = Eigen::Map<const Storage>;
  using VecMap = Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>;
  using ConstVecMap =
      Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>;

  Tensor() = default;

  explicit Tensor(Shape shape) : shape_(std::move(shape)) {
    for (Index d : shape_) ECAPA_CHECK(d > 0, "Tensor: extents must be positive, got " << shape_str(shape_));
    data_.setZero(numel_of(shape_));
  }

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }

  static Tensor constant(Shape shape, Scalar v) {
    Tensor t(std::move(shape));
    t.data_.setConstant(v);
    return t;
  }

  static Tensor from(Shape shape, std::initializer_list<Scalar> vals) {
    Tensor t(std::move(shape));
    ECAPA_CHECK(static_cast<Index>(vals.size()) == t.numel(),
                "Tensor::from: " << vals.size() << " values for shape " << shape_str(t.shape_));
    Index i = 0;
    for (Scalar v : vals) t.data_[i++] = v;
    return t;
  }

  static Tensor uniform(Shape shape, Rng& rng, double lo, double hi) {
    Tensor t(std::move(shape));
    for (Index i = 0; i < t.numel(); ++i)
      t.data_[i] = static_cast<Scalar>(rng.uniform(lo, hi));
    return t;
  }

  static Tensor randn(Shape shape, Rng& rng, double stddev = 1.0) {
    Tensor t(std::move(shape));
    for (Index i = 0; i < t.numel(); ++i)
      t.data_[i] = static_cast<Scalar>(stddev * rng.normal());
    return t;
  }

  const Shape& shape() const { return shape_; }
  int ndim() const { return static_cast<int>(shape_.size()); }
  Index dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
  Index numel() const { return data_.size(); }
  bool empty() const { return data_.size() == 0; }

  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }

  ArrMap array() { return ArrMap(data_.data(), data_.size()); }
  ConstArrMap array() const { return ConstArrMap(data_.data(), data_.size()); }

  VecMap vec() { return VecMap(data_.data(), data_.size()); }
  ConstVecMap vec() const { return ConstVecMap(data_.data(), data_.size()); }

  // 2-d view [d0,d1].
  MatMap mat() {
    ECAPA_CHECK(ndim() == 2, "Tensor::mat: want 2-d, have " << shape_str(shape_));
    return MatMap(data_.data(), shape_[0], shape_[1]);
  }
  ConstMatMap mat() const {
    ECAPA_CHECK(ndim() == 2, "Tensor::mat: want 2-d, have " << shape_str(shape_));
    return ConstMatMap(data_.data(), shape_[0], shape_[1]);
  }

  // Item b of a [B,C,T] tensor as a [C,T] matrix view.
  MatMap item(Index b) {
    ECAPA_CHECK(ndim() == 3 && b >= 0 && b < shape_[0],
                "Tensor::item: bad index " << b << " for " << shape_str(shape_));
    return MatMap(data_.data() + b * shape_[1] * shape_[2], shape_[1], shape_[2]);
  }
  ConstMatMap item(Index b) const {
    ECAPA_CHECK(ndim() == 3 && b >= 0 && b < shape_[0],
                "Tensor::item: bad index " << b << " for " << shape_str(shape_));
    return ConstMatMap(data_.data() + b * shape_[1] * shape_[2], shape_[1], shape_[2]);
  }

  Scalar& operator()(Index i) { return data_[i]; }
  Scalar operator()(Index i) const { return data_[i]; }
  Scalar& operator()(Index i, Index j) { return data_[i * shape_[1] + j]; }
  Scalar operator()(Index i, Index j) const { return data_[i * shape_[1] + j]; }
  Scalar& operator()(Index b, Index c, Index t) {
    return data_[(b * shape_[1] + c) * shape_[2] + t];
  }
  Scalar operator()(Index b, Index c, Index t) const {
    return data_[(b * shape_[1] + c) * shape_[2] + t];
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  bool all_finite() const {
    for (Index i = 0; i < numel(); ++i)
      if (!std::isfinite(static_cast<double>(data_[i]))) return false;
    return true;
  }

  template <typename Other>
  Tensor<Other> cast() const {
    Tensor<Other> out(shape_);
    for (Index i = 0; i < numel(); ++i)
      out(i) = static_cast<Other>(data_[i]);
    return out;
  }

  void set_zero() { data_.setZero(); }

 private:
  template <typename S>
  friend class Tensor;

  Shape shape_;
  Storage data_;
};

}  // namespace ecapa

#endif  // ECAPA_TENSOR_HPP_
