/* Copyright 2026 The ettk authors. All rights reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef ETTK_TENSOR_HPP_
#define ETTK_TENSOR_HPP_

#include <Eigen/Core>
#include <cmath>
#include <initializer_list>
#include <memory>
#include <utility>
#include <vector>

#include "ettk/common.hpp"
#include "ettk/rng.hpp"

namespace ettk {

/// Dense n-dimensional array over a contiguous row-major buffer, templated on
/// scalar so the same code runs in float for training and double for the
/// verification oracles. Carries an optional gradient buffer of the same
/// shape plus a requires_grad flag consumed by the tape.
template <typename Scalar>
class Tensor {
 public:
  using Storage = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  using MatrixMap =
      Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
  using ConstMatrixMap =
      Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
  using VectorMap = Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>;
  using ConstVectorMap = Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>;

  Tensor() = default;
  Tensor(Tensor&&) noexcept = default;
  Tensor& operator=(Tensor&&) noexcept = default;
  Tensor(const Tensor& other)
      : shape_(other.shape_), data_(other.data_), requires_grad_(other.requires_grad_) {
    if (other.grad_) grad_ = std::make_unique<Storage>(*other.grad_);
  }
  Tensor& operator=(const Tensor& other) {
    if (this != &other) {
      shape_ = other.shape_;
      data_ = other.data_;
      requires_grad_ = other.requires_grad_;
      grad_ = other.grad_ ? std::make_unique<Storage>(*other.grad_) : nullptr;
    }
    return *this;
  }

  explicit Tensor(Shape shape) : shape_(std::move(shape)) {
    validate_shape();
    data_ = Storage::Zero(shape_size(shape_));
  }

  Tensor(Shape shape, std::vector<Scalar> values) : shape_(std::move(shape)) {
    validate_shape();
    if (static_cast<Index>(values.size()) != shape_size(shape_)) {
      throw DimensionError("Tensor: " + std::to_string(values.size()) +
                           " values for shape " + shape_str(shape_));
    }
    data_ = Eigen::Map<const Storage>(values.data(), static_cast<Index>(values.size()));
  }

  Tensor(Shape shape, std::initializer_list<Scalar> values)
      : Tensor(std::move(shape), std::vector<Scalar>(values)) {}

  static Tensor full(Shape shape, Scalar value) {
    Tensor t(std::move(shape));
    t.data_.setConstant(value);
    return t;
  }

  static Tensor scalar(Scalar value) { return Tensor(Shape{1}, {value}); }

  static Tensor random_uniform(Shape shape, double lo, double hi, Rng& rng) {
    Tensor t(std::move(shape));
    for (Index i = 0; i < t.size(); ++i) t.data_[i] = static_cast<Scalar>(rng.uniform(lo, hi));
    return t;
  }

  template <typename Other>
  static Tensor cast_from(const Tensor<Other>& other) {
    Tensor t(other.shape());
    for (Index i = 0; i < t.size(); ++i) t.data_[i] = static_cast<Scalar>(other.flat()[i]);
    return t;
  }

  const Shape& shape() const { return shape_; }
  Index rank() const { return static_cast<Index>(shape_.size()); }
  Index extent(Index axis) const { return shape_[static_cast<std::size_t>(axis)]; }
  Index size() const { return data_.size(); }
  bool empty() const { return data_.size() == 0; }

  Storage& flat() { return data_; }
  const Storage& flat() const { return data_; }
  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }

  Scalar& operator[](Index i) { return data_[i]; }
  Scalar operator[](Index i) const { return data_[i]; }

  Scalar& at(Index i, Index j) { return data_[i * extent(1) + j]; }
  Scalar at(Index i, Index j) const { return data_[i * extent(1) + j]; }
  Scalar& at(Index i, Index j, Index k) {
    return data_[(i * extent(1) + j) * extent(2) + k];
  }
  Scalar at(Index i, Index j, Index k) const {
    return data_[(i * extent(1) + j) * extent(2) + k];
  }
  Scalar& at(Index i, Index j, Index k, Index l) {
    return data_[((i * extent(1) + j) * extent(2) + k) * extent(3) + l];
  }
  Scalar at(Index i, Index j, Index k, Index l) const {
    return data_[((i * extent(1) + j) * extent(2) + k) * extent(3) + l];
  }

  /// View the flat buffer as a rows x cols row-major matrix.
  MatrixMap mat(Index rows, Index cols) {
    require_size(rows * cols, "mat");
    return MatrixMap(data_.data(), rows, cols);
  }
  ConstMatrixMap mat(Index rows, Index cols) const {
    require_size(rows * cols, "mat");
    return ConstMatrixMap(data_.data(), rows, cols);
  }
  /// View a rank-2 tensor with its own extents.
  MatrixMap mat2() { return mat(extent(0), extent(1)); }
  ConstMatrixMap mat2() const { return mat(extent(0), extent(1)); }

  VectorMap vec() { return VectorMap(data_.data(), data_.size()); }
  ConstVectorMap vec() const { return ConstVectorMap(data_.data(), data_.size()); }

  Scalar value() const {
    if (size() != 1) throw ContractError("Tensor::value: tensor is not scalar, shape " + shape_str(shape_));
    return data_[0];
  }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  bool all_finite() const {
    for (Index i = 0; i < data_.size(); ++i) {
      if (!std::isfinite(static_cast<double>(data_[i]))) return false;
    }
    return true;
  }

  // --- gradient slot -------------------------------------------------------

  bool requires_grad() const { return requires_grad_; }
  void set_requires_grad(bool on) { requires_grad_ = on; }

  bool has_grad() const { return grad_ != nullptr; }

  /// Gradient buffer, allocated to zeros on first access.
  Storage& grad() {
    if (!grad_) grad_ = std::make_unique<Storage>(Storage::Zero(data_.size()));
    return *grad_;
  }
  const Storage& grad() const {
    if (!grad_) throw ContractError("Tensor::grad: gradient not populated");
    return *grad_;
  }

  void zero_grad() {
    if (grad_) grad_->setZero();
  }
  void clear_grad() { grad_.reset(); }

  Tensor clone() const {
    Tensor t;
    t.shape_ = shape_;
    t.data_ = data_;
    t.requires_grad_ = requires_grad_;
    return t;
  }

 private:
  void validate_shape() const {
    for (Index d : shape_) {
      if (d <= 0) throw DimensionError("Tensor: non-positive extent in shape " + shape_str(shape_));
    }
  }
  void require_size(Index n, const char* what) const {
    if (data_.size() != n) {
      throw DimensionError(std::string("Tensor::") + what + ": view of " + std::to_string(n) +
                           " elements over shape " + shape_str(shape_));
    }
  }

  Shape shape_;
  Storage data_;
  bool requires_grad_ = false;
  std::unique_ptr<Storage> grad_;
};

/// Same flat data under a new shape of equal size.
template <typename Scalar>
Tensor<Scalar> reshaped(Tensor<Scalar> t, Shape shape) {
  if (shape_size(shape) != t.size()) {
    throw DimensionError("reshaped: " + shape_str(t.shape()) + " to " + shape_str(shape));
  }
  Tensor<Scalar> out(std::move(shape));
  out.flat() = t.flat();
  return out;
}

/// NaN/Inf scan at an op boundary; active only in checked mode.
template <typename Scalar>
void check_finite(const Tensor<Scalar>& t, const char* where) {
  if (!checked_mode()) return;
  if (!t.all_finite()) throw DomainError(std::string(where) + ": non-finite value in tensor " + shape_str(t.shape()));
}

}  // namespace ettk

#endif  // ETTK_TENSOR_HPP_
