// Copyright (c) 2026 The analogic authors
// SPDX-License-Identifier: Apache-2.0

#ifndef ANALOGIC_TENSOR_HPP
#define ANALOGIC_TENSOR_HPP

#include <Eigen/Core>

#include <sstream>
#include <string>
#include <vector>

#include "analogic/errors.hpp"

namespace analogic {

using Index = Eigen::Index;

struct Shape {
  Index batch = 0;
  Index channels = 0;
  Index height = 0;
  Index width = 0;

  Index plane() const { return height * width; }
  Index rows() const { return batch * height * width; }
  Index size() const { return rows() * channels; }

  friend bool operator==(const Shape&, const Shape&) = default;

  std::string str() const {
    std::ostringstream os;
    os << batch << "x" << channels << "x" << height << "x" << width;
    return os.str();
  }
};

// Dense batch of feature maps. Storage is one column per channel; each
// column holds the batch's planes back to back, row index
// n * H * W + y * W + x. This makes convolution a single GEMM over the
// whole batch and channel concatenation a horizontal stack.
template <typename Scalar_>
class Tensor {
 public:
  using Scalar = Scalar_;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Tensor() = default;
  explicit Tensor(const Shape& s) : shape_(s), data_(Matrix::Zero(s.rows(), s.channels)) {}
  Tensor(Index n, Index c, Index h, Index w) : Tensor(Shape{n, c, h, w}) {}
  Tensor(const Shape& s, Matrix data) : shape_(s), data_(std::move(data)) {
    if (data_.rows() != s.rows() || data_.cols() != s.channels)
      throw ShapeError("tensor storage does not match shape " + s.str());
  }

  static Tensor constant(const Shape& s, Scalar v) {
    return Tensor(s, Matrix::Constant(s.rows(), s.channels, v));
  }

  // Parameter-style tensor: a plain rows x cols matrix.
  static Tensor matrix(Index rows, Index cols) { return Tensor(Shape{1, cols, rows, 1}); }

  const Shape& shape() const { return shape_; }
  Index batch() const { return shape_.batch; }
  Index channels() const { return shape_.channels; }
  Index height() const { return shape_.height; }
  Index width() const { return shape_.width; }
  Index size() const { return shape_.size(); }
  bool empty() const { return shape_.size() == 0; }

  Matrix& data() { return data_; }
  const Matrix& data() const { return data_; }
  auto array() { return data_.array(); }
  auto array() const { return data_.array(); }

  Scalar& operator()(Index n, Index c, Index y, Index x) {
    return data_(n * shape_.plane() + y * shape_.width + x, c);
  }
  Scalar operator()(Index n, Index c, Index y, Index x) const {
    return data_(n * shape_.plane() + y * shape_.width + x, c);
  }

  // Rows belonging to sample n (all channels).
  auto sample(Index n) { return data_.middleRows(n * shape_.plane(), shape_.plane()); }
  auto sample(Index n) const { return data_.middleRows(n * shape_.plane(), shape_.plane()); }

  template <typename Other>
  Tensor<Other> cast() const {
    return Tensor<Other>(shape_, data_.template cast<Other>());
  }

 private:
  Shape shape_{};
  Matrix data_;
};

inline void require_same_shape(const Shape& a, const Shape& b, const char* what) {
  if (!(a == b))
    throw ShapeError(std::string(what) + ": shape mismatch " + a.str() + " vs " + b.str());
}

// Stacks single-sample tensors along the batch axis.
template <typename Scalar>
Tensor<Scalar> stack_batch(const std::vector<Tensor<Scalar>>& items) {
  Index n = 0;
  Shape s{};
  for (const Tensor<Scalar>& t : items) {
    if (n == 0) s = t.shape();
    else if (t.channels() != s.channels || t.height() != s.height || t.width() != s.width)
      throw ShapeError("stack_batch: inconsistent sample shapes");
    n += t.batch();
  }
  s.batch = n;
  Tensor<Scalar> out(s);
  Index row = 0;
  for (const Tensor<Scalar>& t : items) {
    out.data().middleRows(row, t.shape().rows()) = t.data();
    row += t.shape().rows();
  }
  return out;
}

template <typename Scalar>
Tensor<Scalar> slice_batch(const Tensor<Scalar>& t, Index n) {
  Shape s = t.shape();
  s.batch = 1;
  return Tensor<Scalar>(s, t.sample(n));
}

}  // namespace analogic

#endif  // ANALOGIC_TENSOR_HPP
