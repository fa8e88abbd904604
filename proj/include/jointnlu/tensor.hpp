#pragma once

#include <array>
#include <initializer_list>
#include <string>

#include <Eigen/Core>

#include "jointnlu/error.hpp"

namespace jointnlu {

using Index = Eigen::Index;

/// Rank 1..3 row-major shape. Every extent is at least 1.
class Shape {
 public:
  Shape() = default;
  Shape(std::initializer_list<Index> dims);

  int rank() const { return rank_; }
  Index operator[](int axis) const { return dims_.at(axis); }
  Index size() const;
  Index last() const { return rank_ == 0 ? 0 : dims_[rank_ - 1]; }
  /// Product of all extents except the last.
  Index leading() const { return rank_ == 0 ? 0 : size() / last(); }
  /// Same shape with the last extent replaced.
  Shape with_last(Index n) const;

  std::string str() const;

  bool operator==(const Shape& other) const {
    return rank_ == other.rank_ && dims_ == other.dims_;
  }

 private:
  std::array<Index, 3> dims_{};
  int rank_ = 0;
};

/// Dense array of reals. Any tensor can be viewed as a row-major
/// leading() x last() matrix, which is how the primitives consume it.
template <typename Scalar>
class Tensor {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using MatrixMap = Eigen::Map<Matrix>;
  using ConstMatrixMap = Eigen::Map<const Matrix>;

  Tensor() = default;
  explicit Tensor(const Shape& shape)
      : shape_(shape), data_(Vector::Zero(shape.size())) {}
  Tensor(const Shape& shape, Vector data) : shape_(shape), data_(std::move(data)) {
    if (data_.size() != shape_.size()) {
      throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                       " does not match shape " + shape_.str());
    }
  }

  static Tensor constant(const Shape& shape, Scalar value) {
    return Tensor(shape, Vector::Constant(shape.size(), value));
  }

  /// Copies a matrix into a tensor of the given shape (default rows x cols).
  template <typename Derived>
  static Tensor from(const Eigen::MatrixBase<Derived>& m, const Shape& shape) {
    Tensor t(shape);
    t.mat() = m;
    return t;
  }
  template <typename Derived>
  static Tensor from(const Eigen::MatrixBase<Derived>& m) {
    return from(m, Shape{m.rows(), m.cols()});
  }

  const Shape& shape() const { return shape_; }
  Index size() const { return data_.size(); }
  bool empty() const { return data_.size() == 0; }

  Vector& data() { return data_; }
  const Vector& data() const { return data_; }

  MatrixMap mat() { return MatrixMap(data_.data(), shape_.leading(), shape_.last()); }
  ConstMatrixMap mat() const {
    return ConstMatrixMap(data_.data(), shape_.leading(), shape_.last());
  }

  Scalar& operator[](Index i) { return data_[i]; }
  Scalar operator[](Index i) const { return data_[i]; }

  Tensor reshaped(const Shape& shape) const { return Tensor(shape, data_); }

  template <typename Other>
  Tensor<Other> cast() const {
    return Tensor<Other>(shape_, data_.template cast<Other>());
  }

 private:
  Shape shape_;
  Vector data_;
};

}  // namespace jointnlu
