#pragma once

#include <Eigen/Core>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "tsdeconv/errors.hpp"

namespace tsdeconv {

using Index = Eigen::Index;

/// Dense multi-dimensional array with row-major layout and dynamic rank.
/// Storage is a flat Eigen array, so elementwise math on whole tensors can
/// stay in Eigen expressions while structured kernels index directly.
template <typename Scalar>
class Tensor {
 public:
  using Storage = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  Tensor() = default;

  /// Zero-initialized tensor of the given extents.
  explicit Tensor(std::vector<Index> shape)
      : shape_(std::move(shape)), data_(Storage::Zero(count(shape_))) {}

  Tensor(std::vector<Index> shape, Storage data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != count(shape_)) {
      throw DimensionError("tensor storage length " + std::to_string(data_.size()) +
                           " does not match shape " + shape_string(shape_));
    }
  }

  static Tensor constant(std::vector<Index> shape, Scalar value) {
    Tensor t(std::move(shape));
    t.data_.setConstant(value);
    return t;
  }

  Index size() const { return data_.size(); }
  int rank() const { return static_cast<int>(shape_.size()); }
  const std::vector<Index>& shape() const { return shape_; }

  Index extent(int axis) const { return shape_[static_cast<std::size_t>(axis)]; }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  /// Flat row-major element access.
  Scalar& operator[](Index i) { return data_[i]; }
  Scalar operator[](Index i) const { return data_[i]; }

  /// Rank-3 access (channel, row, column).
  Scalar& operator()(Index c, Index h, Index w) { return data_[(c * shape_[1] + h) * shape_[2] + w]; }
  Scalar operator()(Index c, Index h, Index w) const {
    return data_[(c * shape_[1] + h) * shape_[2] + w];
  }

  /// Rank-4 access (used for filter banks).
  Scalar& operator()(Index a, Index b, Index c, Index d) {
    return data_[((a * shape_[1] + b) * shape_[2] + c) * shape_[3] + d];
  }
  Scalar operator()(Index a, Index b, Index c, Index d) const {
    return data_[((a * shape_[1] + b) * shape_[2] + c) * shape_[3] + d];
  }

  /// Pointer to the start of row (c, h) of a rank-3 tensor; the row is
  /// contiguous with extent(2) entries.
  Scalar* row(Index c, Index h) { return data_.data() + (c * shape_[1] + h) * shape_[2]; }
  const Scalar* row(Index c, Index h) const {
    return data_.data() + (c * shape_[1] + h) * shape_[2];
  }

  Storage& array() { return data_; }
  const Storage& array() const { return data_; }

  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }

  bool all_finite() const { return data_.isFinite().all(); }

  static std::string shape_string(const std::vector<Index>& shape) {
    std::ostringstream out;
    out << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
      if (i) out << 'x';
      out << shape[i];
    }
    out << ']';
    return out.str();
  }

 private:
  static Index count(const std::vector<Index>& shape) {
    Index n = 1;
    for (Index e : shape) {
      if (e <= 0) throw DimensionError("tensor extents must be positive, got " + shape_string(shape));
      n *= e;
    }
    return n;
  }

  std::vector<Index> shape_;
  Storage data_;
};

using Tensord = Tensor<double>;

/// Inner product of two same-shaped tensors.
template <typename Scalar>
Scalar dot(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  if (!a.same_shape(b)) {
    throw DimensionError("dot: shapes differ " + Tensor<Scalar>::shape_string(a.shape()) + " vs " +
                         Tensor<Scalar>::shape_string(b.shape()));
  }
  return (a.array() * b.array()).sum();
}

}  // namespace tsdeconv
