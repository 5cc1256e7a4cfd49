#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "choreo/core/error.hpp"

namespace choreo::nn {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);

/// Dense row-major float64 array. Value type; copies are deep.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double v) { return Tensor({1}, {v}); }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  double* ptr() noexcept { return data_.data(); }
  const double* ptr() const noexcept { return data_.data(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& at(std::size_t i, std::size_t j);
  double at(std::size_t i, std::size_t j) const;
  double& at(std::size_t i, std::size_t j, std::size_t k);
  double at(std::size_t i, std::size_t j, std::size_t k) const;

  /// Same data, new shape with identical element count.
  Tensor reshaped(Shape shape) const;
  /// Rows [begin, end) along the leading dimension.
  Tensor slice_rows(std::size_t begin, std::size_t end) const;

  void fill(double v);
  bool all_finite() const;

  /// Throws ShapeError unless shape matches. Zero entries in `expected` act as wildcards.
  void expect_shape(const Shape& expected, const char* what) const;

 private:
  Shape shape_;
  std::vector<double> data_;
};

}  // namespace choreo::nn
