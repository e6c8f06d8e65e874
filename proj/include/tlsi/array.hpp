#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace tlsi {

// Dense row-major array of 64-bit floats. Rank is arbitrary in principle,
// but everything in this project is rank 1 or 2.
class Array {
 public:
  Array() = default;
  explicit Array(std::vector<std::size_t> shape);
  Array(std::vector<std::size_t> shape, std::vector<double> values);

  static Array zeros(std::vector<std::size_t> shape) { return Array(std::move(shape)); }
  static Array full(std::vector<std::size_t> shape, double v);
  static Array scalar(double v) { return Array({1, 1}, {v}); }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  // Rank-2 accessors. rows()/cols() also accept rank-1 (treated as a column).
  std::size_t rows() const { return shape_.empty() ? 0 : shape_[0]; }
  std::size_t cols() const { return shape_.size() < 2 ? (shape_.empty() ? 0 : 1) : shape_[1]; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  bool same_shape(const Array& o) const { return shape_ == o.shape_; }
  bool all_finite() const;
  void fill(double v);

  std::string shape_str() const;  // e.g. "[3x4]"

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

}  // namespace tlsi
