#include "tlsi/array.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tlsi {

static std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) {
    if (d == 0) throw std::invalid_argument("Array: zero dimension in shape");
    n *= d;
  }
  return n;
}

Array::Array(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_product(shape_), 0.0) {}

Array::Array(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  if (shape_product(shape_) != data_.size())
    throw std::invalid_argument("Array: shape " + shape_str() + " does not match " +
                                std::to_string(data_.size()) + " values");
}

Array Array::full(std::vector<std::size_t> shape, double v) {
  Array a(std::move(shape));
  a.fill(v);
  return a;
}

bool Array::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

void Array::fill(double v) {
  for (double& x : data_) x = v;
}

std::string Array::shape_str() const {
  std::string s = "[";
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape_[i]);
  }
  return s + "]";
}

}  // namespace tlsi
