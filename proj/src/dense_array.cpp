#include "skgcl/dense_array.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "skgcl/error.hpp"

namespace skgcl {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
  std::string out = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + ")";
}

DenseArray::DenseArray(Shape shape, double fill)
    : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

DenseArray::DenseArray(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_size(shape_) != data_.size()) {
    throw ShapeMismatch("shape " + shape_str(shape_) + " does not hold " +
                        std::to_string(data_.size()) + " values");
  }
}

DenseArray DenseArray::scalar(double value) { return DenseArray({1}, {value}); }

DenseArray DenseArray::vector(std::initializer_list<double> values) {
  return DenseArray({values.size()}, std::vector<double>(values));
}

DenseArray DenseArray::vector(std::span<const double> values) {
  return DenseArray({values.size()}, std::vector<double>(values.begin(), values.end()));
}

double DenseArray::item() const {
  if (data_.size() != 1) throw ShapeMismatch("item() on array of shape " + shape_str(shape_));
  return data_[0];
}

DenseArray DenseArray::reshaped(Shape shape) const {
  if (shape_size(shape) != data_.size()) {
    throw ShapeMismatch("cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
  }
  return DenseArray(std::move(shape), data_);
}

bool DenseArray::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

void DenseArray::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

double max_abs_diff(const DenseArray& a, const DenseArray& b) {
  if (a.shape() != b.shape()) {
    throw ShapeMismatch("max_abs_diff " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace skgcl
