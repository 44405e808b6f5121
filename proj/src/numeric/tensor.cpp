#include "cropmap/numeric/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "cropmap/error.hpp"

namespace cropmap::numeric {

namespace {

std::size_t element_count(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), values_(element_count(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (element_count(shape_) != values_.size()) {
    throw NumericError("tensor shape " + shape_string(shape_) + " does not match " +
                       std::to_string(values_.size()) + " values");
  }
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols,
                      std::initializer_list<double> values) {
  return Tensor({rows, cols}, std::vector<double>(values));
}

std::size_t Tensor::rows() const {
  if (shape_.size() != 2) throw NumericError("rows() on tensor of shape " + shape_string(shape_));
  return shape_[0];
}

std::size_t Tensor::cols() const {
  if (shape_.size() != 2) throw NumericError("cols() on tensor of shape " + shape_string(shape_));
  return shape_[1];
}

double Tensor::item() const {
  if (values_.size() != 1) {
    throw NumericError("item() on non-scalar tensor " + shape_string(shape_));
  }
  return values_[0];
}

bool Tensor::all_finite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

bool Tensor::all_zero() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 0.0; });
}

void Tensor::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

void Tensor::accumulate(const Tensor& other) {
  if (!same_shape(other)) {
    throw NumericError("accumulate: " + shape_string(shape_) + " vs " +
                       shape_string(other.shape_));
  }
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
}

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

}  // namespace cropmap::numeric
