#pragma once

#include <cstddef>
#include <initializer_list>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace cropmap::numeric {

/// Dense row-major array of doubles. Every tensor the tape touches is rank 2;
/// scalars are 1x1.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
  Tensor(std::vector<std::size_t> shape, std::vector<double> values);

  static Tensor scalar(double v) { return Tensor({1, 1}, {v}); }
  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::initializer_list<double> values);
  static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape_); }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t size() const { return values_.size(); }
  std::size_t rows() const;
  std::size_t cols() const;
  bool is_scalar() const { return values_.size() == 1; }
  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& at(std::size_t r, std::size_t c) { return values_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }
  double item() const;

  bool all_finite() const;
  bool all_zero() const;
  void fill(double v);
  /// this += other (same shape).
  void accumulate(const Tensor& other);

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> values_;
};

std::string shape_string(const std::vector<std::size_t>& shape);

/// Named parameter (or gradient) arrays; ordered so iteration and
/// serialization are deterministic.
using ParameterSet = std::map<std::string, Tensor>;

}  // namespace cropmap::numeric
