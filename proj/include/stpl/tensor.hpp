#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace stpl::ag {

/// Shape/value mismatch between operands.
struct DimensionError : std::runtime_error {
  explicit DimensionError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A velocity (or other vector) with near-zero norm where a direction is required.
struct DegenerateVelocity : std::runtime_error {
  explicit DegenerateVelocity(const std::string& msg) : std::runtime_error(msg) {}
};

/// An operation was called outside its contract (e.g. backward on a non-scalar).
struct ContractError : std::runtime_error {
  explicit ContractError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Dense row-major tensor of 64-bit reals.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    data_.assign(count(shape_), 0.0);
  }

  Tensor(std::vector<int> shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (count(shape_) != data_.size())
      throw DimensionError("tensor data length does not match shape");
  }

  static Tensor scalar(double v) { return Tensor({1}, {v}); }

  static Tensor vector(std::vector<double> v) {
    const int n = static_cast<int>(v.size());
    return Tensor({n}, std::move(v));
  }

  static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape_); }

  const std::vector<int>& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& vec() { return data_; }
  const std::vector<double>& vec() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  int rows() const { return shape_.size() == 2 ? shape_[0] : (shape_.empty() ? 0 : shape_[0]); }
  int cols() const { return shape_.size() == 2 ? shape_[1] : 1; }

  double& at(int r, int c) { return data_[static_cast<std::size_t>(r) * shape_[1] + c]; }
  double at(int r, int c) const { return data_[static_cast<std::size_t>(r) * shape_[1] + c]; }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  bool finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  double item() const {
    if (data_.size() != 1) throw ContractError("item() on non-scalar tensor");
    return data_[0];
  }

  static std::size_t count(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int e : shape) {
      if (e <= 0) throw DimensionError("tensor extents must be positive");
      n *= static_cast<std::size_t>(e);
    }
    return shape.empty() ? 0 : n;
  }

 private:
  std::vector<int> shape_;
  std::vector<double> data_;
};

inline std::string shape_str(const Tensor& t) {
  std::string s = "[";
  for (std::size_t i = 0; i < t.shape().size(); ++i)
    s += (i ? "," : "") + std::to_string(t.shape()[i]);
  return s + "]";
}

}  // namespace stpl::ag
