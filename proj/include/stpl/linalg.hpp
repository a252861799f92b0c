#pragma once

#include <stdexcept>
#include <vector>

#include "stpl/rng.hpp"

namespace stpl::lin {

/// Small dense row-major matrix for the conditioning analysis. Kept separate
/// from the autodiff tensor: this module is pure numerics, no tape.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
  Matrix(int rows, int cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (static_cast<int>(data_.size()) != rows * cols)
      throw std::invalid_argument("matrix data length mismatch");
  }

  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static Matrix diag(const std::vector<double>& d) {
    Matrix m(static_cast<int>(d.size()), static_cast<int>(d.size()));
    for (std::size_t i = 0; i < d.size(); ++i) m(static_cast<int>(i), static_cast<int>(i)) = d[i];
    return m;
  }

  /// 2-D rotation by theta radians.
  static Matrix rotation2(double theta);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  double operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  Matrix transpose() const;
  Matrix operator*(const Matrix& o) const;
  Matrix operator+(const Matrix& o) const;
  Matrix operator-(const Matrix& o) const;
  Matrix scaled(double c) const;
  std::vector<double> apply(const std::vector<double>& v) const;
  double frobenius() const;
  double max_abs_offdiag() const;

 private:
  int rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

struct EigResult {
  std::vector<double> values;  // descending
  Matrix vectors;              // columns match values
};

/// Cyclic Jacobi rotations on a symmetric matrix; sweeps until the
/// off-diagonal Frobenius norm drops below 1e-12 relative to the matrix scale.
EigResult sym_eig(const Matrix& s);

/// Largest singular value, from the top eigenvalue of M^T M.
double spectral_norm(const Matrix& m);

/// sigma_max / sigma_min over the singular values of a (possibly rectangular)
/// matrix; +inf when rank-deficient.
double condition_number(const Matrix& m);

double smallest_singular_value(const Matrix& m);

/// A = I + eps * G / ||G||_2 with Gaussian G: exactly eps-straight by construction.
Matrix random_eps_straight(int d, double eps, Rng& rng);

Matrix random_gaussian(int rows, int cols, Rng& rng, double std = 1.0);

}  // namespace stpl::lin
