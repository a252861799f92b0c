#include "stpl/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace stpl::lin {

Matrix Matrix::rotation2(double theta) {
  Matrix r(2, 2);
  r(0, 0) = std::cos(theta);
  r(0, 1) = -std::sin(theta);
  r(1, 0) = std::sin(theta);
  r(1, 1) = std::cos(theta);
  return r;
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Matrix Matrix::operator*(const Matrix& o) const {
  if (cols_ != o.rows_) throw std::invalid_argument("matrix product dimension mismatch");
  Matrix out(rows_, o.cols_);
  for (int i = 0; i < rows_; ++i)
    for (int k = 0; k < cols_; ++k) {
      const double a = (*this)(i, k);
      if (a == 0.0) continue;
      for (int j = 0; j < o.cols_; ++j) out(i, j) += a * o(k, j);
    }
  return out;
}

Matrix Matrix::operator+(const Matrix& o) const {
  Matrix out = *this;
  for (std::size_t i = 0; i < data_.size(); ++i) out.data_[i] += o.data_[i];
  return out;
}

Matrix Matrix::operator-(const Matrix& o) const {
  Matrix out = *this;
  for (std::size_t i = 0; i < data_.size(); ++i) out.data_[i] -= o.data_[i];
  return out;
}

Matrix Matrix::scaled(double c) const {
  Matrix out = *this;
  for (double& v : out.data_) v *= c;
  return out;
}

std::vector<double> Matrix::apply(const std::vector<double>& v) const {
  if (static_cast<int>(v.size()) != cols_) throw std::invalid_argument("apply: size mismatch");
  std::vector<double> out(rows_, 0.0);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) out[i] += (*this)(i, j) * v[j];
  return out;
}

double Matrix::frobenius() const {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return std::sqrt(s);
}

double Matrix::max_abs_offdiag() const {
  double m = 0.0;
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j)
      if (i != j) m = std::max(m, std::abs((*this)(i, j)));
  return m;
}

EigResult sym_eig(const Matrix& s) {
  if (s.rows() != s.cols()) throw std::invalid_argument("sym_eig: matrix must be square");
  const int n = s.rows();
  Matrix a = s;
  Matrix v = Matrix::identity(n);
  const double scale = std::max(a.frobenius(), 1.0);
  const double tol = 1e-12 * scale;

  auto offdiag_frob = [&]() {
    double t = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j) t += a(i, j) * a(i, j);
    return std::sqrt(t);
  };

  for (int sweep = 0; sweep < 100 && offdiag_frob() > tol; ++sweep) {
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= tol / (n * n)) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - sn * akq;
          a(k, q) = sn * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - sn * aqk;
          a(q, k) = sn * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - sn * vkq;
          v(k, q) = sn * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int i, int j) { return a(i, i) > a(j, j); });

  EigResult out;
  out.values.resize(n);
  out.vectors = Matrix(n, n);
  for (int j = 0; j < n; ++j) {
    out.values[j] = a(idx[j], idx[j]);
    for (int i = 0; i < n; ++i) out.vectors(i, j) = v(i, idx[j]);
  }
  return out;
}

double spectral_norm(const Matrix& m) {
  const Matrix g = m.transpose() * m;
  const auto eig = sym_eig(g);
  const double top = std::max(eig.values.empty() ? 0.0 : eig.values.front(), 0.0);
  return std::sqrt(top);
}

namespace {

std::vector<double> singular_values(const Matrix& m) {
  const Matrix g = m.cols() <= m.rows() ? m.transpose() * m : m * m.transpose();
  auto eig = sym_eig(g);
  for (double& v : eig.values) v = std::sqrt(std::max(v, 0.0));
  return eig.values;
}

}  // namespace

double condition_number(const Matrix& m) {
  const auto sv = singular_values(m);
  const double smax = sv.front();
  const double smin = sv.back();
  if (smin <= 1e-300 * smax) return std::numeric_limits<double>::infinity();
  return smax / smin;
}

double smallest_singular_value(const Matrix& m) { return singular_values(m).back(); }

Matrix random_gaussian(int rows, int cols, Rng& rng, double std) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.normal(0.0, std);
  return m;
}

Matrix random_eps_straight(int d, double eps, Rng& rng) {
  Matrix g = random_gaussian(d, d, rng);
  const double norm = spectral_norm(g);
  return Matrix::identity(d) + g.scaled(eps / norm);
}

}  // namespace stpl::lin
