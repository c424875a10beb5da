#pragma once

// Small dense linear algebra kernels used by the local fitting stage.
// Matrices here are tiny (row count = local sample count, column count =
// polynomial space dimension), so robustness is preferred over speed:
// least squares goes through Householder QR and the smallest singular
// value through one-sided Jacobi orthogonalization.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace thbfit {

class DenseMatrix {
public:
  DenseMatrix() : rows_(0), cols_(0) {}
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  const std::vector<double>& data() const { return data_; }

  DenseMatrix transposed() const {
    DenseMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

private:
  std::size_t rows_, cols_;
  std::vector<double> data_;
};

namespace detail {

// One-sided Jacobi: rotate column pairs of a working copy until all pairs
// are numerically orthogonal; singular values are the column norms.
inline std::vector<double> jacobi_singular_values(DenseMatrix a) {
  const std::size_t m = a.rows(), p = a.cols();
  const int max_sweeps = 60;
  const double tol = 1e-15;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t i = 0; i + 1 < p; ++i) {
      for (std::size_t j = i + 1; j < p; ++j) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
          alpha += a(k, i) * a(k, i);
          beta += a(k, j) * a(k, j);
          gamma += a(k, i) * a(k, j);
        }
        if (std::abs(gamma) <= tol * std::sqrt(alpha) * std::sqrt(beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t k = 0; k < m; ++k) {
          const double ai = a(k, i), aj = a(k, j);
          a(k, i) = c * ai - s * aj;
          a(k, j) = s * ai + c * aj;
        }
      }
    }
    if (!rotated) break;
  }
  std::vector<double> sv(p, 0.0);
  for (std::size_t j = 0; j < p; ++j) {
    double norm2 = 0.0;
    for (std::size_t k = 0; k < m; ++k) norm2 += a(k, j) * a(k, j);
    sv[j] = std::sqrt(norm2);
  }
  std::sort(sv.begin(), sv.end(), std::greater<double>());
  return sv;
}

}  // namespace detail

// Smallest singular value of an arbitrary rectangular matrix.
// Rank-deficient inputs are fine and produce (numerically) zero.
inline double min_singular_value(const DenseMatrix& a) {
  if (a.rows() == 0 || a.cols() == 0)
    throw std::invalid_argument("min_singular_value: empty matrix");
  // The one-sided sweep orthogonalizes columns; work on whichever
  // orientation has fewer columns.
  std::vector<double> sv = a.rows() >= a.cols()
                               ? detail::jacobi_singular_values(a)
                               : detail::jacobi_singular_values(a.transposed());
  return sv.back();
}

// Least squares min ||Ax - b|| via Householder QR without pivoting.
// Requires rows >= cols and full column rank; a numerically singular R
// is reported by exception rather than silently solved, since callers
// gate conditioning before coming here.
inline std::vector<double> lstsq(const DenseMatrix& a_in, const std::vector<double>& b_in) {
  const std::size_t m = a_in.rows(), p = a_in.cols();
  if (m == 0 || p == 0) throw std::invalid_argument("lstsq: empty matrix");
  if (b_in.size() != m) throw std::invalid_argument("lstsq: rhs size mismatch");
  if (m < p) throw std::invalid_argument("lstsq: underdetermined system (rows < cols)");

  DenseMatrix a = a_in;
  std::vector<double> b = b_in;

  double max_col_norm = 0.0;
  for (std::size_t j = 0; j < p; ++j) {
    double n2 = 0.0;
    for (std::size_t i = 0; i < m; ++i) n2 += a(i, j) * a(i, j);
    max_col_norm = std::max(max_col_norm, std::sqrt(n2));
  }

  // Householder triangularization applied to [A | b].
  for (std::size_t k = 0; k < p; ++k) {
    double norm2 = 0.0;
    for (std::size_t i = k; i < m; ++i) norm2 += a(i, k) * a(i, k);
    const double norm = std::sqrt(norm2);
    if (norm <= 1e-13 * std::max(1.0, max_col_norm))
      throw std::runtime_error("lstsq: matrix is numerically rank deficient");
    const double alpha = a(k, k) >= 0.0 ? -norm : norm;
    // v = x - alpha*e1, applied implicitly; v k-th entry below.
    std::vector<double> v(m - k);
    v[0] = a(k, k) - alpha;
    for (std::size_t i = k + 1; i < m; ++i) v[i - k] = a(i, k);
    double vtv = 0.0;
    for (double x : v) vtv += x * x;
    if (vtv == 0.0) continue;  // column already triangular
    for (std::size_t j = k; j < p; ++j) {
      double dot = 0.0;
      for (std::size_t i = k; i < m; ++i) dot += v[i - k] * a(i, j);
      const double f = 2.0 * dot / vtv;
      for (std::size_t i = k; i < m; ++i) a(i, j) -= f * v[i - k];
    }
    double dotb = 0.0;
    for (std::size_t i = k; i < m; ++i) dotb += v[i - k] * b[i];
    const double fb = 2.0 * dotb / vtv;
    for (std::size_t i = k; i < m; ++i) b[i] -= fb * v[i - k];
  }

  // Back substitution on the p x p triangle.
  std::vector<double> x(p, 0.0);
  for (std::size_t k = p; k-- > 0;) {
    double s = b[k];
    for (std::size_t j = k + 1; j < p; ++j) s -= a(k, j) * x[j];
    const double diag = a(k, k);
    if (std::abs(diag) <= 1e-13 * std::max(1.0, max_col_norm))
      throw std::runtime_error("lstsq: matrix is numerically rank deficient");
    x[k] = s / diag;
  }
  return x;
}

}  // namespace thbfit
