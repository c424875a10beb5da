#pragma once

// Independent reference computations used to validate the library. Each
// oracle deliberately takes a different route than the implementation it
// checks: the smallest singular value goes through Cholesky bisection on
// the Gram matrix instead of Jacobi sweeps, least squares through pivoted
// Gaussian elimination on the normal equations instead of QR, refinement
// through single knot insertions instead of insertion matrix rows, and
// hierarchical evaluation through global dense coefficient vectors
// instead of per-cell stencils.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "thbfit/thbfit.hpp"

namespace oracle {

using thbfit::Box;
using thbfit::DenseMatrix;
using thbfit::DomainHierarchy;
using thbfit::FlatIndex;
using thbfit::KnotVector;
using thbfit::MultiIndex;
using thbfit::SplineCoeffs;
using thbfit::TensorSpace;

// Cholesky succeeds exactly on positive definite matrices.
inline bool cholesky_pd(DenseMatrix s) {
  const std::size_t p = s.rows();
  for (std::size_t k = 0; k < p; ++k) {
    double d = s(k, k);
    for (std::size_t j = 0; j < k; ++j) d -= s(k, j) * s(k, j);
    if (!(d > 0.0)) return false;
    const double l = std::sqrt(d);
    s(k, k) = l;
    for (std::size_t i = k + 1; i < p; ++i) {
      double v = s(i, k);
      for (std::size_t j = 0; j < k; ++j) v -= s(i, j) * s(k, j);
      s(i, k) = v / l;
    }
  }
  return true;
}

// Smallest singular value via bisection on the smallest eigenvalue of the
// Gram matrix: S - t I is positive definite exactly for t below it.
inline double min_singular_value_bisect(const DenseMatrix& a) {
  const bool tall = a.rows() >= a.cols();
  const DenseMatrix m = tall ? a : a.transposed();
  const std::size_t p = m.cols();
  DenseMatrix s(p, p);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j) {
      double v = 0.0;
      for (std::size_t k = 0; k < m.rows(); ++k) v += m(k, i) * m(k, j);
      s(i, j) = v;
    }
  double hi = 0.0;
  for (std::size_t i = 0; i < p; ++i) hi += s(i, i);
  if (hi == 0.0) return 0.0;
  double lo = 0.0;
  for (int it = 0; it < 200 && hi - lo > 1e-18 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    DenseMatrix shifted = s;
    for (std::size_t i = 0; i < p; ++i) shifted(i, i) -= mid;
    if (cholesky_pd(shifted))
      lo = mid;
    else
      hi = mid;
  }
  return std::sqrt(std::max(lo, 0.0));
}

// Least squares through the normal equations with partial pivoting.
inline std::vector<double> normal_equations_solve(const DenseMatrix& a,
                                                  const std::vector<double>& b) {
  const std::size_t m = a.rows(), p = a.cols();
  DenseMatrix s(p, p + 1);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      double v = 0.0;
      for (std::size_t k = 0; k < m; ++k) v += a(k, i) * a(k, j);
      s(i, j) = v;
    }
    double v = 0.0;
    for (std::size_t k = 0; k < m; ++k) v += a(k, i) * b[k];
    s(i, p) = v;
  }
  for (std::size_t k = 0; k < p; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < p; ++i)
      if (std::abs(s(i, k)) > std::abs(s(piv, k))) piv = i;
    if (piv != k)
      for (std::size_t j = 0; j <= p; ++j) std::swap(s(k, j), s(piv, j));
    for (std::size_t i = k + 1; i < p; ++i) {
      const double f = s(i, k) / s(k, k);
      for (std::size_t j = k; j <= p; ++j) s(i, j) -= f * s(k, j);
    }
  }
  std::vector<double> x(p);
  for (std::size_t k = p; k-- > 0;) {
    double v = s(k, p);
    for (std::size_t j = k + 1; j < p; ++j) v -= s(k, j) * x[j];
    x[k] = v / s(k, k);
  }
  return x;
}

// Geometric route for "support of (l, j) lies inside Omega^m": every
// level-m cell whose box overlaps the support interior must be a member.
inline bool support_in_omega_geometric(const DomainHierarchy& h, int l, const MultiIndex& j,
                                       int m) {
  if (m >= h.num_levels()) return false;
  const Box supp = h.space(l).support_box(j);
  const TensorSpace& sp = h.space(m);
  const int r = sp.dim();
  for (FlatIndex cell = 0; cell < sp.num_cells_total(); ++cell) {
    const MultiIndex c = sp.unflatten_cell(cell);
    const Box g = sp.cell_geometry(c);
    bool overlaps = true;
    for (int hh = 0; hh < r; ++hh)
      if (g.lo[hh] >= supp.hi[hh] || g.hi[hh] <= supp.lo[hh]) {
        overlaps = false;
        break;
      }
    if (overlaps && !h.in_omega(m, cell)) return false;
  }
  return true;
}

// Single knot insertion (one new knot u), classic coefficient update.
inline void boehm_insert(std::vector<double>& knots, std::vector<double>& c, int degree,
                         double u) {
  int k = 0;
  for (std::size_t i = 0; i + 1 < knots.size(); ++i)
    if (knots[i] <= u && u < knots[i + 1]) k = static_cast<int>(i);
  std::vector<double> q(c.size() + 1);
  for (int i = 0; i < static_cast<int>(q.size()); ++i) {
    if (i <= k - degree) {
      q[i] = c[i];
    } else if (i > k) {
      q[i] = c[i - 1];
    } else {
      const double den = knots[i + degree] - knots[i];
      const double alpha = den > 0.0 ? (u - knots[i]) / den : 0.0;
      q[i] = alpha * c[i] + (1.0 - alpha) * c[i - 1];
    }
  }
  knots.insert(std::upper_bound(knots.begin(), knots.end(), u), u);
  c = std::move(q);
}

// Dyadic refinement of a univariate coefficient vector via repeated
// single insertions.
inline std::vector<double> boehm_dyadic(const KnotVector& coarse, std::vector<double> c) {
  std::vector<double> knots = coarse.knots();
  const auto& bp = coarse.breakpoints();
  for (std::size_t i = 0; i + 1 < bp.size(); ++i)
    boehm_insert(knots, c, coarse.degree(), 0.5 * (bp[i] + bp[i + 1]));
  return c;
}

// Dense coefficients, in the finest space, of the full truncated sum with
// the given per-level coefficients.
inline SplineCoeffs dense_thb_rep(const DomainHierarchy& h,
                                  const std::vector<thbfit::detail::LambdaMap>& lambdas) {
  SplineCoeffs s(h.space(0));
  for (const auto& [j, v] : lambdas[0]) s.at(j) += v;
  for (int l = 1; l < h.num_levels(); ++l) {
    s = thbfit::two_scale(h.space(l - 1), h.space(l), s);
    s = thbfit::truncate_once(h, l, s);
    for (const auto& [j, v] : lambdas[l]) s.at(j) += v;
  }
  return s;
}

// Plain dense tensor spline evaluation, written without the library's
// window helpers.
inline double dense_eval(const TensorSpace& sp, const SplineCoeffs& c,
                         const std::vector<double>& x) {
  const int r = sp.dim();
  double total = 0.0;
  std::vector<int> lo(r), hi(r);
  for (int h = 0; h < r; ++h) {
    const int s = sp.kv(h).find_span(x[h]);
    lo[h] = s - sp.degree(h);
    hi[h] = s;
  }
  MultiIndex j = lo;
  while (true) {
    double v = 1.0;
    for (int h = 0; h < r; ++h) v *= sp.kv(h).eval(j[h], x[h]);
    total += v * c.at(sp.flatten(j));
    int h = r - 1;
    while (h >= 0) {
      if (++j[h] <= hi[h]) break;
      j[h] = lo[h];
      --h;
    }
    if (h < 0) break;
  }
  return total;
}

// Uniform clamped knot vector helper for tests.
inline KnotVector uniform_kv(double lo, double hi, int cells, int degree) {
  std::vector<double> knots;
  for (int i = 0; i <= degree; ++i) knots.push_back(lo);
  for (int i = 1; i < cells; ++i) knots.push_back(lo + (hi - lo) * i / cells);
  for (int i = 0; i <= degree; ++i) knots.push_back(hi);
  return KnotVector(std::move(knots), degree);
}

inline TensorSpace uniform_space_2d(double lo, double hi, int cells, int dx, int dy) {
  return TensorSpace({uniform_kv(lo, hi, cells, dx), uniform_kv(lo, hi, cells, dy)}, 0);
}

}  // namespace oracle
