#pragma once

// Local least squares fitting around one basis function. The coefficient
// of a function J is obtained by fitting a low degree polynomial to the
// data inside a ball around the center of supp B_J, expressing that
// polynomial in the local spline space, and reading off the entry at J.
//
// The polynomial degree starts at the smallest space degree and is
// lowered until the scaled collocation matrix has enough rows and a
// smallest singular value of at least sigma; degree 0 always passes for
// sigma <= 1 since its matrix is a single column of ones. Scaling always
// maps supp B_J to the unit box, also when the ball had to grow, so the
// conditioning threshold keeps one fixed meaning.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "thbfit/dataset.hpp"
#include "thbfit/densela.hpp"
#include "thbfit/poly_convert.hpp"
#include "thbfit/polynomial.hpp"
#include "thbfit/tensor_space.hpp"

namespace thbfit {

struct BallSpec {
  std::vector<double> center;
  double radius = 0.0;
};

// Ball circumscribing the support box of J: centered at the box center
// with radius half the box diagonal.
inline BallSpec local_ball(const TensorSpace& sp, const MultiIndex& j) {
  const Box b = sp.support_box(j);
  BallSpec ball;
  double diag2 = 0.0;
  for (int h = 0; h < sp.dim(); ++h) {
    ball.center.push_back(0.5 * (b.lo[h] + b.hi[h]));
    const double w = b.hi[h] - b.lo[h];
    diag2 += w * w;
  }
  ball.radius = 0.5 * std::sqrt(diag2);
  return ball;
}

struct GatherResult {
  std::vector<int> indices;  // ascending
  int k = 0;                 // enlargement factor actually used
  bool ok = false;           // false when even k_max * radius found nothing
};

// Points within k * radius of the ball center, enlarging k = 1, 2, ...
// only while the result is empty, up to k_max.
inline GatherResult gather(const SpatialIndex& index, const BallSpec& ball, int k_max) {
  GatherResult g;
  if (k_max < 1) throw std::invalid_argument("gather: k_max must be at least 1");
  for (int k = 1; k <= k_max; ++k) {
    g.indices = index.query_ball(ball.center, k * ball.radius);
    g.k = k;
    if (!g.indices.empty()) {
      g.ok = true;
      return g;
    }
  }
  g.ok = false;
  return g;
}

struct DegreeSelection {
  int degree = 0;
  double msv = 0.0;
  DenseMatrix collocation;  // rows follow the sample order given
};

// Scaled power basis collocation matrix of total degree `d` at reference
// points (graded lexicographic columns).
inline DenseMatrix collocation_matrix(const std::vector<std::vector<double>>& ref_pts, int r,
                                      int d) {
  const std::vector<MultiIndex> exps = monomial_exponents(r, d);
  DenseMatrix a(ref_pts.size(), exps.size());
  for (std::size_t i = 0; i < ref_pts.size(); ++i) {
    for (std::size_t t = 0; t < exps.size(); ++t) {
      double v = 1.0;
      for (int h = 0; h < r; ++h)
        for (int e = 0; e < exps[t][h]; ++e) v *= ref_pts[i][h];
      a(i, t) = v;
    }
  }
  return a;
}

// Largest degree <= d_start whose collocation matrix at the given points
// has at least as many rows as columns and smallest singular value >=
// sigma. Requires at least one point and sigma <= 1; degree 0 then always
// qualifies.
inline DegreeSelection select_degree(const std::vector<std::vector<double>>& ref_pts, int r,
                                     int d_start, double sigma) {
  if (ref_pts.empty()) throw std::invalid_argument("select_degree: no sample points");
  if (!(sigma > 0.0 && sigma <= 1.0))
    throw std::invalid_argument("select_degree: sigma must be in (0, 1]");
  for (int d = d_start; d >= 0; --d) {
    if (static_cast<FlatIndex>(ref_pts.size()) < polynomial_space_dim(r, d)) continue;
    DenseMatrix a = collocation_matrix(ref_pts, r, d);
    const double msv = min_singular_value(a);
    if (msv >= sigma) return DegreeSelection{d, msv, std::move(a)};
  }
  throw std::logic_error("select_degree: no admissible degree (unreachable for sigma <= 1)");
}

struct GuardConfig {
  bool enabled = false;
  // A fit is rejected when some value on a local probe grid leaves
  // [min - tau * range, max + tau * range] of the gathered samples.
  double tau = 0.5;
};

struct LocalFitResult {
  double lambda = 0.0;
  int degree = 0;
  LocalPoly poly;
  int num_samples = 0;
  int k_used = 1;
  double msv = 0.0;
};

namespace detail {

inline bool guard_accepts(const LocalPoly& p, const std::vector<double>& sample_values,
                          double tau) {
  double lo = sample_values[0], hi = sample_values[0];
  for (double v : sample_values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double slack = tau * (hi - lo);
  const int r = p.dim();
  const int n = p.total_degree + 2;  // probe nodes per direction
  std::vector<double> u(r, 0.0);
  std::vector<int> idx(r, 0);
  while (true) {
    for (int h = 0; h < r; ++h) u[h] = static_cast<double>(idx[h]) / (n - 1);
    const double v = p.eval_ref(u);
    if (v < lo - slack || v > hi + slack) return false;
    int h = r - 1;
    while (h >= 0) {
      if (++idx[h] < n) break;
      idx[h] = 0;
      --h;
    }
    if (h < 0) break;
  }
  return true;
}

}  // namespace detail

// Full local fit for basis function J of `sp`: gather, select the degree,
// solve the least squares problem, optionally re-run with a lower degree
// while the oscillation guard rejects, and convert the polynomial into
// spline form to read off J's coefficient. Empty gather (after all
// enlargements) yields nullopt.
inline std::optional<LocalFitResult> fit_lambda(const TensorSpace& sp, const MultiIndex& j,
                                                const SpatialIndex& index, double sigma,
                                                int k_max,
                                                const GuardConfig& guard = GuardConfig{}) {
  const int r = sp.dim();
  const ScatteredDataset& data = index.data();
  if (data.dim() != r) throw std::invalid_argument("fit_lambda: dimension mismatch");

  const BallSpec ball = local_ball(sp, j);
  const GatherResult g = gather(index, ball, k_max);
  if (!g.ok) return std::nullopt;

  const Box frame = sp.support_box(j);
  std::vector<std::vector<double>> ref_pts(g.indices.size(), std::vector<double>(r));
  std::vector<double> rhs(g.indices.size());
  for (std::size_t i = 0; i < g.indices.size(); ++i) {
    for (int h = 0; h < r; ++h)
      ref_pts[i][h] =
          (data.coord(g.indices[i], h) - frame.lo[h]) / (frame.hi[h] - frame.lo[h]);
    rhs[i] = data.value(g.indices[i]);
  }

  int d_cap = sp.degree(0);
  for (int h = 1; h < r; ++h) d_cap = std::min(d_cap, sp.degree(h));

  while (true) {
    DegreeSelection sel = select_degree(ref_pts, r, d_cap, sigma);
    std::vector<double> coeffs = lstsq(sel.collocation, rhs);
    LocalPoly p(sel.degree, frame, std::move(coeffs));
    if (guard.enabled && sel.degree > 0 && !detail::guard_accepts(p, rhs, guard.tau)) {
      d_cap = sel.degree - 1;
      continue;
    }
    const WindowCoeffs w = poly_to_coeffs(sp, p, frame);
    LocalFitResult res;
    res.lambda = w.at(j);
    res.degree = sel.degree;
    res.poly = std::move(p);
    res.num_samples = static_cast<int>(g.indices.size());
    res.k_used = g.k;
    res.msv = sel.msv;
    return res;
  }
}

}  // namespace thbfit
