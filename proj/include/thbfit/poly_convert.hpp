#pragma once

// Exact conversion of a polynomial piece into B-spline coefficients on a
// sub-rectangle of a tensor space.
//
// Restricted to an axis aligned box whose corners lie in cell closures,
// the basis functions overlapping the box span all polynomials up to the
// space degrees and stay linearly independent. Matching them against the
// polynomial at interpolation nodes therefore reproduces it exactly. The
// nodes are the Greville abscissae of the box-clamped restriction of the
// local knots (box ends at full multiplicity plus the interior knots),
// which keeps every node inside the box and makes the per-direction
// collocation systems square and unisolvent.

#include <stdexcept>
#include <vector>

#include "thbfit/densela.hpp"
#include "thbfit/polynomial.hpp"
#include "thbfit/tensor_space.hpp"

namespace thbfit {

namespace detail {

struct AxisCollocation {
  int window_lo = 0, window_hi = 0;  // inclusive basis index range
  std::vector<double> nodes;
  DenseMatrix c;  // c(node, window function)
};

inline AxisCollocation axis_collocation(const KnotVector& kv, double a, double b) {
  if (!(a < b)) throw std::invalid_argument("poly_to_coeffs: degenerate box");
  if (a < kv.domain_min() || b > kv.domain_max())
    throw std::invalid_argument("poly_to_coeffs: box outside domain");
  const int d = kv.degree();
  AxisCollocation ax;

  const int cell_a = kv.cell_of(a);
  const int cell_b = kv.cell_of_left(b);
  const int span_a = kv.span_for_cell(cell_a);
  const int span_b = kv.span_for_cell(cell_b);
  ax.window_lo = span_a - d;
  ax.window_hi = span_b;

  // Box-clamped local knots: a and b at multiplicity d+1, the global knots
  // strictly inside (a, b) kept with multiplicity.
  std::vector<double> local;
  for (int i = 0; i <= d; ++i) local.push_back(a);
  for (int i = span_a + 1; i <= span_b; ++i) local.push_back(kv.knots()[i]);
  for (int i = 0; i <= d; ++i) local.push_back(b);
  ax.nodes = KnotVector(std::move(local), d).greville();

  const int n = static_cast<int>(ax.nodes.size());
  if (n != ax.window_hi - ax.window_lo + 1)
    throw std::logic_error("poly_to_coeffs: window/node count mismatch");

  ax.c = DenseMatrix(n, n);
  std::vector<double> vals(d + 1);
  for (int k = 0; k < n; ++k) {
    const double t = ax.nodes[k];
    const int s = (t == b && b < kv.domain_max()) ? kv.find_span_left(t) : kv.find_span(t);
    kv.basis_values(s, t, vals.data());
    for (int j = ax.window_lo; j <= ax.window_hi; ++j)
      ax.c(k, j - ax.window_lo) = (j >= s - d && j <= s) ? vals[j - (s - d)] : 0.0;
  }
  return ax;
}

}  // namespace detail

// B-spline coefficients, on the window of functions overlapping `box`,
// that reproduce the polynomial p exactly on that box. Requires the
// per-direction degree of p to stay within the space degrees (automatic
// for total degree <= min of the space degrees).
inline WindowCoeffs poly_to_coeffs(const TensorSpace& space, const LocalPoly& p,
                                   const Box& box) {
  const int r = space.dim();
  if (p.dim() != r || box.dim() != r)
    throw std::invalid_argument("poly_to_coeffs: dimension mismatch");
  for (const auto& e : p.exponents)
    for (int h = 0; h < r; ++h)
      if (e[h] > space.degree(h))
        throw std::invalid_argument("poly_to_coeffs: polynomial degree exceeds space degree");

  std::vector<detail::AxisCollocation> ax;
  ax.reserve(r);
  for (int h = 0; h < r; ++h)
    ax.push_back(detail::axis_collocation(space.kv(h), box.lo[h], box.hi[h]));

  std::vector<int> dims(r);
  for (int h = 0; h < r; ++h) dims[h] = static_cast<int>(ax[h].nodes.size());

  // Values of p on the tensor node grid.
  FlatIndex total = 1;
  for (int h = 0; h < r; ++h) total *= dims[h];
  std::vector<double> work(static_cast<std::size_t>(total));
  std::vector<double> x(r);
  for (FlatIndex f = 0; f < total; ++f) {
    FlatIndex rem = f;
    for (int h = r - 1; h >= 0; --h) {
      x[h] = ax[h].nodes[rem % dims[h]];
      rem /= dims[h];
    }
    work[static_cast<std::size_t>(f)] = p.eval(x);
  }

  // Solve the univariate collocation systems one direction at a time.
  for (int h = 0; h < r; ++h) {
    const int n = dims[h];
    FlatIndex outer = 1, inner = 1;
    for (int g = 0; g < h; ++g) outer *= dims[g];
    for (int g = h + 1; g < r; ++g) inner *= dims[g];
    std::vector<double> rhs(n), sol;
    for (FlatIndex o = 0; o < outer; ++o) {
      for (FlatIndex q = 0; q < inner; ++q) {
        for (int k = 0; k < n; ++k)
          rhs[k] = work[static_cast<std::size_t>((o * n + k) * inner + q)];
        sol = lstsq(ax[h].c, rhs);
        for (int k = 0; k < n; ++k)
          work[static_cast<std::size_t>((o * n + k) * inner + q)] = sol[k];
      }
    }
  }

  WindowCoeffs out;
  for (int h = 0; h < r; ++h) {
    out.window.lo.push_back(ax[h].window_lo);
    out.window.hi.push_back(ax[h].window_hi);
  }
  out.values = std::move(work);
  return out;
}

}  // namespace thbfit
