#pragma once

// Polynomials of bounded total degree in scaled power form. Coefficients
// refer to monomials in reference coordinates u in [0,1]^r obtained by
// affinely mapping an anchor box (the local frame) to the unit box; this
// keeps collocation matrices of the local fits scale independent.
//
// Monomial order is graded lexicographic: ascending total degree, and
// within one degree descending lexicographic exponent order, e.g. for
// r = 2, d = 2:  1, x, y, x^2, xy, y^2.

#include <array>
#include <stdexcept>
#include <vector>

#include "thbfit/tensor_space.hpp"

namespace thbfit {

inline void append_exponents_of_degree(int r, int t, MultiIndex& cur,
                                       std::vector<MultiIndex>& out) {
  if (static_cast<int>(cur.size()) == r - 1) {
    cur.push_back(t);
    out.push_back(cur);
    cur.pop_back();
    return;
  }
  for (int e = t; e >= 0; --e) {
    cur.push_back(e);
    append_exponents_of_degree(r, t - e, cur, out);
    cur.pop_back();
  }
}

// All exponent multi-indices with total degree <= d, graded lexicographic.
inline std::vector<MultiIndex> monomial_exponents(int r, int d) {
  if (r < 1 || d < 0) throw std::invalid_argument("monomial_exponents: bad arguments");
  std::vector<MultiIndex> out;
  MultiIndex cur;
  for (int t = 0; t <= d; ++t) append_exponents_of_degree(r, t, cur, out);
  return out;
}

inline FlatIndex polynomial_space_dim(int r, int d) {
  // binomial(d + r, r)
  FlatIndex num = 1, den = 1;
  for (int i = 1; i <= r; ++i) {
    num *= d + i;
    den *= i;
  }
  return num / den;
}

struct LocalPoly {
  int total_degree = 0;
  Box frame;                        // anchor box mapped to [0,1]^r
  std::vector<MultiIndex> exponents;  // graded lex, matches coeffs
  std::vector<double> coeffs;

  LocalPoly() = default;
  LocalPoly(int degree, Box frame_in, std::vector<double> coeffs_in)
      : total_degree(degree), frame(std::move(frame_in)), coeffs(std::move(coeffs_in)) {
    exponents = monomial_exponents(frame.dim(), total_degree);
    if (exponents.size() != coeffs.size())
      throw std::invalid_argument("LocalPoly: coefficient count does not match degree");
  }

  int dim() const { return frame.dim(); }

  double eval_ref(const std::vector<double>& u) const {
    // Per-direction power tables keep this O(terms).
    std::vector<std::array<double, kMaxDegree + 2>> pw(dim());
    for (int h = 0; h < dim(); ++h) {
      pw[h][0] = 1.0;
      for (int e = 1; e <= total_degree; ++e) pw[h][e] = pw[h][e - 1] * u[h];
    }
    double s = 0.0;
    for (std::size_t t = 0; t < coeffs.size(); ++t) {
      double m = coeffs[t];
      for (int h = 0; h < dim(); ++h) m *= pw[h][exponents[t][h]];
      s += m;
    }
    return s;
  }

  std::vector<double> to_ref(const std::vector<double>& x) const {
    std::vector<double> u(dim());
    for (int h = 0; h < dim(); ++h) u[h] = (x[h] - frame.lo[h]) / (frame.hi[h] - frame.lo[h]);
    return u;
  }

  double eval(const std::vector<double>& x) const { return eval_ref(to_ref(x)); }
};

}  // namespace thbfit
