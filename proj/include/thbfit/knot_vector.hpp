#pragma once

// Univariate clamped B-spline knot vector with evaluation, Greville
// abscissae, dyadic refinement and knot insertion (Oslo style) rows.
//
// Conventions, fixed across the whole library:
//  - knot vectors are clamped: both end knots have multiplicity exactly
//    degree + 1, interior multiplicities are at most degree + 1;
//  - evaluation is right-continuous at knots, except at the right domain
//    endpoint where the limit from the left is taken;
//  - knot equality is exact floating point equality (dyadic midpoints are
//    reproducible bit for bit, no tolerance matching anywhere).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace thbfit {

// Degrees stay small in practice; fixed stack buffers use this bound.
inline constexpr int kMaxDegree = 15;

class KnotVector {
public:
  KnotVector(std::vector<double> knots, int degree)
      : knots_(std::move(knots)), degree_(degree) {
    validate();
    for (std::size_t i = 0; i + 1 < knots_.size(); ++i)
      if (knots_[i + 1] > knots_[i]) breakpoints_.push_back(knots_[i]);
    breakpoints_.push_back(knots_.back());
  }

  int degree() const { return degree_; }
  const std::vector<double>& knots() const { return knots_; }
  int num_basis() const { return static_cast<int>(knots_.size()) - degree_ - 1; }

  double domain_min() const { return knots_.front(); }
  double domain_max() const { return knots_.back(); }

  // Distinct breakpoints; cell c spans [breakpoints()[c], breakpoints()[c+1]].
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  int num_cells() const { return static_cast<int>(breakpoints_.size()) - 1; }

  // Largest knot span index s with knots[s] <= t < knots[s+1]; at the right
  // domain endpoint the last nonempty span is returned (left limit).
  int find_span(double t) const {
    check_domain(t);
    if (t == domain_max()) return find_span_left(t);
    auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
    return static_cast<int>(it - knots_.begin()) - 1;
  }

  // Largest span index s with knots[s] < t (the span whose closure ends at
  // or after t from the left). Used for right edges of subdomain boxes.
  int find_span_left(double t) const {
    check_domain(t);
    if (t == domain_min()) return find_span(t);
    auto it = std::lower_bound(knots_.begin(), knots_.end(), t);
    return static_cast<int>(it - knots_.begin()) - 1;
  }

  // All degree+1 basis values that may be nonzero on span `s`, evaluated at
  // t: out[j] = B_{s-degree+j}(t). Standard triangular recurrence.
  void basis_values(int s, double t, double* out) const {
    std::array<double, kMaxDegree + 1> left{}, right{};
    out[0] = 1.0;
    for (int j = 1; j <= degree_; ++j) {
      left[j] = t - knots_[s + 1 - j];
      right[j] = knots_[s + j] - t;
      double saved = 0.0;
      for (int r = 0; r < j; ++r) {
        const double temp = out[r] / (right[r + 1] + left[j - r]);
        out[r] = saved + right[r + 1] * temp;
        saved = left[j - r] * temp;
      }
      out[j] = saved;
    }
  }

  // Single basis function value B_i(t).
  double eval(int i, double t) const {
    if (i < 0 || i >= num_basis())
      throw std::out_of_range("KnotVector::eval: basis index out of range");
    check_domain(t);
    const int s = find_span(t);
    if (i < s - degree_ || i > s) return 0.0;
    std::array<double, kMaxDegree + 1> vals{};
    basis_values(s, t, vals.data());
    return vals[i - (s - degree_)];
  }

  // Greville abscissa of each basis function: the mean of its degree
  // interior knots. Degree zero has no interior knots; cell midpoints keep
  // the nodes inside the support.
  std::vector<double> greville() const {
    std::vector<double> g(num_basis());
    for (int i = 0; i < num_basis(); ++i) {
      if (degree_ == 0) {
        g[i] = 0.5 * (knots_[i] + knots_[i + 1]);
      } else {
        double s = 0.0;
        for (int j = 1; j <= degree_; ++j) s += knots_[i + j];
        g[i] = s / degree_;
      }
    }
    return g;
  }

  // Insert the midpoint of every nonempty span, keeping multiplicities.
  KnotVector dyadic_refine() const {
    std::vector<double> fine;
    fine.reserve(knots_.size() * 2);
    for (std::size_t i = 0; i + 1 < knots_.size(); ++i) {
      fine.push_back(knots_[i]);
      if (knots_[i + 1] > knots_[i])
        fine.push_back(0.5 * (knots_[i] + knots_[i + 1]));
    }
    fine.push_back(knots_.back());
    return KnotVector(std::move(fine), degree_);
  }

  // Support of B_i: the closed interval [knots[i], knots[i+degree+1]].
  double support_begin(int i) const { return knots_[i]; }
  double support_end(int i) const { return knots_[i + degree_ + 1]; }

  // Inclusive range of cells on which B_i is not identically zero.
  int first_cell(int i) const { return cell_of_knot_index(i); }
  int last_cell(int i) const { return cell_of_knot_index(i + degree_ + 1) - 1; }

  // Knot span index whose half open interval equals cell c.
  int span_for_cell(int c) const { return span_for_cell_[c]; }

  // Cell containing t; the last cell at the right domain endpoint.
  int cell_of(double t) const {
    check_domain(t);
    if (t == domain_max()) return num_cells() - 1;
    auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
    return static_cast<int>(it - breakpoints_.begin()) - 1;
  }

  // Cell whose closure contains the limit from the left at t; requires
  // t > domain_min().
  int cell_of_left(double t) const {
    check_domain(t);
    if (t == domain_min())
      throw std::domain_error("KnotVector: no cell left of the domain start");
    auto it = std::lower_bound(breakpoints_.begin(), breakpoints_.end(), t);
    return static_cast<int>(it - breakpoints_.begin()) - 1;
  }

  // True if every knot of this vector occurs, with multiplicity, in `fine`.
  bool nested_in(const KnotVector& fine) const {
    if (fine.degree_ != degree_) return false;
    std::size_t j = 0;
    for (double t : knots_) {
      while (j < fine.knots_.size() && fine.knots_[j] != t) ++j;
      if (j == fine.knots_.size()) return false;
      ++j;
    }
    return true;
  }

  bool operator==(const KnotVector& o) const {
    return degree_ == o.degree_ && knots_ == o.knots_;
  }

private:
  void validate() {
    if (degree_ < 0 || degree_ > kMaxDegree)
      throw std::invalid_argument("KnotVector: degree out of supported range");
    const std::size_t n = knots_.size();
    if (n < 2 * static_cast<std::size_t>(degree_ + 1))
      throw std::invalid_argument("KnotVector: too few knots");
    for (std::size_t i = 0; i + 1 < n; ++i)
      if (knots_[i + 1] < knots_[i])
        throw std::invalid_argument("KnotVector: knots must be nondecreasing");
    if (knots_.front() == knots_.back())
      throw std::invalid_argument("KnotVector: empty domain");
    // Clamped ends: multiplicity exactly degree+1 on both sides.
    if (knots_[degree_] != knots_[0] || knots_[degree_ + 1] == knots_[0])
      throw std::invalid_argument("KnotVector: left end must have multiplicity degree+1");
    if (knots_[n - degree_ - 1] != knots_[n - 1] ||
        knots_[n - degree_ - 2] == knots_[n - 1])
      throw std::invalid_argument("KnotVector: right end must have multiplicity degree+1");
    std::size_t run = 1;
    for (std::size_t i = 1; i < n; ++i) {
      run = knots_[i] == knots_[i - 1] ? run + 1 : 1;
      if (run > static_cast<std::size_t>(degree_ + 1))
        throw std::invalid_argument("KnotVector: knot multiplicity exceeds degree+1");
    }
    // Cell index -> knot span lookup.
    span_for_cell_.clear();
    for (std::size_t i = 0; i + 1 < n; ++i)
      if (knots_[i + 1] > knots_[i]) span_for_cell_.push_back(static_cast<int>(i));
  }

  void check_domain(double t) const {
    if (!(t >= domain_min() && t <= domain_max()))
      throw std::domain_error("KnotVector: parameter outside knot domain");
  }

  // Cell index of the first nonempty span at or after knot index k.
  int cell_of_knot_index(int k) const {
    auto it = std::upper_bound(span_for_cell_.begin(), span_for_cell_.end(), k - 1);
    return static_cast<int>(it - span_for_cell_.begin());
  }

  std::vector<double> knots_;
  int degree_;
  std::vector<double> breakpoints_;
  std::vector<int> span_for_cell_;
};

// One row of the knot insertion (discrete B-spline) matrix: the fine basis
// function K satisfies  B^coarse_I = sum_K alpha_I(K) B^fine_K, and this
// returns alpha_I(K) for the only indices I that can be nonzero,
// I = first .. first + degree. Computed by the triangular recurrence with
// the fine knots tau_{K+1} .. tau_{K+degree} as stage arguments; empty
// coarse spans contribute zero (0/0 := 0).
struct InsertionRow {
  int first;
  std::array<double, kMaxDegree + 1> alpha;
};

inline InsertionRow insertion_row(const KnotVector& coarse, const KnotVector& fine, int k) {
  if (k < 0 || k >= fine.num_basis())
    throw std::out_of_range("insertion_row: fine index out of range");
  const int d = coarse.degree();
  const auto& t = coarse.knots();
  const auto& tau = fine.knots();
  // mu: coarse span with t[mu] <= tau[k] < t[mu+1]; tau[k] < domain max
  // because end multiplicities are exactly degree+1.
  const int mu = coarse.find_span(tau[k]);
  InsertionRow row;
  row.first = mu - d;
  row.alpha.fill(0.0);
  row.alpha[d] = 1.0;  // stage 0: only I = mu survives
  for (int j = 1; j <= d; ++j) {
    const double u = tau[k + j];
    for (int a = d - j; a <= d; ++a) {
      const int i = mu - d + a;
      const double den1 = t[i + j] - t[i];
      const double c1 = den1 > 0.0 ? (u - t[i]) / den1 : 0.0;
      const double den2 = t[i + j + 1] - t[i + 1];
      const double c2 = den2 > 0.0 ? (t[i + j + 1] - u) / den2 : 0.0;
      const double next = a + 1 <= d ? row.alpha[a + 1] : 0.0;
      row.alpha[a] = c1 * row.alpha[a] + c2 * next;
    }
  }
  return row;
}

// Re-express a coarse coefficient vector in a nested finer knot vector.
inline std::vector<double> refine_coeffs(const KnotVector& coarse, const KnotVector& fine,
                                         const std::vector<double>& c) {
  if (static_cast<int>(c.size()) != coarse.num_basis())
    throw std::invalid_argument("refine_coeffs: coefficient count mismatch");
  if (!coarse.nested_in(fine))
    throw std::invalid_argument("refine_coeffs: knot vectors are not nested");
  std::vector<double> out(fine.num_basis(), 0.0);
  for (int k = 0; k < fine.num_basis(); ++k) {
    const InsertionRow row = insertion_row(coarse, fine, k);
    double s = 0.0;
    for (int a = 0; a <= coarse.degree(); ++a) {
      const int i = row.first + a;
      if (i >= 0 && i < coarse.num_basis() && row.alpha[a] != 0.0) s += row.alpha[a] * c[i];
    }
    out[k] = s;
  }
  return out;
}

}  // namespace thbfit
