// Univariate spline layer: knot vector validation, span location, basis
// evaluation, Greville abscissae, dyadic refinement, and the per-index
// insertion rows used by the multivariate two-scale transform. Refinement
// identities are cross-checked against a classic single-insertion oracle.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "oracles.hpp"
#include "thbfit/knot_vector.hpp"

using thbfit::KnotVector;
using Catch::Approx;

TEST_CASE("constructor validates knot vectors") {
  CHECK_NOTHROW(KnotVector({0, 0, 0, 1, 2, 3, 3, 3}, 2));
  CHECK_NOTHROW(KnotVector({0, 1}, 0));
  // Decreasing sequence.
  CHECK_THROWS_AS(KnotVector({0, 0, 0, 2, 1, 3, 3, 3}, 2), std::invalid_argument);
  // End multiplicity below degree + 1.
  CHECK_THROWS_AS(KnotVector({0, 0, 1, 2, 2}, 2), std::invalid_argument);
  // End multiplicity above degree + 1.
  CHECK_THROWS_AS(KnotVector({0, 0, 0, 1, 2, 2, 2}, 1), std::invalid_argument);
  // Empty domain.
  CHECK_THROWS_AS(KnotVector({1, 1, 1, 1, 1, 1}, 2), std::invalid_argument);
  // Interior multiplicity above degree + 1.
  CHECK_THROWS_AS(KnotVector({0, 0, 0, 1, 1, 1, 1, 2, 2, 2}, 2), std::invalid_argument);
  // Too few knots for the degree.
  CHECK_THROWS_AS(KnotVector({0, 0, 1}, 1), std::invalid_argument);
}

TEST_CASE("interior quadratic value at a midpoint") {
  const KnotVector kv({0, 0, 0, 1, 2, 3, 3, 3}, 2);
  CHECK(kv.num_basis() == 5);
  CHECK(kv.eval(2, 1.5) == Approx(0.75).margin(1e-15));
}

TEST_CASE("degree-zero space is the single box indicator") {
  const KnotVector kv({0, 1}, 0);
  CHECK(kv.num_basis() == 1);
  CHECK(kv.eval(0, 0.0) == 1.0);
  CHECK(kv.eval(0, 0.3) == 1.0);
  CHECK(kv.eval(0, 1.0) == 1.0);
  CHECK(kv.greville() == std::vector<double>{0.5});
}

TEST_CASE("span location is right-continuous with a left limit at the top") {
  const KnotVector kv({0, 0, 0, 1, 2, 3, 3, 3}, 2);
  CHECK(kv.find_span(0.0) == 2);
  CHECK(kv.find_span(1.0) == 3);  // knot value belongs to the right span
  CHECK(kv.find_span(2.0) == 4);
  CHECK(kv.find_span(3.0) == 4);  // right endpoint falls back to the last span
  CHECK(kv.find_span_left(1.0) == 2);
  CHECK(kv.find_span_left(3.0) == 4);
  CHECK(kv.find_span_left(0.0) == 2);  // left endpoint falls forward

  CHECK(kv.cell_of(0.0) == 0);
  CHECK(kv.cell_of(1.0) == 1);
  CHECK(kv.cell_of(3.0) == 2);
  CHECK(kv.cell_of_left(1.0) == 0);
  CHECK(kv.cell_of_left(3.0) == 2);
  CHECK_THROWS_AS(kv.cell_of_left(0.0), std::domain_error);
  CHECK_THROWS_AS(kv.find_span(3.5), std::domain_error);
  CHECK_THROWS_AS(kv.find_span(-0.1), std::domain_error);
}

TEST_CASE("basis values are a nonnegative partition of unity") {
  const KnotVector kv({0, 0, 0, 0, 0.5, 1.25, 1.25, 2, 4, 4, 4, 4}, 3);
  std::mt19937 rng(101);
  std::uniform_real_distribution<double> dist(0.0, 4.0);
  std::vector<double> vals(kv.degree() + 1);
  for (int trial = 0; trial < 500; ++trial) {
    const double t = trial == 0 ? 0.0 : (trial == 1 ? 4.0 : dist(rng));
    const int s = kv.find_span(t);
    kv.basis_values(s, t, vals.data());
    double sum = 0.0;
    for (double v : vals) {
      CHECK(v >= -1e-14);
      sum += v;
    }
    CHECK(sum == Approx(1.0).margin(1e-12));
    // Full evaluation across all indices agrees and vanishes off-window.
    double full = 0.0;
    for (int i = 0; i < kv.num_basis(); ++i) full += kv.eval(i, t);
    CHECK(full == Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("eval vanishes outside the support box") {
  const KnotVector kv({0, 0, 0, 1, 2, 3, 3, 3}, 2);
  // Index 0 is supported on [0, 1].
  CHECK(kv.support_begin(0) == 0.0);
  CHECK(kv.support_end(0) == 1.0);
  CHECK(kv.eval(0, 1.5) == 0.0);
  CHECK(kv.eval(0, 3.0) == 0.0);
  // Index 4 is supported on [2, 3].
  CHECK(kv.eval(4, 1.5) == 0.0);
  CHECK(kv.first_cell(4) == 2);
  CHECK(kv.last_cell(4) == 2);
  CHECK(kv.first_cell(2) == 0);
  CHECK(kv.last_cell(2) == 2);
  CHECK_THROWS_AS(kv.eval(5, 1.0), std::out_of_range);
}

TEST_CASE("Greville abscissae") {
  CHECK(KnotVector({0, 0, 1, 2, 2}, 1).greville() == std::vector<double>{0, 1, 2});
  CHECK(KnotVector({0, 0, 0, 1, 2, 2, 2}, 2).greville() ==
        std::vector<double>{0, 0.5, 1.5, 2});
}

TEST_CASE("linear reproduction with Greville coefficients") {
  const KnotVector kv({0, 0, 0, 1, 2, 2, 2}, 2);
  const std::vector<double> g = kv.greville();
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> dist(0.0, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double t = dist(rng);
    double s = 0.0;
    for (int i = 0; i < kv.num_basis(); ++i) s += g[i] * kv.eval(i, t);
    CHECK(s == Approx(t).margin(1e-13));
  }
}

TEST_CASE("dyadic refinement inserts midpoints of nonempty spans") {
  const KnotVector a({0, 0, 0, 1, 4, 4, 4}, 2);
  CHECK(a.dyadic_refine().knots() == std::vector<double>{0, 0, 0, 0.5, 1, 2.5, 4, 4, 4});
  const KnotVector b({0, 0, 0, 1, 2, 2, 2}, 2);
  CHECK(b.dyadic_refine().knots() == std::vector<double>{0, 0, 0, 0.5, 1, 1.5, 2, 2, 2});
  CHECK(b.nested_in(b.dyadic_refine()));
  CHECK(b.nested_in(b));
  CHECK_FALSE(b.dyadic_refine().nested_in(b));
  CHECK_FALSE(b.nested_in(KnotVector({0, 0, 0, 1.25, 2, 2, 2}, 2)));
}

TEST_CASE("insertion rows form a convex combination") {
  const KnotVector coarse({0, 0, 0, 0, 1, 3, 3.5, 7, 7, 7, 7}, 3);
  const KnotVector fine = coarse.dyadic_refine();
  for (int k = 0; k < fine.num_basis(); ++k) {
    const thbfit::InsertionRow row = thbfit::insertion_row(coarse, fine, k);
    double sum = 0.0;
    for (int d = 0; d <= coarse.degree(); ++d) {
      CHECK(row.alpha[d] >= -1e-14);
      sum += row.alpha[d];
    }
    CHECK(sum == Approx(1.0).margin(1e-12));
    CHECK(row.first >= 0);
    CHECK(row.first + coarse.degree() < coarse.num_basis());
  }
}

TEST_CASE("uniform quadratic two-scale mask") {
  const KnotVector coarse({0, 0, 0, 1, 2, 3, 3, 3}, 2);
  const KnotVector fine = coarse.dyadic_refine();
  std::vector<double> c(coarse.num_basis(), 0.0);
  c[2] = 1.0;  // the full interior function, support [0, 3]
  const std::vector<double> q = thbfit::refine_coeffs(coarse, fine, c);
  REQUIRE(q.size() == static_cast<std::size_t>(fine.num_basis()));
  const std::vector<double> expect = {0, 0, 0.25, 0.75, 0.75, 0.25, 0, 0};
  for (std::size_t i = 0; i < q.size(); ++i) CHECK(q[i] == Approx(expect[i]).margin(1e-14));

  const std::vector<double> ora = oracle::boehm_dyadic(coarse, c);
  REQUIRE(ora.size() == q.size());
  for (std::size_t i = 0; i < q.size(); ++i) CHECK(q[i] == Approx(ora[i]).margin(1e-14));
}

TEST_CASE("refinement preserves constants and function values") {
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> cdist(-2.0, 2.0);
  const std::vector<KnotVector> cases = {
      KnotVector({0, 0, 0, 1, 2, 3, 3, 3}, 2),
      KnotVector({0, 0, 0, 0, 0.5, 1.25, 1.25, 2, 4, 4, 4, 4}, 3),
      KnotVector({-1, -1, 0.25, 1, 1}, 1),
      KnotVector({0, 1, 2, 5}, 0),
  };
  for (const KnotVector& coarse : cases) {
    const KnotVector fine = coarse.dyadic_refine();
    REQUIRE(coarse.nested_in(fine));

    const std::vector<double> ones(coarse.num_basis(), 1.0);
    for (double v : thbfit::refine_coeffs(coarse, fine, ones))
      CHECK(v == Approx(1.0).margin(1e-13));

    std::vector<double> c(coarse.num_basis());
    for (double& v : c) v = cdist(rng);
    const std::vector<double> q = thbfit::refine_coeffs(coarse, fine, c);
    const std::vector<double> ora = oracle::boehm_dyadic(coarse, c);
    REQUIRE(q.size() == ora.size());
    for (std::size_t i = 0; i < q.size(); ++i) CHECK(q[i] == Approx(ora[i]).margin(1e-13));

    std::uniform_real_distribution<double> tdist(coarse.domain_min(), coarse.domain_max());
    for (int trial = 0; trial < 100; ++trial) {
      const double t = tdist(rng);
      double sc = 0.0, sf = 0.0;
      for (int i = 0; i < coarse.num_basis(); ++i) sc += c[i] * coarse.eval(i, t);
      for (int i = 0; i < fine.num_basis(); ++i) sf += q[i] * fine.eval(i, t);
      CHECK(sf == Approx(sc).margin(1e-12));
    }
  }
}

TEST_CASE("refine_coeffs rejects non-nested targets") {
  const KnotVector coarse({0, 0, 0, 1, 2, 3, 3, 3}, 2);
  const KnotVector other({0, 0, 0, 1.25, 2, 3, 3, 3}, 2);
  const std::vector<double> c(coarse.num_basis(), 1.0);
  CHECK_THROWS_AS(thbfit::refine_coeffs(coarse, other, c), std::invalid_argument);
}

TEST_CASE("span and cell bookkeeping stay consistent") {
  const KnotVector kv({0, 0, 0, 0.5, 0.5, 1, 2, 2, 2}, 2);
  REQUIRE(kv.num_cells() == 3);
  CHECK(kv.breakpoints() == std::vector<double>{0, 0.5, 1, 2});
  for (int c = 0; c < kv.num_cells(); ++c) {
    const int s = kv.span_for_cell(c);
    // The span's knot interval is exactly the cell.
    CHECK(kv.knots()[s] == kv.breakpoints()[c]);
    CHECK(kv.knots()[s + 1] == kv.breakpoints()[c + 1]);
  }
}
