// Tensor-product layer: multi-index flattening, product evaluation,
// dyadic refinement with the two-scale coefficient transform, and the
// polynomial-to-spline conversion used to read off local coefficients.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "oracles.hpp"
#include "thbfit/poly_convert.hpp"
#include "thbfit/polynomial.hpp"
#include "thbfit/tensor_space.hpp"

using thbfit::Box;
using thbfit::FlatIndex;
using thbfit::KnotVector;
using thbfit::LocalPoly;
using thbfit::MultiIndex;
using thbfit::SplineCoeffs;
using thbfit::TensorSpace;
using thbfit::WindowCoeffs;
using Catch::Approx;

namespace {

TensorSpace mixed_space() {
  return TensorSpace({KnotVector({0, 0, 0, 1, 2, 3, 3, 3}, 2),
                      KnotVector({-1, -1, 0, 0.5, 1, 1}, 1)},
                     0);
}

}  // namespace

TEST_CASE("flatten and unflatten are inverse with direction 0 slowest") {
  const TensorSpace sp = mixed_space();
  REQUIRE(sp.num_basis_total() == 5 * 4);
  CHECK(sp.flatten({0, 0}) == 0);
  CHECK(sp.flatten({0, 1}) == 1);
  CHECK(sp.flatten({1, 0}) == 4);
  for (FlatIndex f = 0; f < sp.num_basis_total(); ++f)
    CHECK(sp.flatten(sp.unflatten(f)) == f);
  for (FlatIndex f = 0; f < sp.num_cells_total(); ++f)
    CHECK(sp.flatten_cell(sp.unflatten_cell(f)) == f);
  CHECK_THROWS_AS(sp.flatten({5, 0}), std::out_of_range);
  CHECK_THROWS_AS(sp.flatten({0, -1}), std::out_of_range);
  CHECK_THROWS_AS(sp.flatten_cell({3, 0}), std::out_of_range);
}

TEST_CASE("product evaluation matches the univariate factors") {
  const TensorSpace sp = mixed_space();
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> dx(0.0, 3.0), dy(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::vector<double> x = {dx(rng), dy(rng)};
    double sum = 0.0;
    for (FlatIndex f = 0; f < sp.num_basis_total(); ++f) {
      const MultiIndex j = sp.unflatten(f);
      const double v = sp.eval(j, x);
      CHECK(v == Approx(sp.kv(0).eval(j[0], x[0]) * sp.kv(1).eval(j[1], x[1]))
                     .margin(1e-14));
      sum += v;
    }
    CHECK(sum == Approx(1.0).margin(1e-12));  // partition of unity
  }
}

TEST_CASE("cells, supports, and point location agree geometrically") {
  const TensorSpace sp = mixed_space();
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> dx(0.0, 3.0), dy(-1.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::vector<double> x = {dx(rng), dy(rng)};
    const Box g = sp.cell_geometry(sp.cell_of_point(x));
    CHECK(g.contains(x));
  }
  for (FlatIndex f = 0; f < sp.num_basis_total(); ++f) {
    const MultiIndex j = sp.unflatten(f);
    const Box supp = sp.support_box(j);
    const thbfit::CellBox cells = sp.support_cells(j);
    for (int h = 0; h < sp.dim(); ++h) {
      CHECK(sp.kv(h).breakpoints()[cells.lo[h]] == supp.lo[h]);
      CHECK(sp.kv(h).breakpoints()[cells.hi[h] + 1] == supp.hi[h]);
    }
  }
  // Total cell volume equals the domain volume.
  double vol = 0.0;
  for (FlatIndex f = 0; f < sp.num_cells_total(); ++f)
    vol += sp.cell_geometry(sp.unflatten_cell(f)).volume();
  CHECK(vol == Approx(sp.domain().volume()).margin(1e-12));
}

TEST_CASE("dyadic refinement nests bit-exactly") {
  const TensorSpace sp = mixed_space();
  const TensorSpace fine = sp.dyadic_refine();
  CHECK(fine.level() == sp.level() + 1);
  CHECK(sp.nested_in(fine));
  CHECK_FALSE(fine.nested_in(sp));
  for (int h = 0; h < sp.dim(); ++h) CHECK(sp.kv(h).nested_in(fine.kv(h)));
}

TEST_CASE("two-scale transform preserves the spline") {
  const TensorSpace coarse = mixed_space();
  const TensorSpace fine = coarse.dyadic_refine();
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> cdist(-3.0, 3.0);
  SplineCoeffs c(coarse);
  double cmax = 0.0;
  for (double& v : c.values) {
    v = cdist(rng);
    cmax = std::max(cmax, std::abs(v));
  }
  const SplineCoeffs q = thbfit::two_scale(coarse, fine, c);
  REQUIRE(q.values.size() == static_cast<std::size_t>(fine.num_basis_total()));

  std::uniform_real_distribution<double> dx(0.0, 3.0), dy(-1.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    const std::vector<double> x = {dx(rng), dy(rng)};
    const double vc = oracle::dense_eval(coarse, c, x);
    const double vf = oracle::dense_eval(fine, q, x);
    CHECK(std::abs(vf - vc) <= 1e-12 * std::max(1.0, cmax));
  }

  const TensorSpace other({KnotVector({0, 0, 0, 1.1, 2, 3, 3, 3}, 2),
                           KnotVector({-1, -1, 0, 0.5, 1, 1}, 1)},
                          1);
  CHECK_THROWS_AS(thbfit::two_scale(coarse, other, c), std::invalid_argument);
}

TEST_CASE("monomial exponents follow graded order with stable dimensions") {
  CHECK(thbfit::polynomial_space_dim(2, 2) == 6);
  CHECK(thbfit::polynomial_space_dim(2, 4) == 15);
  CHECK(thbfit::polynomial_space_dim(1, 3) == 4);
  const auto exps = thbfit::monomial_exponents(2, 2);
  REQUIRE(exps.size() == 6);
  // Ascending total degree; within a degree, first coordinate descending.
  CHECK(exps[0] == MultiIndex{0, 0});
  CHECK(exps[1] == MultiIndex{1, 0});
  CHECK(exps[2] == MultiIndex{0, 1});
  CHECK(exps[3] == MultiIndex{2, 0});
  CHECK(exps[4] == MultiIndex{1, 1});
  CHECK(exps[5] == MultiIndex{0, 2});
}

TEST_CASE("polynomial conversion reproduces constants and the identity map") {
  const TensorSpace sp({KnotVector({0, 0, 0, 1, 2, 2, 2}, 2)}, 0);
  const Box full{{0.0}, {2.0}};

  const LocalPoly one(0, full, {1.0});
  const WindowCoeffs wc = thbfit::poly_to_coeffs(sp, one, full);
  REQUIRE(wc.values.size() == 4);
  for (double v : wc.values) CHECK(v == Approx(1.0).margin(1e-12));

  // p(x) = x over the whole domain: coefficients are the Greville points.
  const LocalPoly ident(1, full, {0.0, 2.0});  // 0 + 2 * u with u = x / 2
  const WindowCoeffs wx = thbfit::poly_to_coeffs(sp, ident, full);
  const std::vector<double> grev = sp.kv(0).greville();
  REQUIRE(wx.values.size() == grev.size());
  for (std::size_t i = 0; i < grev.size(); ++i)
    CHECK(wx.values[i] == Approx(grev[i]).margin(1e-12));

  // Same polynomial on the sub-box [0, 1]: window holds the first three
  // functions and keeps their global coefficients.
  const Box half{{0.0}, {1.0}};
  const LocalPoly ident_half(1, half, {0.0, 1.0});
  const WindowCoeffs wh = thbfit::poly_to_coeffs(sp, ident_half, half);
  REQUIRE(wh.values.size() == 3);
  CHECK(wh.window.lo[0] == 0);
  CHECK(wh.values[0] == Approx(0.0).margin(1e-12));
  CHECK(wh.values[1] == Approx(0.5).margin(1e-12));
  CHECK(wh.values[2] == Approx(1.5).margin(1e-12));
}

TEST_CASE("polynomial conversion is exact for bivariate polynomials") {
  const TensorSpace sp({KnotVector({0, 0, 0, 1, 2, 3, 3, 3}, 2),
                        KnotVector({0, 0, 0, 0, 0.75, 2, 3, 3, 3, 3}, 3)},
                       0);
  std::mt19937 rng(29);
  std::uniform_real_distribution<double> cdist(-1.0, 1.0);

  const std::vector<Box> boxes = {
      Box{{0.0, 0.0}, {3.0, 3.0}},        // whole domain
      Box{{1.0, 0.75}, {2.0, 2.0}},       // knot-aligned sub-box
      Box{{0.4, 0.2}, {2.6, 2.9}},        // arbitrary interior box
  };
  for (const Box& box : boxes) {
    for (int deg = 0; deg <= 2; ++deg) {
      std::vector<double> coeffs(thbfit::polynomial_space_dim(2, deg));
      for (double& v : coeffs) v = cdist(rng);
      const LocalPoly p(deg, box, coeffs);
      const WindowCoeffs w = thbfit::poly_to_coeffs(sp, p, box);

      std::uniform_real_distribution<double> dx(box.lo[0], box.hi[0]);
      std::uniform_real_distribution<double> dy(box.lo[1], box.hi[1]);
      for (int trial = 0; trial < 120; ++trial) {
        const std::vector<double> x = {dx(rng), dy(rng)};
        double s = 0.0;
        MultiIndex j(2);
        for (j[0] = w.window.lo[0]; j[0] <= w.window.hi[0]; ++j[0])
          for (j[1] = w.window.lo[1]; j[1] <= w.window.hi[1]; ++j[1])
            s += w.at(j) * sp.eval(j, x);
        CHECK(s == Approx(p.eval(x)).margin(1e-10));
      }
    }
  }
}

TEST_CASE("polynomial conversion validates inputs") {
  const TensorSpace sp = oracle::uniform_space_2d(0.0, 1.0, 4, 2, 2);
  const Box box{{0.0, 0.0}, {1.0, 1.0}};
  std::vector<double> cubic(thbfit::polynomial_space_dim(2, 3), 1.0);
  CHECK_THROWS_AS(thbfit::poly_to_coeffs(sp, LocalPoly(3, box, cubic), box),
                  std::invalid_argument);
  const Box degenerate{{0.2, 0.2}, {0.2, 0.8}};
  CHECK_THROWS_AS(
      thbfit::poly_to_coeffs(sp, LocalPoly(0, degenerate, {1.0}), degenerate),
      std::invalid_argument);
  const Box outside{{-0.5, 0.0}, {0.5, 1.0}};
  CHECK_THROWS_AS(thbfit::poly_to_coeffs(sp, LocalPoly(0, outside, {1.0}), outside),
                  std::invalid_argument);
}
