#pragma once

// Tensor product B-spline spaces over axis aligned boxes, with dense
// coefficient containers and the two-scale (knot insertion) transform
// between nested spaces.
//
// Flattening is row major with direction 0 slowest, for both basis
// function multi-indices and cell multi-indices.

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "thbfit/knot_vector.hpp"

namespace thbfit {

using MultiIndex = std::vector<int>;
using FlatIndex = std::int64_t;

struct Box {
  std::vector<double> lo, hi;
  int dim() const { return static_cast<int>(lo.size()); }
  bool contains(const std::vector<double>& x) const {
    for (int h = 0; h < dim(); ++h)
      if (x[h] < lo[h] || x[h] > hi[h]) return false;
    return true;
  }
  double volume() const {
    double v = 1.0;
    for (int h = 0; h < dim(); ++h) v *= hi[h] - lo[h];
    return v;
  }
};

// Inclusive per-direction integer index ranges.
struct CellBox {
  std::vector<int> lo, hi;
  int dim() const { return static_cast<int>(lo.size()); }
  FlatIndex count() const {
    FlatIndex n = 1;
    for (int h = 0; h < dim(); ++h) n *= hi[h] - lo[h] + 1;
    return n;
  }
};

class TensorSpace {
public:
  explicit TensorSpace(std::vector<KnotVector> kvs, int level = 0)
      : kvs_(std::move(kvs)), level_(level) {
    if (kvs_.empty()) throw std::invalid_argument("TensorSpace: no directions");
    if (level_ < 0) throw std::invalid_argument("TensorSpace: negative level");
  }

  int dim() const { return static_cast<int>(kvs_.size()); }
  int level() const { return level_; }
  const KnotVector& kv(int h) const { return kvs_[h]; }

  int num_basis(int h) const { return kvs_[h].num_basis(); }
  int num_cells(int h) const { return kvs_[h].num_cells(); }
  int degree(int h) const { return kvs_[h].degree(); }

  FlatIndex num_basis_total() const {
    FlatIndex n = 1;
    for (const auto& kv : kvs_) n *= kv.num_basis();
    return n;
  }
  FlatIndex num_cells_total() const {
    FlatIndex n = 1;
    for (const auto& kv : kvs_) n *= kv.num_cells();
    return n;
  }

  FlatIndex flatten(const MultiIndex& j) const {
    FlatIndex f = 0;
    for (int h = 0; h < dim(); ++h) {
      if (j[h] < 0 || j[h] >= num_basis(h))
        throw std::out_of_range("TensorSpace: basis multi-index out of range");
      f = f * num_basis(h) + j[h];
    }
    return f;
  }
  MultiIndex unflatten(FlatIndex f) const {
    MultiIndex j(dim());
    for (int h = dim() - 1; h >= 0; --h) {
      j[h] = static_cast<int>(f % num_basis(h));
      f /= num_basis(h);
    }
    return j;
  }

  FlatIndex flatten_cell(const MultiIndex& c) const {
    FlatIndex f = 0;
    for (int h = 0; h < dim(); ++h) {
      if (c[h] < 0 || c[h] >= num_cells(h))
        throw std::out_of_range("TensorSpace: cell multi-index out of range");
      f = f * num_cells(h) + c[h];
    }
    return f;
  }
  MultiIndex unflatten_cell(FlatIndex f) const {
    MultiIndex c(dim());
    for (int h = dim() - 1; h >= 0; --h) {
      c[h] = static_cast<int>(f % num_cells(h));
      f /= num_cells(h);
    }
    return c;
  }

  Box domain() const {
    Box b;
    for (const auto& kv : kvs_) {
      b.lo.push_back(kv.domain_min());
      b.hi.push_back(kv.domain_max());
    }
    return b;
  }

  // Closed support box of tensor basis function J.
  Box support_box(const MultiIndex& j) const {
    Box b;
    for (int h = 0; h < dim(); ++h) {
      b.lo.push_back(kvs_[h].support_begin(j[h]));
      b.hi.push_back(kvs_[h].support_end(j[h]));
    }
    return b;
  }

  // Inclusive cell range covered by the support of J.
  CellBox support_cells(const MultiIndex& j) const {
    CellBox cb;
    for (int h = 0; h < dim(); ++h) {
      cb.lo.push_back(kvs_[h].first_cell(j[h]));
      cb.hi.push_back(kvs_[h].last_cell(j[h]));
    }
    return cb;
  }

  Box cell_geometry(const MultiIndex& c) const {
    Box b;
    for (int h = 0; h < dim(); ++h) {
      b.lo.push_back(kvs_[h].breakpoints()[c[h]]);
      b.hi.push_back(kvs_[h].breakpoints()[c[h] + 1]);
    }
    return b;
  }

  MultiIndex cell_of_point(const std::vector<double>& x) const {
    if (static_cast<int>(x.size()) != dim())
      throw std::invalid_argument("TensorSpace: point dimension mismatch");
    MultiIndex c(dim());
    for (int h = 0; h < dim(); ++h) c[h] = kvs_[h].cell_of(x[h]);
    return c;
  }

  double eval(const MultiIndex& j, const std::vector<double>& x) const {
    if (static_cast<int>(x.size()) != dim())
      throw std::invalid_argument("TensorSpace: point dimension mismatch");
    double v = 1.0;
    for (int h = 0; h < dim(); ++h) {
      v *= kvs_[h].eval(j[h], x[h]);
      if (v == 0.0) return 0.0;
    }
    return v;
  }

  TensorSpace dyadic_refine() const {
    std::vector<KnotVector> fine;
    fine.reserve(kvs_.size());
    for (const auto& kv : kvs_) fine.push_back(kv.dyadic_refine());
    return TensorSpace(std::move(fine), level_ + 1);
  }

  bool nested_in(const TensorSpace& fine) const {
    if (fine.dim() != dim()) return false;
    for (int h = 0; h < dim(); ++h)
      if (!kvs_[h].nested_in(fine.kvs_[h])) return false;
    return true;
  }

  bool operator==(const TensorSpace& o) const {
    return level_ == o.level_ && kvs_ == o.kvs_;
  }

private:
  std::vector<KnotVector> kvs_;
  int level_;
};

// Dense coefficient tensor over the basis of one TensorSpace.
struct SplineCoeffs {
  std::vector<int> shape;
  std::vector<double> values;

  SplineCoeffs() = default;
  explicit SplineCoeffs(const TensorSpace& space, double fill = 0.0) {
    for (int h = 0; h < space.dim(); ++h) shape.push_back(space.num_basis(h));
    values.assign(static_cast<std::size_t>(space.num_basis_total()), fill);
  }

  double& at(FlatIndex f) { return values[static_cast<std::size_t>(f)]; }
  double at(FlatIndex f) const { return values[static_cast<std::size_t>(f)]; }
};

// Coefficients over a rectangular window of basis multi-indices, stored
// densely in the window's local row major order.
struct WindowCoeffs {
  CellBox window;  // per-direction inclusive basis index ranges
  std::vector<double> values;

  FlatIndex local_flatten(const MultiIndex& j) const {
    FlatIndex f = 0;
    for (int h = 0; h < window.dim(); ++h) {
      if (j[h] < window.lo[h] || j[h] > window.hi[h])
        throw std::out_of_range("WindowCoeffs: index outside window");
      f = f * (window.hi[h] - window.lo[h] + 1) + (j[h] - window.lo[h]);
    }
    return f;
  }
  double at(const MultiIndex& j) const { return values[static_cast<std::size_t>(local_flatten(j))]; }
};

// Re-express a spline from a coarse space in a nested fine space, one
// direction at a time.
inline SplineCoeffs two_scale(const TensorSpace& coarse, const TensorSpace& fine,
                              const SplineCoeffs& c) {
  if (!coarse.nested_in(fine))
    throw std::invalid_argument("two_scale: spaces are not nested");
  if (static_cast<FlatIndex>(c.values.size()) != coarse.num_basis_total())
    throw std::invalid_argument("two_scale: coefficient count mismatch");

  std::vector<int> dims = c.shape;
  std::vector<double> work = c.values;
  for (int h = 0; h < coarse.dim(); ++h) {
    const KnotVector& ckv = coarse.kv(h);
    const KnotVector& fkv = fine.kv(h);
    const int n_coarse = ckv.num_basis();
    const int n_fine = fkv.num_basis();
    std::vector<InsertionRow> rows;
    rows.reserve(n_fine);
    for (int k = 0; k < n_fine; ++k) rows.push_back(insertion_row(ckv, fkv, k));

    FlatIndex outer = 1, inner = 1;
    for (int g = 0; g < h; ++g) outer *= dims[g];
    for (int g = h + 1; g < static_cast<int>(dims.size()); ++g) inner *= dims[g];

    std::vector<double> next(static_cast<std::size_t>(outer * n_fine * inner), 0.0);
    for (FlatIndex o = 0; o < outer; ++o) {
      for (FlatIndex q = 0; q < inner; ++q) {
        for (int k = 0; k < n_fine; ++k) {
          double s = 0.0;
          for (int a = 0; a <= ckv.degree(); ++a) {
            const int i = rows[k].first + a;
            if (i < 0 || i >= n_coarse) continue;
            s += rows[k].alpha[a] * work[static_cast<std::size_t>((o * dims[h] + i) * inner + q)];
          }
          next[static_cast<std::size_t>((o * n_fine + k) * inner + q)] = s;
        }
      }
    }
    work = std::move(next);
    dims[h] = n_fine;
  }

  SplineCoeffs out;
  out.shape = dims;
  out.values = std::move(work);
  return out;
}

}  // namespace thbfit
