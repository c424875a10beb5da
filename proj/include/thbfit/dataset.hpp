#pragma once

// Scattered data points with values, plus a uniform-bin index for closed
// Euclidean ball queries. Query results are returned in ascending point
// index order so downstream computations are independent of bin layout.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "thbfit/tensor_space.hpp"

namespace thbfit {

class ScatteredDataset {
public:
  ScatteredDataset(int dim, std::vector<double> coords, std::vector<double> values)
      : dim_(dim), coords_(std::move(coords)), values_(std::move(values)) {
    if (dim_ < 1) throw std::invalid_argument("ScatteredDataset: bad dimension");
    if (values_.empty()) throw std::invalid_argument("ScatteredDataset: no points");
    if (coords_.size() != values_.size() * static_cast<std::size_t>(dim_))
      throw std::invalid_argument("ScatteredDataset: coordinate/value count mismatch");
    for (double c : coords_)
      if (!std::isfinite(c)) throw std::invalid_argument("ScatteredDataset: non-finite coordinate");
    for (double v : values_)
      if (!std::isfinite(v)) throw std::invalid_argument("ScatteredDataset: non-finite value");
    check_distinct();
  }

  int dim() const { return dim_; }
  int size() const { return static_cast<int>(values_.size()); }

  double coord(int i, int h) const { return coords_[static_cast<std::size_t>(i) * dim_ + h]; }
  double value(int i) const { return values_[i]; }
  const std::vector<double>& values() const { return values_; }

  std::vector<double> point(int i) const {
    return std::vector<double>(coords_.begin() + static_cast<std::ptrdiff_t>(i) * dim_,
                               coords_.begin() + static_cast<std::ptrdiff_t>(i + 1) * dim_);
  }

  Box bounding_box() const {
    Box b;
    b.lo.assign(dim_, 0.0);
    b.hi.assign(dim_, 0.0);
    for (int h = 0; h < dim_; ++h) {
      double lo = coord(0, h), hi = coord(0, h);
      for (int i = 1; i < size(); ++i) {
        lo = std::min(lo, coord(i, h));
        hi = std::max(hi, coord(i, h));
      }
      b.lo[h] = lo;
      b.hi[h] = hi;
    }
    return b;
  }

private:
  void check_distinct() const {
    std::vector<int> order(values_.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      for (int h = 0; h < dim_; ++h) {
        if (coord(a, h) != coord(b, h)) return coord(a, h) < coord(b, h);
      }
      return false;
    });
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
      bool same = true;
      for (int h = 0; h < dim_; ++h)
        if (coord(order[i], h) != coord(order[i + 1], h)) {
          same = false;
          break;
        }
      if (same) throw std::invalid_argument("ScatteredDataset: duplicate point locations");
    }
  }

  int dim_;
  std::vector<double> coords_;
  std::vector<double> values_;
};

class SpatialIndex {
public:
  // bin_size: target bin edge lengths, typically the coarse cell size.
  SpatialIndex(const ScatteredDataset& data, const std::vector<double>& bin_size)
      : data_(&data), bbox_(data.bounding_box()), counts_(data.dim(), 1) {
    const int r = data.dim();
    if (static_cast<int>(bin_size.size()) != r)
      throw std::invalid_argument("SpatialIndex: bin size dimension mismatch");
    FlatIndex total = 1;
    for (int h = 0; h < r; ++h) {
      const double extent = bbox_.hi[h] - bbox_.lo[h];
      if (bin_size[h] > 0.0 && extent > 0.0)
        counts_[h] = std::max(1, static_cast<int>(extent / bin_size[h]));
      counts_[h] = std::min(counts_[h], 1024);
      total *= counts_[h];
    }
    bins_.assign(static_cast<std::size_t>(total) + 1, 0);
    std::vector<int> bin_of(data.size());
    for (int i = 0; i < data.size(); ++i) {
      bin_of[i] = static_cast<int>(bin_index(data.point(i)));
      ++bins_[static_cast<std::size_t>(bin_of[i]) + 1];
    }
    for (std::size_t b = 1; b < bins_.size(); ++b) bins_[b] += bins_[b - 1];
    entries_.resize(data.size());
    std::vector<int> cursor(bins_.begin(), bins_.end() - 1);
    for (int i = 0; i < data.size(); ++i) entries_[cursor[bin_of[i]]++] = i;
  }

  // Indices of all points with ||X_i - center|| <= radius, ascending.
  std::vector<int> query_ball(const std::vector<double>& center, double radius) const {
    const int r = data_->dim();
    std::vector<int> lo(r), hi(r);
    for (int h = 0; h < r; ++h) {
      lo[h] = clamp_bin(h, center[h] - radius);
      hi[h] = clamp_bin(h, center[h] + radius);
    }
    std::vector<int> out;
    const double r2 = radius * radius;
    std::vector<int> b = lo;
    while (true) {
      FlatIndex flat = 0;
      for (int h = 0; h < r; ++h) flat = flat * counts_[h] + b[h];
      for (int e = bins_[static_cast<std::size_t>(flat)];
           e < bins_[static_cast<std::size_t>(flat) + 1]; ++e) {
        const int i = entries_[e];
        double d2 = 0.0;
        for (int h = 0; h < r; ++h) {
          const double d = data_->coord(i, h) - center[h];
          d2 += d * d;
        }
        if (d2 <= r2) out.push_back(i);
      }
      int h = r - 1;
      while (h >= 0) {
        if (++b[h] <= hi[h]) break;
        b[h] = lo[h];
        --h;
      }
      if (h < 0) break;
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  const ScatteredDataset& data() const { return *data_; }

private:
  FlatIndex bin_index(const std::vector<double>& x) const {
    FlatIndex flat = 0;
    for (int h = 0; h < data_->dim(); ++h) flat = flat * counts_[h] + clamp_bin(h, x[h]);
    return flat;
  }

  int clamp_bin(int h, double x) const {
    const double extent = bbox_.hi[h] - bbox_.lo[h];
    if (extent <= 0.0) return 0;
    int b = static_cast<int>((x - bbox_.lo[h]) / extent * counts_[h]);
    return std::clamp(b, 0, counts_[h] - 1);
  }

  const ScatteredDataset* data_;
  Box bbox_;
  std::vector<int> counts_;
  std::vector<int> bins_;     // CSR offsets
  std::vector<int> entries_;  // point indices grouped by bin
};

}  // namespace thbfit
