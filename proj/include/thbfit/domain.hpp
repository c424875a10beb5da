#pragma once

// Non-rectangular fitting domains: an axis aligned base box minus a list
// of axis aligned holes. Used to discard basis functions whose support
// carries no domain material and to mask surface samples.

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "thbfit/tensor_space.hpp"

namespace thbfit {

struct DomainSpec {
  Box base;
  std::vector<Box> subtracted;

  int dim() const { return base.dim(); }

  void validate() const {
    for (int h = 0; h < dim(); ++h)
      if (!(base.lo[h] < base.hi[h]))
        throw std::invalid_argument("DomainSpec: base box is degenerate");
    for (const Box& s : subtracted) {
      if (s.dim() != dim()) throw std::invalid_argument("DomainSpec: dimension mismatch");
      double v = 1.0;
      for (int h = 0; h < dim(); ++h)
        v *= std::min(s.hi[h], base.hi[h]) - std::max(s.lo[h], base.lo[h]);
      bool overlaps = true;
      for (int h = 0; h < dim(); ++h)
        if (std::min(s.hi[h], base.hi[h]) <= std::max(s.lo[h], base.lo[h])) overlaps = false;
      if (!overlaps || v <= 0.0)
        throw std::invalid_argument("DomainSpec: subtracted box does not cut the base");
    }
  }

  // Closed base minus open holes: hole boundaries still belong to the
  // domain, matching the closure of the cut region.
  bool contains(const std::vector<double>& x) const {
    if (!base.contains(x)) return false;
    for (const Box& s : subtracted) {
      bool inside = true;
      for (int h = 0; h < dim(); ++h)
        if (x[h] <= s.lo[h] || x[h] >= s.hi[h]) {
          inside = false;
          break;
        }
      if (inside) return false;
    }
    return true;
  }

  // Whether box `b` intersects the domain with positive volume. Decides
  // which basis functions survive trimming.
  bool box_has_material(const Box& b) const {
    const int r = dim();
    Box clip;
    for (int h = 0; h < r; ++h) {
      clip.lo.push_back(std::max(b.lo[h], base.lo[h]));
      clip.hi.push_back(std::min(b.hi[h], base.hi[h]));
      if (!(clip.lo[h] < clip.hi[h])) return false;
    }
    if (subtracted.empty()) return true;
    // Grid decomposition of the clipped box by all hole facets; a grid
    // cell not covered by any hole certifies material.
    std::vector<std::vector<double>> cuts(r);
    for (int h = 0; h < r; ++h) {
      cuts[h].push_back(clip.lo[h]);
      cuts[h].push_back(clip.hi[h]);
      for (const Box& s : subtracted) {
        if (s.lo[h] > clip.lo[h] && s.lo[h] < clip.hi[h]) cuts[h].push_back(s.lo[h]);
        if (s.hi[h] > clip.lo[h] && s.hi[h] < clip.hi[h]) cuts[h].push_back(s.hi[h]);
      }
      std::sort(cuts[h].begin(), cuts[h].end());
      cuts[h].erase(std::unique(cuts[h].begin(), cuts[h].end()), cuts[h].end());
    }
    std::vector<int> idx(r, 0);
    while (true) {
      std::vector<double> center(r);
      for (int h = 0; h < r; ++h) center[h] = 0.5 * (cuts[h][idx[h]] + cuts[h][idx[h] + 1]);
      bool covered = false;
      for (const Box& s : subtracted) {
        bool inside = true;
        for (int h = 0; h < r; ++h)
          if (center[h] <= s.lo[h] || center[h] >= s.hi[h]) {
            inside = false;
            break;
          }
        if (inside) {
          covered = true;
          break;
        }
      }
      if (!covered) return true;
      int h = r - 1;
      while (h >= 0) {
        if (++idx[h] < static_cast<int>(cuts[h].size()) - 1) break;
        idx[h] = 0;
        --h;
      }
      if (h < 0) return false;
    }
  }
};

}  // namespace thbfit
