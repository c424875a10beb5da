#pragma once

// Domain hierarchies: a chain of dyadically nested tensor spaces
// V^0 c V^1 c ... c V^{M-1} together with nested cell collections
// Omega^0 >= Omega^1 >= ... (Omega^{l} holds level-l cells; Omega^M is
// empty). Refining a level-l cell always inserts its 2^r dyadic children
// into Omega^{l+1}, so refined regions are unions of complete sibling
// groups and the active cells of all levels tile the initial domain.

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "thbfit/tensor_space.hpp"

namespace thbfit {

class DomainHierarchy {
public:
  // Single level hierarchy covering the whole initial grid.
  explicit DomainHierarchy(TensorSpace v0) {
    spaces_.push_back(std::move(v0));
    std::vector<FlatIndex> all(static_cast<std::size_t>(spaces_[0].num_cells_total()));
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<FlatIndex>(i);
    omega_sorted_.push_back(std::move(all));
    rebuild_lookup();
  }

  // General constructor; omega[0] must cover the whole level-0 grid and
  // each deeper collection must consist of complete sibling groups whose
  // parents belong to the previous level.
  DomainHierarchy(std::vector<TensorSpace> spaces,
                  std::vector<std::vector<FlatIndex>> omegas)
      : spaces_(std::move(spaces)) {
    if (spaces_.empty() || spaces_.size() != omegas.size())
      throw std::invalid_argument("DomainHierarchy: level count mismatch");
    for (std::size_t l = 0; l + 1 < spaces_.size(); ++l)
      if (!(spaces_[l].dyadic_refine() == spaces_[l + 1]))
        throw std::invalid_argument("DomainHierarchy: spaces are not a dyadic chain");
    for (auto& om : omegas) {
      std::sort(om.begin(), om.end());
      om.erase(std::unique(om.begin(), om.end()), om.end());
      omega_sorted_.push_back(std::move(om));
    }
    if (static_cast<FlatIndex>(omega_sorted_[0].size()) != spaces_[0].num_cells_total())
      throw std::invalid_argument("DomainHierarchy: level 0 must cover the initial grid");
    rebuild_lookup();
    validate_nesting();
  }

  int dim() const { return spaces_[0].dim(); }
  int num_levels() const { return static_cast<int>(spaces_.size()); }
  const TensorSpace& space(int l) const { return spaces_.at(l); }

  // Membership of a level-l cell in Omega^l; queries at level M are empty.
  bool in_omega(int l, FlatIndex cell) const {
    if (l >= num_levels()) return false;
    return lookup_[l].count(cell) != 0;
  }
  const std::vector<FlatIndex>& omega_sorted(int l) const { return omega_sorted_.at(l); }

  bool cell_refined(int l, FlatIndex cell) const {
    if (l + 1 >= num_levels()) return false;
    // Sibling groups are complete, so one child decides.
    MultiIndex c = spaces_[l].unflatten_cell(cell);
    for (int h = 0; h < dim(); ++h) c[h] *= 2;
    return in_omega(l + 1, spaces_[l + 1].flatten_cell(c));
  }

  // Cell range of `box` (cells of level `from`) re-indexed at level `to`.
  CellBox scale_box(const CellBox& box, int from, int to) const {
    if (to < from) throw std::invalid_argument("DomainHierarchy: bad level pair");
    const int f = 1 << (to - from);
    CellBox out;
    for (int h = 0; h < box.dim(); ++h) {
      out.lo.push_back(box.lo[h] * f);
      out.hi.push_back((box.hi[h] + 1) * f - 1);
    }
    return out;
  }

  // Whether every level-`omega_level` cell under `cells` (given at level
  // `cell_level` <= omega_level) belongs to Omega^{omega_level}.
  bool box_in_omega(int cell_level, const CellBox& cells, int omega_level) const {
    if (omega_level >= num_levels()) return false;
    if (omega_level == 0) return true;  // level 0 covers the whole grid
    const CellBox b = scale_box(cells, cell_level, omega_level);
    const TensorSpace& sp = spaces_[omega_level];
    MultiIndex c = b.lo;
    while (true) {
      if (!in_omega(omega_level, sp.flatten_cell(c))) return false;
      int h = dim() - 1;
      while (h >= 0) {
        if (++c[h] <= b.hi[h]) break;
        c[h] = b.lo[h];
        --h;
      }
      if (h < 0) return true;
    }
  }

  // True if the closed support of basis function (l, j) lies in
  // Omega^{omega_level}.
  bool support_in_omega(int l, const MultiIndex& j, int omega_level) const {
    return box_in_omega(l, spaces_[l].support_cells(j), omega_level);
  }

  // New hierarchy with the given cells split into their dyadic children;
  // split[l] lists level-l cells, which must belong to Omega^l. Cells that
  // are already refined are left alone. A new level is appended when
  // children land beyond the current deepest level.
  DomainHierarchy refined(const std::vector<std::vector<FlatIndex>>& split) const {
    if (static_cast<int>(split.size()) > num_levels())
      throw std::invalid_argument("DomainHierarchy: split level beyond hierarchy");
    std::vector<TensorSpace> spaces = spaces_;
    std::vector<std::vector<FlatIndex>> omegas = omega_sorted_;
    for (int l = 0; l < static_cast<int>(split.size()); ++l) {
      if (split[l].empty()) continue;
      if (l + 1 == static_cast<int>(spaces.size())) {
        spaces.push_back(spaces.back().dyadic_refine());
        omegas.emplace_back();
      }
      std::unordered_set<FlatIndex> next(omegas[l + 1].begin(), omegas[l + 1].end());
      const TensorSpace& coarse = spaces[l];
      const TensorSpace& fine = spaces[l + 1];
      for (FlatIndex cell : split[l]) {
        if (!std::binary_search(omegas[l].begin(), omegas[l].end(), cell))
          throw std::invalid_argument("DomainHierarchy: splitting a cell outside its level");
        MultiIndex c = coarse.unflatten_cell(cell);
        MultiIndex child(dim());
        const int corners = 1 << dim();
        for (int bits = 0; bits < corners; ++bits) {
          for (int h = 0; h < dim(); ++h) child[h] = 2 * c[h] + ((bits >> h) & 1);
          next.insert(fine.flatten_cell(child));
        }
      }
      omegas[l + 1].assign(next.begin(), next.end());
      std::sort(omegas[l + 1].begin(), omegas[l + 1].end());
    }
    if (omegas.size() > 1 && omegas.back().empty()) {
      omegas.pop_back();
      spaces.pop_back();
    }
    return DomainHierarchy(std::move(spaces), std::move(omegas));
  }

private:
  void rebuild_lookup() {
    lookup_.clear();
    for (const auto& om : omega_sorted_)
      lookup_.emplace_back(om.begin(), om.end());
  }

  void validate_nesting() const {
    for (int l = 1; l < num_levels(); ++l) {
      const TensorSpace& fine = spaces_[l];
      const TensorSpace& coarse = spaces_[l - 1];
      for (FlatIndex cell : omega_sorted_[l]) {
        MultiIndex c = fine.unflatten_cell(cell);
        MultiIndex parent(dim()), sibling(dim());
        for (int h = 0; h < dim(); ++h) parent[h] = c[h] / 2;
        if (!in_omega(l - 1, coarse.flatten_cell(parent)))
          throw std::invalid_argument("DomainHierarchy: non-nested cell collections");
        const int corners = 1 << dim();
        for (int bits = 0; bits < corners; ++bits) {
          for (int h = 0; h < dim(); ++h) sibling[h] = 2 * parent[h] + ((bits >> h) & 1);
          if (!in_omega(l, fine.flatten_cell(sibling)))
            throw std::invalid_argument("DomainHierarchy: incomplete sibling group");
        }
      }
    }
  }

  std::vector<TensorSpace> spaces_;
  std::vector<std::vector<FlatIndex>> omega_sorted_;
  std::vector<std::unordered_set<FlatIndex>> lookup_;
};

// Active basis functions per level: support inside Omega^l but not inside
// Omega^{l+1}.
struct ActiveSet {
  std::vector<std::vector<FlatIndex>> per_level;  // sorted flat indices
  std::vector<std::unordered_set<FlatIndex>> lookup;

  bool contains(int l, FlatIndex j) const {
    return l < static_cast<int>(lookup.size()) && lookup[l].count(j) != 0;
  }
  FlatIndex total() const {
    FlatIndex n = 0;
    for (const auto& v : per_level) n += static_cast<FlatIndex>(v.size());
    return n;
  }
};

inline ActiveSet compute_active_sets(const DomainHierarchy& h) {
  ActiveSet as;
  const int r = h.dim();
  for (int l = 0; l < h.num_levels(); ++l) {
    const TensorSpace& sp = h.space(l);
    // Candidates: functions not identically zero on some Omega^l cell.
    std::unordered_set<FlatIndex> seen;
    std::vector<FlatIndex> act;
    MultiIndex j(r);
    for (FlatIndex cell : h.omega_sorted(l)) {
      const MultiIndex c = sp.unflatten_cell(cell);
      // Per-direction nonzero index range on this cell.
      MultiIndex lo(r), hi(r);
      for (int hh = 0; hh < r; ++hh) {
        const int span = sp.kv(hh).span_for_cell(c[hh]);
        lo[hh] = span - sp.degree(hh);
        hi[hh] = span;
      }
      j = lo;
      while (true) {
        const FlatIndex fj = sp.flatten(j);
        if (seen.insert(fj).second) {
          if (h.support_in_omega(l, j, l) && !h.support_in_omega(l, j, l + 1))
            act.push_back(fj);
        }
        int hh = r - 1;
        while (hh >= 0) {
          if (++j[hh] <= hi[hh]) break;
          j[hh] = lo[hh];
          --hh;
        }
        if (hh < 0) break;
      }
    }
    std::sort(act.begin(), act.end());
    as.per_level.push_back(std::move(act));
  }
  for (const auto& v : as.per_level) as.lookup.emplace_back(v.begin(), v.end());
  return as;
}

// Active cells per level (cells of Omega^l not covered by Omega^{l+1});
// they tile the initial domain.
struct HierarchicalMesh {
  std::vector<std::vector<FlatIndex>> active_cells;  // sorted per level
};

inline HierarchicalMesh compute_mesh(const DomainHierarchy& h) {
  HierarchicalMesh mesh;
  for (int l = 0; l < h.num_levels(); ++l) {
    std::vector<FlatIndex> act;
    for (FlatIndex cell : h.omega_sorted(l))
      if (!h.cell_refined(l, cell)) act.push_back(cell);
    mesh.active_cells.push_back(std::move(act));
  }
  return mesh;
}

// One truncation step: zero every level-`level` coefficient whose basis
// function has support inside Omega^{level}.
inline SplineCoeffs truncate_once(const DomainHierarchy& h, int level, SplineCoeffs s) {
  const TensorSpace& sp = h.space(level);
  if (static_cast<FlatIndex>(s.values.size()) != sp.num_basis_total())
    throw std::invalid_argument("truncate_once: coefficient count mismatch");
  for (FlatIndex f = 0; f < sp.num_basis_total(); ++f) {
    if (s.at(f) == 0.0) continue;
    if (h.support_in_omega(level, sp.unflatten(f), level)) s.at(f) = 0.0;
  }
  return s;
}

}  // namespace thbfit
