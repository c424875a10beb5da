#pragma once

// Truncated hierarchical basis machinery. Every evaluation goes through
// per-active-cell stencils: walking the levels from the coarsest one down
// to an active cell while re-expressing the accumulated coefficients in
// the next finer space, zeroing entries whose basis functions have
// support inside the next cell collection (truncation), and adding that
// level's own active coefficients. On one active cell only the
// prod_h (degree_h + 1) functions of its level that are nonzero there
// matter, and their two-scale sources never leave the matching window
// around the coarser ancestor cell, so each walk stays local.

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

#include "thbfit/hierarchy.hpp"

namespace thbfit {

namespace detail {

// Per-direction first basis index of the window of functions that are
// nonzero on a given cell; window extent is degree+1 per direction.
inline MultiIndex window_lo(const TensorSpace& sp, const MultiIndex& cell) {
  MultiIndex lo(sp.dim());
  for (int h = 0; h < sp.dim(); ++h)
    lo[h] = sp.kv(h).span_for_cell(cell[h]) - sp.degree(h);
  return lo;
}

inline FlatIndex window_size(const TensorSpace& sp) {
  FlatIndex n = 1;
  for (int h = 0; h < sp.dim(); ++h) n *= sp.degree(h) + 1;
  return n;
}

// Memoized "support of (level, j) lies inside Omega^level" queries; the
// windows of neighbouring cells overlap, so results are shared per build.
class TruncationMemo {
public:
  explicit TruncationMemo(const DomainHierarchy& h) : h_(&h), memo_(h.num_levels()) {}

  bool truncated(int level, FlatIndex j) {
    auto& m = memo_[level];
    auto it = m.find(j);
    if (it != m.end()) return it->second;
    const bool t = h_->support_in_omega(level, h_->space(level).unflatten(j), level);
    m.emplace(j, t);
    return t;
  }

private:
  const DomainHierarchy* h_;
  std::vector<std::unordered_map<FlatIndex, bool>> memo_;
};

using LambdaMap = std::unordered_map<FlatIndex, double>;

// Walk levels `start`..`target`, producing the coefficients, in the fine
// window on `target_cell`, of the truncated representation accumulated
// from `seed` (given in the window on the level-`start` ancestor cell).
// When `lambdas` is given, each level's active coefficients are added on
// arrival; the seed is then expected to be empty at `start` as well.
inline std::vector<double> walk_to_cell(const DomainHierarchy& h, int start, int target,
                                        const MultiIndex& target_cell,
                                        std::vector<double> seed,
                                        const std::vector<LambdaMap>* lambdas,
                                        TruncationMemo& memo) {
  const int r = h.dim();

  // Ancestor cells of target_cell at each level in [start, target].
  std::vector<MultiIndex> anc(target - start + 1);
  for (int q = target; q >= start; --q) {
    anc[q - start].resize(r);
    for (int hh = 0; hh < r; ++hh) anc[q - start][hh] = target_cell[hh] >> (target - q);
  }

  std::vector<double> w = std::move(seed);
  MultiIndex lo = window_lo(h.space(start), anc[0]);

  auto add_level_lambdas = [&](int q, const MultiIndex& wlo, std::vector<double>& vals) {
    const TensorSpace& sp = h.space(q);
    const LambdaMap& lm = (*lambdas)[q];
    if (lm.empty()) return;
    MultiIndex j(r);
    FlatIndex pos = 0;
    // Row major iteration over the window.
    std::vector<int> off(r, 0);
    while (true) {
      for (int hh = 0; hh < r; ++hh) j[hh] = wlo[hh] + off[hh];
      auto it = lm.find(sp.flatten(j));
      if (it != lm.end()) vals[static_cast<std::size_t>(pos)] += it->second;
      ++pos;
      int hh = r - 1;
      while (hh >= 0) {
        if (++off[hh] <= h.space(q).degree(hh)) break;
        off[hh] = 0;
        --hh;
      }
      if (hh < 0) break;
    }
  };

  if (lambdas) add_level_lambdas(start, lo, w);

  for (int q = start + 1; q <= target; ++q) {
    const TensorSpace& coarse = h.space(q - 1);
    const TensorSpace& fine = h.space(q);
    const MultiIndex flo = window_lo(fine, anc[q - start]);

    // Apply the per-direction insertion matrices axis by axis.
    for (int hh = 0; hh < r; ++hh) {
      const int n = coarse.degree(hh) + 1;
      // n x n local insertion matrix: row = fine window offset, col = coarse.
      std::vector<double> t(static_cast<std::size_t>(n) * n, 0.0);
      for (int kk = 0; kk < n; ++kk) {
        const InsertionRow row = insertion_row(coarse.kv(hh), fine.kv(hh), flo[hh] + kk);
        for (int a = 0; a < n; ++a) {
          const int i = row.first + a;
          if (i >= lo[hh] && i < lo[hh] + n) t[static_cast<std::size_t>(kk) * n + (i - lo[hh])] = row.alpha[a];
        }
      }
      // Transform axis hh of the window tensor (all extents are n... per
      // direction extents differ only by degree; handled via strides).
      FlatIndex outer = 1, inner = 1;
      for (int g = 0; g < hh; ++g) outer *= coarse.degree(g) + 1;
      for (int g = hh + 1; g < r; ++g) inner *= coarse.degree(g) + 1;
      std::vector<double> next(w.size(), 0.0);
      for (FlatIndex o = 0; o < outer; ++o)
        for (FlatIndex q2 = 0; q2 < inner; ++q2)
          for (int kk = 0; kk < n; ++kk) {
            double s = 0.0;
            for (int ii = 0; ii < n; ++ii)
              s += t[static_cast<std::size_t>(kk) * n + ii] *
                   w[static_cast<std::size_t>((o * n + ii) * inner + q2)];
            next[static_cast<std::size_t>((o * n + kk) * inner + q2)] = s;
          }
      w = std::move(next);
    }

    // Truncation: drop every fine function whose support is inside Omega^q.
    {
      MultiIndex j(r);
      std::vector<int> off(r, 0);
      FlatIndex pos = 0;
      while (true) {
        if (w[static_cast<std::size_t>(pos)] != 0.0) {
          for (int hh = 0; hh < r; ++hh) j[hh] = flo[hh] + off[hh];
          if (memo.truncated(q, fine.flatten(j))) w[static_cast<std::size_t>(pos)] = 0.0;
        }
        ++pos;
        int hh = r - 1;
        while (hh >= 0) {
          if (++off[hh] <= fine.degree(hh)) break;
          off[hh] = 0;
          --hh;
        }
        if (hh < 0) break;
      }
    }

    if (lambdas) add_level_lambdas(q, flo, w);
    lo = flo;
  }
  return w;
}

// All active cells contained in the support of the active function
// (level, j), as (cell level, flat cell) pairs in deterministic order.
inline std::vector<std::pair<int, FlatIndex>> active_cells_in_support(
    const DomainHierarchy& h, int level, const MultiIndex& j) {
  std::vector<std::pair<int, FlatIndex>> out;
  const CellBox cb = h.space(level).support_cells(j);
  std::vector<std::pair<int, FlatIndex>> stack;
  MultiIndex c = cb.lo;
  while (true) {
    stack.emplace_back(level, h.space(level).flatten_cell(c));
    int hh = h.dim() - 1;
    while (hh >= 0) {
      if (++c[hh] <= cb.hi[hh]) break;
      c[hh] = cb.lo[hh];
      --hh;
    }
    if (hh < 0) break;
  }
  while (!stack.empty()) {
    auto [l, cell] = stack.back();
    stack.pop_back();
    if (!h.in_omega(l, cell)) continue;  // support may poke outside deeper sets
    if (!h.cell_refined(l, cell)) {
      out.emplace_back(l, cell);
      continue;
    }
    MultiIndex cm = h.space(l).unflatten_cell(cell);
    MultiIndex child(h.dim());
    const int corners = 1 << h.dim();
    for (int bits = 0; bits < corners; ++bits) {
      for (int hh2 = 0; hh2 < h.dim(); ++hh2) child[hh2] = 2 * cm[hh2] + ((bits >> hh2) & 1);
      stack.emplace_back(l + 1, h.space(l + 1).flatten_cell(child));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Locate the unique active cell whose (right-continuous) piece governs x.
inline std::pair<int, FlatIndex> locate_active_cell(const DomainHierarchy& h,
                                                    const std::vector<double>& x) {
  MultiIndex c = h.space(0).cell_of_point(x);
  int l = 0;
  while (h.cell_refined(l, h.space(l).flatten_cell(c))) {
    const TensorSpace& fine = h.space(l + 1);
    for (int hh = 0; hh < h.dim(); ++hh) {
      const double mid = fine.kv(hh).breakpoints()[2 * c[hh] + 1];
      c[hh] = 2 * c[hh] + (x[hh] < mid ? 0 : 1);
    }
    ++l;
  }
  return {l, h.space(l).flatten_cell(c)};
}

// Values of the window basis functions of level l on cell `cm` at x, in
// window row major order.
inline void window_basis_values(const TensorSpace& sp, const MultiIndex& cm,
                                const std::vector<double>& x, std::vector<double>& out) {
  const int r = sp.dim();
  std::array<std::array<double, kMaxDegree + 1>, 8> uni{};
  if (r > 8) throw std::invalid_argument("window_basis_values: dimension too large");
  for (int h = 0; h < r; ++h)
    sp.kv(h).basis_values(sp.kv(h).span_for_cell(cm[h]), x[h], uni[h].data());
  FlatIndex total = window_size(sp);
  out.assign(static_cast<std::size_t>(total), 0.0);
  std::vector<int> off(r, 0);
  FlatIndex pos = 0;
  while (true) {
    double v = 1.0;
    for (int h = 0; h < r; ++h) v *= uni[h][off[h]];
    out[static_cast<std::size_t>(pos)] = v;
    ++pos;
    int h = r - 1;
    while (h >= 0) {
      if (++off[h] <= sp.degree(h)) break;
      off[h] = 0;
      --h;
    }
    if (h < 0) break;
  }
}

}  // namespace detail

// A single truncated basis function, cached as stencils on the active
// cells inside its support; zero everywhere else.
class TruncatedFunction {
public:
  TruncatedFunction(std::shared_ptr<const DomainHierarchy> h, int level, FlatIndex j)
      : h_(std::move(h)), level_(level), j_(j) {
    const TensorSpace& sp = h_->space(level_);
    const MultiIndex jm = sp.unflatten(j_);
    detail::TruncationMemo memo(*h_);
    for (auto [cl, cell] : detail::active_cells_in_support(*h_, level_, jm)) {
      const MultiIndex cm = h_->space(cl).unflatten_cell(cell);
      // Seed: unit coefficient at j in the window on the level-`level_`
      // ancestor of the target cell.
      MultiIndex anc(cm.size());
      for (std::size_t hh = 0; hh < cm.size(); ++hh) anc[hh] = cm[hh] >> (cl - level_);
      const MultiIndex lo = detail::window_lo(sp, anc);
      std::vector<double> seed(static_cast<std::size_t>(detail::window_size(sp)), 0.0);
      FlatIndex pos = 0;
      bool inside = true;
      for (std::size_t hh = 0; hh < cm.size(); ++hh) {
        const int o = jm[hh] - lo[hh];
        if (o < 0 || o > sp.degree(static_cast<int>(hh))) {
          inside = false;
          break;
        }
        pos = pos * (sp.degree(static_cast<int>(hh)) + 1) + o;
      }
      if (!inside) continue;
      seed[static_cast<std::size_t>(pos)] = 1.0;
      stencils_[key(cl, cell)] =
          detail::walk_to_cell(*h_, level_, cl, cm, std::move(seed), nullptr, memo);
    }
  }

  int level() const { return level_; }
  FlatIndex index() const { return j_; }

  double eval(const std::vector<double>& x) const {
    auto [l, cell] = detail::locate_active_cell(*h_, x);
    auto it = stencils_.find(key(l, cell));
    if (it == stencils_.end()) return 0.0;
    std::vector<double> bv;
    detail::window_basis_values(h_->space(l), h_->space(l).unflatten_cell(cell), x, bv);
    double s = 0.0;
    for (std::size_t i = 0; i < bv.size(); ++i) s += bv[i] * it->second[i];
    return s;
  }

private:
  static std::uint64_t key(int l, FlatIndex cell) {
    return (static_cast<std::uint64_t>(l) << 56) | static_cast<std::uint64_t>(cell);
  }

  std::shared_ptr<const DomainHierarchy> h_;
  int level_;
  FlatIndex j_;
  std::unordered_map<std::uint64_t, std::vector<double>> stencils_;
};

inline TruncatedFunction build_truncated(std::shared_ptr<const DomainHierarchy> h, int level,
                                         FlatIndex j) {
  const MultiIndex jm = h->space(level).unflatten(j);
  if (!h->support_in_omega(level, jm, level) || h->support_in_omega(level, jm, level + 1))
    throw std::invalid_argument("build_truncated: function is not active");
  return TruncatedFunction(std::move(h), level, j);
}

// Linear combination of the truncated hierarchical basis with one
// coefficient per active function (coefficients may be missing for
// functions excluded from a fit; those contribute zero).
class QuasiInterpolant {
public:
  QuasiInterpolant(std::shared_ptr<const DomainHierarchy> h, ActiveSet active,
                   std::vector<detail::LambdaMap> lambdas)
      : h_(std::move(h)), active_(std::move(active)), lambdas_(std::move(lambdas)) {
    if (static_cast<int>(lambdas_.size()) != h_->num_levels())
      throw std::invalid_argument("QuasiInterpolant: one coefficient map per level required");
    for (int l = 0; l < h_->num_levels(); ++l)
      for (const auto& [j, v] : lambdas_[l])
        if (!active_.contains(l, j))
          throw std::invalid_argument("QuasiInterpolant: coefficient on inactive function");
    build_stencils();
  }

  const DomainHierarchy& hierarchy() const { return *h_; }
  std::shared_ptr<const DomainHierarchy> hierarchy_ptr() const { return h_; }
  const ActiveSet& active() const { return active_; }
  const std::vector<detail::LambdaMap>& lambdas() const { return lambdas_; }

  FlatIndex num_dof() const {
    FlatIndex n = 0;
    for (const auto& lm : lambdas_) n += static_cast<FlatIndex>(lm.size());
    return n;
  }

  double eval(const std::vector<double>& x) const {
    auto [l, cell] = detail::locate_active_cell(*h_, x);
    const auto& st = stencils_[l].at(cell);
    std::vector<double> bv;
    detail::window_basis_values(h_->space(l), h_->space(l).unflatten_cell(cell), x, bv);
    double s = 0.0;
    for (std::size_t i = 0; i < bv.size(); ++i) s += bv[i] * st[i];
    return s;
  }

private:
  void build_stencils() {
    stencils_.assign(h_->num_levels(), {});
    detail::TruncationMemo memo(*h_);
    const HierarchicalMesh mesh = compute_mesh(*h_);
    for (int l = 0; l < h_->num_levels(); ++l) {
      for (FlatIndex cell : mesh.active_cells[l]) {
        const MultiIndex cm = h_->space(l).unflatten_cell(cell);
        std::vector<double> seed(
            static_cast<std::size_t>(detail::window_size(h_->space(0))), 0.0);
        stencils_[l].emplace(cell, detail::walk_to_cell(*h_, 0, l, cm, std::move(seed),
                                                        &lambdas_, memo));
      }
    }
  }

  std::shared_ptr<const DomainHierarchy> h_;
  ActiveSet active_;
  std::vector<detail::LambdaMap> lambdas_;
  std::vector<std::unordered_map<FlatIndex, std::vector<double>>> stencils_;
};

// Quasi-interpolant evaluation: the fitted surface value at x.
inline double eval_qi(const QuasiInterpolant& qi, const std::vector<double>& x) {
  return qi.eval(x);
}

// Exact re-expression of a coarse (level 0) spline in the truncated
// hierarchical basis of a hierarchy over the same initial space: each
// active function takes the coefficient of s at its own level. The result
// reproduces s everywhere.
inline QuasiInterpolant represent_in_thb(std::shared_ptr<const DomainHierarchy> h,
                                         const SplineCoeffs& s0) {
  const DomainHierarchy& h_ref = *h;
  if (static_cast<FlatIndex>(s0.values.size()) != h_ref.space(0).num_basis_total())
    throw std::invalid_argument("represent_in_thb: coefficient count mismatch");
  ActiveSet active = compute_active_sets(h_ref);
  std::vector<detail::LambdaMap> lambdas(h_ref.num_levels());
  SplineCoeffs level_rep = s0;
  for (int l = 0; l < h_ref.num_levels(); ++l) {
    if (l > 0) level_rep = two_scale(h_ref.space(l - 1), h_ref.space(l), level_rep);
    for (FlatIndex j : active.per_level[l]) lambdas[l].emplace(j, level_rep.at(j));
  }
  return QuasiInterpolant(std::move(h), std::move(active), std::move(lambdas));
}

}  // namespace thbfit
