#pragma once

// Error driven adaptive fitting loop. Each pass evaluates the current
// fit at every data point, marks the active functions whose supports
// contain points above tolerance, dyadically splits all active cells
// inside the marked supports, and computes coefficients for functions
// that just became active. Coefficients of functions that stay active
// are never recomputed, so reruns and thread counts cannot change them.

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <stdexcept>
#include <thread>
#include <vector>

#include "thbfit/dataset.hpp"
#include "thbfit/domain.hpp"
#include "thbfit/localfit.hpp"
#include "thbfit/thb.hpp"

namespace thbfit {

struct FitConfig {
  std::vector<int> degrees;
  double eps = 1e-3;    // pointwise error tolerance
  double sigma = 1e-6;  // smallest singular value gate for local fits
  int max_levels = 2;   // hard cap on the number of levels
  std::vector<std::vector<double>> initial_breakpoints;  // per direction
  GuardConfig guard;
  int threads = 1;

  void validate() const {
    if (degrees.empty()) throw std::invalid_argument("FitConfig: no degrees");
    for (int d : degrees)
      if (d < 0 || d > kMaxDegree) throw std::invalid_argument("FitConfig: bad degree");
    if (!(eps > 0.0)) throw std::invalid_argument("FitConfig: eps must be positive");
    if (!(sigma > 0.0 && sigma <= 1.0))
      throw std::invalid_argument("FitConfig: sigma must be in (0, 1]");
    if (max_levels < 2) throw std::invalid_argument("FitConfig: max_levels must be >= 2");
    if (initial_breakpoints.size() != degrees.size())
      throw std::invalid_argument("FitConfig: breakpoints/degrees dimension mismatch");
    for (std::size_t h = 0; h < degrees.size(); ++h) {
      const auto& b = initial_breakpoints[h];
      if (static_cast<int>(b.size()) < degrees[h] + 2)
        throw std::invalid_argument(
            "FitConfig: initial mesh needs at least degree+1 cells per direction");
      for (std::size_t i = 0; i + 1 < b.size(); ++i)
        if (!(b[i] < b[i + 1]))
          throw std::invalid_argument("FitConfig: breakpoints must be increasing");
    }
    if (threads < 1) throw std::invalid_argument("FitConfig: threads must be >= 1");
  }

  TensorSpace initial_space() const {
    std::vector<KnotVector> kvs;
    for (std::size_t h = 0; h < degrees.size(); ++h) {
      std::vector<double> knots;
      for (int i = 0; i <= degrees[h]; ++i) knots.push_back(initial_breakpoints[h].front());
      for (std::size_t i = 1; i + 1 < initial_breakpoints[h].size(); ++i)
        knots.push_back(initial_breakpoints[h][i]);
      for (int i = 0; i <= degrees[h]; ++i) knots.push_back(initial_breakpoints[h].back());
      kvs.emplace_back(std::move(knots), degrees[h]);
    }
    return TensorSpace(std::move(kvs), 0);
  }
};

// Half diagonal of the support box of one basis function.
inline double support_radius(const TensorSpace& sp, const MultiIndex& j) {
  double diag2 = 0.0;
  for (int h = 0; h < sp.dim(); ++h) {
    const double w = sp.kv(h).support_end(j[h]) - sp.kv(h).support_begin(j[h]);
    diag2 += w * w;
  }
  return 0.5 * std::sqrt(diag2);
}

// Largest support radius over every basis function of the space: the
// per-direction maxima are attained independently.
inline double max_support_radius(const TensorSpace& sp) {
  double diag2 = 0.0;
  for (int h = 0; h < sp.dim(); ++h) {
    const KnotVector& kv = sp.kv(h);
    double wmax = 0.0;
    for (int i = 0; i < kv.num_basis(); ++i)
      wmax = std::max(wmax, kv.support_end(i) - kv.support_begin(i));
    diag2 += wmax * wmax;
  }
  return 0.5 * std::sqrt(diag2);
}

// Coarsened companion of the start space used to size the very first
// search balls: cells merged pairwise per direction (an odd trailing cell
// joins its neighbour), then re-partitioned uniformly into degree+1 cells
// if fewer remain.
inline TensorSpace auxiliary_space(const TensorSpace& v0) {
  std::vector<KnotVector> kvs;
  for (int h = 0; h < v0.dim(); ++h) {
    const auto& bp = v0.kv(h).breakpoints();
    const int n = static_cast<int>(bp.size()) - 1;
    std::vector<double> merged;
    for (int i = 0; i + 2 <= n; i += 2) merged.push_back(bp[i]);
    merged.push_back(bp[n]);
    const int d = v0.degree(h);
    if (static_cast<int>(merged.size()) - 1 < d + 1) {
      merged.clear();
      for (int i = 0; i <= d + 1; ++i)
        merged.push_back(bp[0] + (bp[n] - bp[0]) * i / (d + 1));
      merged.front() = bp[0];
      merged.back() = bp[n];
    }
    std::vector<double> knots;
    for (int i = 0; i <= d; ++i) knots.push_back(merged.front());
    for (std::size_t i = 1; i + 1 < merged.size(); ++i) knots.push_back(merged[i]);
    for (int i = 0; i <= d; ++i) knots.push_back(merged.back());
    kvs.emplace_back(std::move(knots), d);
  }
  return TensorSpace(std::move(kvs), 0);
}

// Search ball growth cap for one function: how often the ball may be
// enlarged before the fit gives up, sized so that the enlarged ball
// reaches past the coarser level's largest support radius.
inline int kj_schedule(double delta_prev, double rho) {
  if (!(delta_prev > 0.0) || !(rho > 0.0))
    throw std::invalid_argument("kj_schedule: radii must be positive");
  return static_cast<int>(std::ceil(2.0 * delta_prev / rho)) + 1;
}

struct ErrorReport {
  std::vector<double> e;
  double e_max = 0.0;
  double e_rms = 0.0;
};

inline ErrorReport compute_errors(const QuasiInterpolant& qi, const ScatteredDataset& data) {
  ErrorReport rep;
  rep.e.resize(data.size());
  double sum2 = 0.0;
  for (int i = 0; i < data.size(); ++i) {
    const double err = std::abs(qi.eval(data.point(i)) - data.value(i));
    rep.e[i] = err;
    rep.e_max = std::max(rep.e_max, err);
    sum2 += err * err;
  }
  rep.e_rms = std::sqrt(sum2 / data.size());
  return rep;
}

struct MarkedSet {
  std::vector<std::vector<FlatIndex>> per_level;  // sorted
  bool empty() const {
    for (const auto& v : per_level)
      if (!v.empty()) return false;
    return true;
  }
};

// Functions carrying a coefficient whose closed support contains a point
// with error above eps.
inline MarkedSet mark(const QuasiInterpolant& qi, const ScatteredDataset& data,
                      const ErrorReport& err, double eps) {
  const DomainHierarchy& h = qi.hierarchy();
  const int r = h.dim();
  MarkedSet m;
  m.per_level.resize(h.num_levels());
  std::vector<std::unordered_set<FlatIndex>> seen(h.num_levels());
  for (int i = 0; i < data.size(); ++i) {
    if (!(err.e[i] > eps)) continue;
    const std::vector<double> x = data.point(i);
    for (int l = 0; l < h.num_levels(); ++l) {
      const TensorSpace& sp = h.space(l);
      const auto& lm = qi.lambdas()[l];
      if (lm.empty()) continue;
      // Closed support containment: on a knot both adjacent windows count.
      MultiIndex lo(r), hi(r);
      bool in_domain = true;
      for (int hh = 0; hh < r; ++hh) {
        const KnotVector& kv = sp.kv(hh);
        if (x[hh] < kv.domain_min() || x[hh] > kv.domain_max()) {
          in_domain = false;
          break;
        }
        const int right = kv.find_span(x[hh]);
        const int left = x[hh] == kv.domain_min() ? right : kv.find_span_left(x[hh]);
        lo[hh] = left - sp.degree(hh);
        hi[hh] = right;
      }
      if (!in_domain) continue;
      MultiIndex j = lo;
      while (true) {
        bool valid = true;
        for (int hh = 0; hh < r; ++hh)
          if (j[hh] < 0 || j[hh] >= sp.num_basis(hh)) {
            valid = false;
            break;
          }
        if (valid) {
          const FlatIndex fj = sp.flatten(j);
          if (lm.count(fj) && seen[l].insert(fj).second) m.per_level[l].push_back(fj);
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
  }
  for (auto& v : m.per_level) std::sort(v.begin(), v.end());
  return m;
}

// Split, for each marked function, the active cells of its own level
// inside its support. Finer active cells inside the support are already
// smaller than the marked scale and stay; this keeps every newly
// activated function exactly one level above the mark that created it,
// which is what guarantees its data search reaches the point that
// triggered the refinement. Marking nothing returns the hierarchy
// unchanged.
inline DomainHierarchy refine(const DomainHierarchy& h, const MarkedSet& marked) {
  std::vector<std::vector<FlatIndex>> split(h.num_levels());
  std::vector<std::unordered_set<FlatIndex>> seen(h.num_levels());
  for (int l = 0; l < static_cast<int>(marked.per_level.size()); ++l) {
    for (FlatIndex j : marked.per_level[l]) {
      const TensorSpace& sp = h.space(l);
      const CellBox cells = sp.support_cells(sp.unflatten(j));
      MultiIndex c = cells.lo;
      while (true) {
        const FlatIndex fc = sp.flatten_cell(c);
        if (h.in_omega(l, fc) && !h.cell_refined(l, fc) && seen[l].insert(fc).second)
          split[l].push_back(fc);
        int hh = h.dim() - 1;
        while (hh >= 0) {
          if (++c[hh] <= cells.hi[hh]) break;
          c[hh] = cells.lo[hh];
          --hh;
        }
        if (hh < 0) break;
      }
    }
  }
  for (auto& v : split) std::sort(v.begin(), v.end());
  return h.refined(split);
}

enum class FitStatus { converged, failure_initial_lambda, failure_max_levels };

inline const char* to_string(FitStatus s) {
  switch (s) {
    case FitStatus::converged: return "converged";
    case FitStatus::failure_initial_lambda: return "failure_initial_lambda";
    case FitStatus::failure_max_levels: return "failure_max_levels";
  }
  return "unknown";
}

struct IterationReport {
  int num_levels = 0;
  std::vector<int> finest_elements;  // per-direction cell counts, finest level
  FlatIndex ndof = 0;
  double e_max = 0.0;
  double e_rms = 0.0;
  std::vector<FlatIndex> degree_counts;  // by local fit degree, current dofs
};

struct FitOutcome {
  FitStatus status = FitStatus::converged;
  std::optional<QuasiInterpolant> qi;  // absent only on failure_initial_lambda
  std::vector<IterationReport> reports;
  std::vector<FlatIndex> all_fit_degree_counts;  // every local fit computed
  std::vector<std::unordered_map<FlatIndex, LocalFitResult>> fits;  // per level
};

namespace detail {

struct PendingFit {
  int level;
  FlatIndex j;
};

}  // namespace detail

inline FitOutcome fit_adaptive(const ScatteredDataset& data, const FitConfig& cfg,
                               const DomainSpec* domain = nullptr) {
  cfg.validate();
  const int r = static_cast<int>(cfg.degrees.size());
  if (data.dim() != r) throw std::invalid_argument("fit_adaptive: dimension mismatch");
  if (domain) domain->validate();

  auto h = std::make_shared<const DomainHierarchy>(cfg.initial_space());
  {
    const Box dom = h->space(0).domain();
    for (int i = 0; i < data.size(); ++i)
      if (!dom.contains(data.point(i)))
        throw std::invalid_argument("fit_adaptive: data point outside the initial mesh");
  }

  // Search structure binned at the coarse cell scale.
  std::vector<double> bin(r);
  for (int hh = 0; hh < r; ++hh) {
    const KnotVector& kv = h->space(0).kv(hh);
    bin[hh] = (kv.domain_max() - kv.domain_min()) / kv.num_cells();
  }
  const SpatialIndex index(data, bin);

  std::vector<double> delta = {max_support_radius(auxiliary_space(h->space(0)))};

  FitOutcome out;
  out.fits.resize(1);
  out.all_fit_degree_counts.clear();

  auto kept = [&](int level, FlatIndex j, const DomainHierarchy& hier) {
    if (!domain) return true;
    return domain->box_has_material(hier.space(level).support_box(hier.space(level).unflatten(j)));
  };
  auto bump = [](std::vector<FlatIndex>& counts, int degree) {
    if (static_cast<int>(counts.size()) <= degree) counts.resize(degree + 1, 0);
    ++counts[degree];
  };

  ActiveSet active = compute_active_sets(*h);
  std::optional<QuasiInterpolant> qi;

  while (true) {
    // Ensure per-level bookkeeping exists and deltas are known.
    while (static_cast<int>(out.fits.size()) < h->num_levels()) out.fits.emplace_back();
    while (static_cast<int>(delta.size()) < h->num_levels() + 1)
      delta.push_back(max_support_radius(h->space(static_cast<int>(delta.size()) - 1)));

    // Fit every active function that has no coefficient yet.
    std::vector<detail::PendingFit> pending;
    for (int l = 0; l < h->num_levels(); ++l)
      for (FlatIndex j : active.per_level[l])
        if (!out.fits[l].count(j) && kept(l, j, *h)) pending.push_back({l, j});

    std::vector<std::optional<LocalFitResult>> slots(pending.size());
    auto run_chunk = [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        const auto [l, j] = pending[i];
        const TensorSpace& sp = h->space(l);
        const MultiIndex jm = sp.unflatten(j);
        const double rho = support_radius(sp, jm);
        const int k_max = kj_schedule(delta[l], rho);
        slots[i] = fit_lambda(sp, jm, index, cfg.sigma, k_max, cfg.guard);
      }
    };
    const int nthreads = std::min<std::size_t>(cfg.threads, std::max<std::size_t>(pending.size(), 1));
    if (nthreads <= 1) {
      run_chunk(0, pending.size());
    } else {
      std::vector<std::thread> pool;
      const std::size_t chunk = (pending.size() + nthreads - 1) / nthreads;
      for (int t = 0; t < nthreads; ++t) {
        const std::size_t b = t * chunk;
        const std::size_t e = std::min(pending.size(), b + chunk);
        if (b < e) pool.emplace_back(run_chunk, b, e);
      }
      for (auto& th : pool) th.join();
    }
    for (std::size_t i = 0; i < pending.size(); ++i) {
      if (!slots[i]) {
        // Only reachable on the start level: deeper searches always reach
        // the data that triggered the refinement.
        out.status = FitStatus::failure_initial_lambda;
        out.qi.reset();
        return out;
      }
      auto ins = out.fits[pending[i].level].emplace(pending[i].j, std::move(*slots[i]));
      bump(out.all_fit_degree_counts, ins.first->second.degree);
    }

    // Assemble the current fit.
    std::vector<detail::LambdaMap> lambdas(h->num_levels());
    for (int l = 0; l < h->num_levels(); ++l)
      for (FlatIndex j : active.per_level[l]) {
        auto it = out.fits[l].find(j);
        if (it != out.fits[l].end()) lambdas[l].emplace(j, it->second.lambda);
      }
    qi.emplace(h, active, std::move(lambdas));

    const ErrorReport err = compute_errors(*qi, data);
    IterationReport rep;
    rep.num_levels = h->num_levels();
    for (int hh = 0; hh < r; ++hh)
      rep.finest_elements.push_back(h->space(h->num_levels() - 1).num_cells(hh));
    rep.ndof = qi->num_dof();
    rep.e_max = err.e_max;
    rep.e_rms = err.e_rms;
    for (int l = 0; l < h->num_levels(); ++l)
      for (FlatIndex j : active.per_level[l]) {
        auto it = out.fits[l].find(j);
        if (it != out.fits[l].end()) bump(rep.degree_counts, it->second.degree);
      }
    out.reports.push_back(rep);

    if (err.e_max <= cfg.eps) {
      out.status = FitStatus::converged;
      out.qi = std::move(qi);
      return out;
    }

    const MarkedSet marked = mark(*qi, data, err, cfg.eps);
    DomainHierarchy refined_h = refine(*h, marked);
    if (refined_h.num_levels() > cfg.max_levels) {
      out.status = FitStatus::failure_max_levels;
      out.qi = std::move(qi);  // best effort result from the last pass
      return out;
    }
    h = std::make_shared<const DomainHierarchy>(std::move(refined_h));
    active = compute_active_sets(*h);
  }
}

}  // namespace thbfit
