#pragma once

// File formats and run orchestration helpers for the command line tool:
// whitespace separated "x y z" input with duplicate handling, iteration
// report CSVs, surface sampling, mesh and coefficient dumps, an outlier
// cleaning pre-pass, and a key = value config file reader. Numbers are
// written with 17 significant digits wherever round-tripping matters.

#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "thbfit/adaptive.hpp"

namespace thbfit {

enum class DedupMode { error, keep_first, average };

// Everything one tool invocation needs: engine settings plus file
// handling choices.
struct RunConfig {
  FitConfig fit;
  std::optional<DomainSpec> domain;
  DedupMode dedup = DedupMode::error;
  bool clean = false;
  double clean_eps = 0.0;
  int clean_max_levels = 0;
  int surface_res = 0;  // 0 skips surface sampling
  std::string input;
  std::string out_dir = ".";
};

inline DedupMode dedup_from_string(const std::string& s) {
  if (s == "error") return DedupMode::error;
  if (s == "keep-first") return DedupMode::keep_first;
  if (s == "average") return DedupMode::average;
  throw std::invalid_argument("unknown dedup mode: " + s);
}

// Reads scattered 2d samples: one "x y z" triple per line, blank lines
// and lines starting with '#' ignored. Duplicate (x, y) locations are
// resolved by `mode`; DedupMode::error reports the offending line.
inline ScatteredDataset load_xyz(const std::string& path, DedupMode mode = DedupMode::error) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open input file: " + path);
  std::vector<double> coords, values, sums;
  std::vector<int> counts;
  std::map<std::pair<double, double>, std::size_t> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    double x, y, z;
    if (!(ls >> x >> y >> z))
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected three numeric fields");
    std::string extra;
    if (ls >> extra)
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": trailing fields after x y z");
    const auto key = std::make_pair(x, y);
    auto it = seen.find(key);
    if (it == seen.end()) {
      seen.emplace(key, values.size());
      coords.push_back(x);
      coords.push_back(y);
      values.push_back(z);
      sums.push_back(z);
      counts.push_back(1);
    } else {
      switch (mode) {
        case DedupMode::error:
          throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                   ": duplicate point location");
        case DedupMode::keep_first:
          break;
        case DedupMode::average:
          sums[it->second] += z;
          counts[it->second] += 1;
          break;
      }
    }
  }
  if (values.empty()) throw std::runtime_error(path + ": no data points");
  if (mode == DedupMode::average)
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = sums[i] / counts[i];
  return ScatteredDataset(2, std::move(coords), std::move(values));
}

inline void write_xyz(const ScatteredDataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  char buf[128];
  for (int i = 0; i < data.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", data.coord(i, 0), data.coord(i, 1),
                  data.value(i));
    out << buf;
  }
}

// Active functions whose supports carry domain material, per level.
inline std::vector<std::vector<FlatIndex>> trim_basis(const DomainHierarchy& h,
                                                      const ActiveSet& active,
                                                      const DomainSpec& dom) {
  std::vector<std::vector<FlatIndex>> kept(h.num_levels());
  for (int l = 0; l < h.num_levels(); ++l)
    for (FlatIndex j : active.per_level[l])
      if (dom.box_has_material(h.space(l).support_box(h.space(l).unflatten(j))))
        kept[l].push_back(j);
  return kept;
}

struct CleanResult {
  std::optional<ScatteredDataset> data;  // absent when the pre-pass could not fit
  int removed = 0;
};

// Outlier removal pre-pass: fit with a coarse tolerance and a level cap,
// then keep only the points whose error stays within the fit's RMS
// error. A pre-pass that merely runs out of levels still supplies a
// usable surface; only a failed start level aborts.
inline CleanResult clean_outliers(const ScatteredDataset& data, const FitConfig& cfg,
                                  double clean_eps, int clean_max_levels,
                                  const DomainSpec* domain = nullptr) {
  FitConfig pre = cfg;
  pre.eps = clean_eps;
  pre.max_levels = clean_max_levels;
  const FitOutcome outcome = fit_adaptive(data, pre, domain);
  CleanResult res;
  if (outcome.status == FitStatus::failure_initial_lambda) return res;
  const ErrorReport err = compute_errors(*outcome.qi, data);
  std::vector<double> coords, values;
  for (int i = 0; i < data.size(); ++i) {
    if (err.e[i] <= err.e_rms) {
      for (int h = 0; h < data.dim(); ++h) coords.push_back(data.coord(i, h));
      values.push_back(data.value(i));
    } else {
      ++res.removed;
    }
  }
  res.data.emplace(data.dim(), std::move(coords), std::move(values));
  return res;
}

// reports.csv: one row per pass. Elements are the finest level's full
// grid extents; errors use 4 significant digits in scientific form.
inline void export_reports(const FitOutcome& outcome, const std::string& dir) {
  {
    std::ofstream out(dir + "/reports.csv");
    if (!out) throw std::runtime_error("cannot write " + dir + "/reports.csv");
    out << "M,elements,NDOF,e_max,e_RMS\n";
    char buf[160];
    for (const IterationReport& rep : outcome.reports) {
      std::string elems;
      for (std::size_t h = 0; h < rep.finest_elements.size(); ++h) {
        if (h) elems += "x";
        elems += std::to_string(rep.finest_elements[h]);
      }
      std::snprintf(buf, sizeof buf, "%d,%s,%lld,%.3e,%.3e\n", rep.num_levels, elems.c_str(),
                    static_cast<long long>(rep.ndof), rep.e_max, rep.e_rms);
      out << buf;
    }
  }
  {
    std::ofstream out(dir + "/degree_stats.csv");
    if (!out) throw std::runtime_error("cannot write " + dir + "/degree_stats.csv");
    out << "degree,percent\n";
    if (!outcome.reports.empty()) {
      const auto& counts = outcome.reports.back().degree_counts;
      FlatIndex total = 0;
      for (FlatIndex c : counts) total += c;
      char buf[64];
      for (std::size_t d = 0; d < counts.size(); ++d) {
        if (total == 0) break;
        std::snprintf(buf, sizeof buf, "%zu,%.6f\n", d,
                      100.0 * static_cast<double>(counts[d]) / static_cast<double>(total));
        out << buf;
      }
    }
  }
}

// Regular grid of surface samples "x y z"; grid nodes outside the
// trimmed domain get z = nan.
inline void sample_surface(const QuasiInterpolant& qi, const DomainSpec* domain, int res,
                           const std::string& path) {
  if (res < 2) throw std::invalid_argument("sample_surface: resolution must be >= 2");
  if (qi.hierarchy().dim() != 2)
    throw std::invalid_argument("sample_surface: only 2d surfaces are produced");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  const Box dom = qi.hierarchy().space(0).domain();
  char buf[128];
  std::vector<double> x(2);
  for (int i = 0; i < res; ++i) {
    x[0] = dom.lo[0] + (dom.hi[0] - dom.lo[0]) * i / (res - 1);
    for (int k = 0; k < res; ++k) {
      x[1] = dom.lo[1] + (dom.hi[1] - dom.lo[1]) * k / (res - 1);
      if (domain && !domain->contains(x)) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g nan\n", x[0], x[1]);
      } else {
        std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", x[0], x[1], qi.eval(x));
      }
      out << buf;
    }
  }
}

// Text dump of the active cells: level, integer cell coordinates, then
// the lower and upper geometric corners.
inline void dump_mesh(const QuasiInterpolant& qi, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  const DomainHierarchy& h = qi.hierarchy();
  const int r = h.dim();
  out << "# active cells of the hierarchical mesh\n";
  out << "# cell <level>";
  for (int hh = 0; hh < r; ++hh) out << " <i" << hh << ">";
  for (int hh = 0; hh < r; ++hh) out << " <lo" << hh << ">";
  for (int hh = 0; hh < r; ++hh) out << " <hi" << hh << ">";
  out << "\n";
  const HierarchicalMesh mesh = compute_mesh(h);
  char buf[64];
  for (int l = 0; l < h.num_levels(); ++l) {
    for (FlatIndex cell : mesh.active_cells[l]) {
      const MultiIndex c = h.space(l).unflatten_cell(cell);
      const Box g = h.space(l).cell_geometry(c);
      out << "cell " << l;
      for (int hh = 0; hh < r; ++hh) out << " " << c[hh];
      for (int hh = 0; hh < r; ++hh) {
        std::snprintf(buf, sizeof buf, " %.17g", g.lo[hh]);
        out << buf;
      }
      for (int hh = 0; hh < r; ++hh) {
        std::snprintf(buf, sizeof buf, " %.17g", g.hi[hh]);
        out << buf;
      }
      out << "\n";
    }
  }
}

// Text dump of the coefficient-carrying active functions: level, basis
// multi-index, coefficient.
inline void dump_coeffs(const QuasiInterpolant& qi, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  const DomainHierarchy& h = qi.hierarchy();
  const int r = h.dim();
  out << "# active truncated basis functions and their coefficients\n";
  out << "# func <level>";
  for (int hh = 0; hh < r; ++hh) out << " <j" << hh << ">";
  out << " <lambda>\n";
  char buf[64];
  for (int l = 0; l < h.num_levels(); ++l) {
    for (FlatIndex j : qi.active().per_level[l]) {
      auto it = qi.lambdas()[l].find(j);
      if (it == qi.lambdas()[l].end()) continue;
      const MultiIndex jm = h.space(l).unflatten(j);
      out << "func " << l;
      for (int hh = 0; hh < r; ++hh) out << " " << jm[hh];
      std::snprintf(buf, sizeof buf, " %.17g", it->second);
      out << buf << "\n";
    }
  }
}

// key = value file; '#' starts a comment, later keys win.
inline std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  int line_no = 0;
  auto trim = [](std::string s) {
    const char* ws = " \t\r";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": empty key");
    kv[key] = val;
  }
  return kv;
}

}  // namespace thbfit
