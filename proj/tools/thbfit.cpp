// thbfit: adaptive surface fitting for scattered terrain samples.
//
// Reads whitespace separated "x y z" samples, fits an adaptively refined
// hierarchical spline surface with locally chosen polynomial degrees, and
// writes iteration reports, the refined mesh, the coefficients, and an
// optional resampled surface grid.
//
// Exit codes: 0 fit converged, 1 usage or I/O error, 2 no data found near
// some coarse basis function, 3 level budget exhausted before reaching
// the tolerance (best effort outputs are still written).

#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "thbfit/thbfit.hpp"

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<int> parse_int_pair(const std::string& s, char sep) {
  std::vector<int> vals;
  for (const std::string& tok : split(s, sep)) vals.push_back(std::stoi(tok));
  if (vals.size() == 1) vals.push_back(vals[0]);
  if (vals.size() != 2) throw std::invalid_argument("expected one or two integers: " + s);
  return vals;
}

thbfit::DomainSpec parse_domain(const std::string& s) {
  thbfit::DomainSpec dom;
  const std::vector<std::string> boxes = split(s, ';');
  bool first = true;
  for (const std::string& btxt : boxes) {
    if (btxt.empty()) continue;
    const std::vector<std::string> nums = split(btxt, ',');
    if (nums.size() != 4)
      throw std::invalid_argument("domain box needs x0,y0,x1,y1: " + btxt);
    thbfit::Box b;
    b.lo = {std::stod(nums[0]), std::stod(nums[1])};
    b.hi = {std::stod(nums[2]), std::stod(nums[3])};
    if (first) {
      dom.base = b;
      first = false;
    } else {
      dom.subtracted.push_back(b);
    }
  }
  if (first) throw std::invalid_argument("empty domain spec");
  dom.validate();
  return dom;
}

std::vector<double> uniform_breaks(double lo, double hi, int cells) {
  std::vector<double> b;
  for (int i = 0; i <= cells; ++i) b.push_back(lo + (hi - lo) * i / cells);
  b.front() = lo;
  b.back() = hi;
  return b;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adaptive hierarchical spline fitting of scattered x y z data"};

  std::string input, config_path, out_dir = ".";
  std::string degree_s, mesh_s, domain_s, dedup_s, clean_s, guard_s;
  double tol = 0.0, sigma = 0.0, guard_tau = 0.0;
  int max_levels = 0, surface_res = 0, threads = 0;

  app.add_option("input", input, "input file with x y z samples");
  app.add_option("--config", config_path, "key = value config file; flags override it");
  app.add_option("--degree", degree_s, "spline degree, one value or dx,dy (default 2)");
  app.add_option("--tol", tol, "pointwise error tolerance (default 1e-2)");
  app.add_option("--sigma", sigma, "smallest singular value gate in (0,1] (default 1e-6)");
  app.add_option("--max-levels", max_levels, "maximum number of levels (default 6)");
  app.add_option("--initial-mesh", mesh_s, "coarse cells, N or NxM (default from data density)");
  app.add_option("--domain", domain_s,
                 "fit domain x0,y0,x1,y1 with optional subtracted boxes appended after ';'");
  app.add_option("--guard", guard_s, "oscillation guard: off or on (default off)");
  app.add_option("--guard-tau", guard_tau, "guard range slack factor (default 0.5)");
  app.add_option("--clean", clean_s,
                 "outlier removal pre-pass: tolerance or tolerance,max_levels");
  app.add_option("--surface-res", surface_res, "write surface.txt sampled on an NxN grid");
  app.add_option("--threads", threads, "worker threads for coefficient fits (default 1)");
  app.add_option("--out", out_dir, "output directory (default .)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    std::map<std::string, std::string> kv;
    if (!config_path.empty()) kv = thbfit::parse_config_file(config_path);
    // Flags given on the command line override config file entries.
    auto override_if = [&](const char* flag, const char* key, const std::string& val) {
      if (app.count(flag)) kv[key] = val;
    };
    override_if("--degree", "degree", degree_s);
    override_if("--tol", "tol", std::to_string(tol));
    override_if("--sigma", "sigma", std::to_string(sigma));
    override_if("--max-levels", "max-levels", std::to_string(max_levels));
    override_if("--initial-mesh", "initial-mesh", mesh_s);
    override_if("--domain", "domain", domain_s);
    override_if("--guard", "guard", guard_s);
    override_if("--guard-tau", "guard-tau", std::to_string(guard_tau));
    override_if("--clean", "clean", clean_s);
    override_if("--surface-res", "surface-res", std::to_string(surface_res));
    override_if("--threads", "threads", std::to_string(threads));
    override_if("--out", "out", out_dir);
    if (app.count("input")) kv["input"] = input;

    if (!kv.count("input") || kv["input"].empty()) {
      std::cerr << "error: no input file given\n" << app.help();
      return 1;
    }

    thbfit::RunConfig run;
    run.input = kv["input"];
    run.out_dir = kv.count("out") ? kv["out"] : std::string(".");
    run.dedup = kv.count("dedup") ? thbfit::dedup_from_string(kv["dedup"])
                                  : thbfit::DedupMode::error;

    std::vector<int> degrees = kv.count("degree") ? parse_int_pair(kv["degree"], ',')
                                                  : std::vector<int>{2, 2};
    run.fit.degrees = degrees;
    run.fit.eps = kv.count("tol") ? std::stod(kv["tol"]) : 1e-2;
    run.fit.sigma = kv.count("sigma") ? std::stod(kv["sigma"]) : 1e-6;
    run.fit.max_levels = kv.count("max-levels") ? std::stoi(kv["max-levels"]) : 6;
    run.fit.threads = kv.count("threads") ? std::stoi(kv["threads"]) : 1;
    run.fit.guard.enabled = kv.count("guard") && kv["guard"] == "on";
    if (kv.count("guard-tau")) run.fit.guard.tau = std::stod(kv["guard-tau"]);
    if (kv.count("domain")) run.domain = parse_domain(kv["domain"]);
    if (kv.count("clean")) {
      const auto parts = split(kv["clean"], ',');
      run.clean = true;
      run.clean_eps = std::stod(parts[0]);
      run.clean_max_levels = parts.size() > 1 ? std::stoi(parts[1]) : run.fit.max_levels;
    }
    run.surface_res = kv.count("surface-res") ? std::stoi(kv["surface-res"]) : 0;

    std::cout << "reading " << run.input << "\n";
    thbfit::ScatteredDataset data = thbfit::load_xyz(run.input, run.dedup);
    std::cout << "loaded " << data.size() << " points\n";

    // Extent of the coarse mesh: the domain base box when given, the data
    // bounding box otherwise.
    thbfit::Box extent = run.domain ? run.domain->base : data.bounding_box();
    if (run.domain) {
      for (int i = 0; i < data.size(); ++i)
        if (!run.domain->contains(data.point(i))) {
          std::cerr << "error: data point " << i << " lies outside the fit domain\n";
          return 1;
        }
    }

    std::vector<int> cells(2);
    if (kv.count("initial-mesh")) {
      cells = parse_int_pair(kv["initial-mesh"], 'x');
    } else {
      // Uniform start grid sized so that a cell holds, on average, at
      // least as many points as the richest local polynomial has terms.
      const int d = std::min(degrees[0], degrees[1]);
      const double target = static_cast<double>(thbfit::polynomial_space_dim(2, d));
      const int n = std::max(d + 1, static_cast<int>(std::sqrt(data.size() / target)));
      cells = {n, n};
    }
    for (int h = 0; h < 2; ++h) {
      cells[h] = std::max(cells[h], degrees[h] + 1);
      run.fit.initial_breakpoints.push_back(uniform_breaks(extent.lo[h], extent.hi[h], cells[h]));
    }
    std::cout << "initial mesh " << cells[0] << "x" << cells[1] << ", degree " << degrees[0]
              << "," << degrees[1] << "\n";

    std::filesystem::create_directories(run.out_dir);
    const thbfit::DomainSpec* dom = run.domain ? &*run.domain : nullptr;

    std::optional<thbfit::ScatteredDataset> cleaned;
    if (run.clean) {
      std::cout << "outlier pre-pass: tol " << run.clean_eps << ", max levels "
                << run.clean_max_levels << "\n";
      thbfit::CleanResult cr =
          thbfit::clean_outliers(data, run.fit, run.clean_eps, run.clean_max_levels, dom);
      if (!cr.data) {
        std::cerr << "error: pre-pass found no data near some coarse basis function\n";
        return 2;
      }
      std::cout << "removed " << cr.removed << " outlier points\n";
      thbfit::write_xyz(*cr.data, run.out_dir + "/cleaned.xyz");
      cleaned = std::move(cr.data);
    }
    const thbfit::ScatteredDataset& fit_data = cleaned ? *cleaned : data;

    const thbfit::FitOutcome outcome = thbfit::fit_adaptive(fit_data, run.fit, dom);
    for (const thbfit::IterationReport& rep : outcome.reports) {
      std::cout << "pass: levels " << rep.num_levels << ", dof " << rep.ndof << ", e_max "
                << rep.e_max << ", e_rms " << rep.e_rms << "\n";
    }
    std::cout << "status: " << thbfit::to_string(outcome.status) << "\n";

    if (outcome.qi) {
      thbfit::export_reports(outcome, run.out_dir);
      thbfit::dump_mesh(*outcome.qi, run.out_dir + "/mesh.txt");
      thbfit::dump_coeffs(*outcome.qi, run.out_dir + "/coeffs.txt");
      if (run.surface_res > 0)
        thbfit::sample_surface(*outcome.qi, dom, run.surface_res,
                               run.out_dir + "/surface.txt");
      std::cout << "outputs written to " << run.out_dir << "\n";
    }

    switch (outcome.status) {
      case thbfit::FitStatus::converged: return 0;
      case thbfit::FitStatus::failure_initial_lambda: return 2;
      case thbfit::FitStatus::failure_max_levels: return 3;
    }
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
