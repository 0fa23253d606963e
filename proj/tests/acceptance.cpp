// Acceptance run: one PASS/FAIL line per criterion.  Tolerances are pinned
// here and written over whatever the configs carry.
//
//   acceptance [output_dir]

#include "slns/experiment.hpp"

#include <chrono>
#include <cstdio>
#include <iostream>

using namespace slns;

namespace {

constexpr double kSeFactor = 3.0;
constexpr double kDtSlack = 5.0;
constexpr double kRelTolerance = 0.05;
constexpr double kBoundaryRatio = 3.0;
constexpr double kC1Seconds = 120.0;
constexpr double kC2Seconds = 600.0;
constexpr double kDetFactor = 10.0;
constexpr double kDetRatio = 1.7;
constexpr double kLerayTolerance = 1e-10;
constexpr double kGradientLoopTolerance = 2e-3;
constexpr std::pair<double, double> kSeSlope{-0.6, -0.4};
constexpr std::pair<double, double> kBiasSlope{0.7, 1.3};

std::string out_dir = "acceptance_out";
int failures = 0;

ExperimentConfig load(const std::string& name) {
  auto cfg = load_config(std::string(SLNS_CONFIG_DIR) + "/" + name);
  cfg.problem.se_factor = kSeFactor;
  cfg.problem.dt_slack = kDtSlack;
  cfg.problem.rel_tolerance = kRelTolerance;
  cfg.problem.boundary_ratio = kBoundaryRatio;
  return cfg;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void verdict(const std::string& id, bool pass, const std::string& detail) {
  if (!pass) ++failures;
  std::cout << "criterion " << id << ": " << (pass ? "PASS" : "FAIL") << "  " << detail << std::endl;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

ExperimentResult run(const ExperimentConfig& cfg, const std::string& tag) {
  auto r = run_experiment(cfg);
  write_result(r, out_dir + "/" + tag);
  return r;
}

/// Worst error / tolerance over report rows with a finite tolerance.
double worst_ratio(const VerificationReport& rep) {
  double w = 0.0;
  for (const auto& row : rep.rows)
    if (std::isfinite(row.tolerance) && row.tolerance > 0.0) w = std::max(w, row.error / row.tolerance);
  return w;
}

VerificationReport report_of(const ExperimentConfig& cfg) {
  return verify_representation(parse_verify_kind(cfg.experiment), cfg.problem, cfg.solver);
}

void criterion_1() {
  auto cfg = load("c1_scalar_fk_heat_slab.yaml");
  cfg.solver.workers = 1;
  const auto t0 = std::chrono::steady_clock::now();
  const auto rep = report_of(cfg);
  const double secs = seconds_since(t0);
  write_result({rep.pass(), {{"report.csv", rep.csv()}}, rep.summary()}, out_dir + "/c1");
  verdict("1", rep.pass() && secs <= kC1Seconds,
          fmt("scalar_fk heat_slab: worst error/tolerance %.3f over 5 points, %.1f s single-threaded (limit %.0f s)",
              worst_ratio(rep), secs, kC1Seconds));
}

void criterion_2() {
  auto cfg = load("c2_ns_periodic_taylor_green.yaml");
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = run(cfg, "c2");
  const double secs = seconds_since(t0);
  // Last row of snapshots.csv holds the error at t_final.
  const auto& csv = r.files.at("snapshots.csv");
  const auto last = csv.substr(csv.rfind('\n', csv.size() - 2) + 1);
  const double err = std::stod(last.substr(last.find(',') + 1));
  verdict("2", err <= kRelTolerance && secs <= kC2Seconds,
          fmt("ns_periodic taylor_green: rel L2 error %.4f at t=0.5 (limit %.2f), %.1f s", err, kRelTolerance, secs) +
              " with " + std::to_string(cfg.solver.workers) + " workers");
}

void criterion_3() {
  const auto cfg = load("c3_weber_channel.yaml");
  const auto rep = report_of(cfg);
  write_result({rep.pass(), {{"report.csv", rep.csv()}}, rep.summary()}, out_dir + "/c3");
  double err = NAN, err_nb = NAN;
  for (const auto& row : rep.rows) {
    if (row.name == "weber_rel_l2") err = row.error;
    if (row.name == "weber_without_wall_term_rel_l2") err_nb = row.error;
  }
  verdict("3a", err <= kRelTolerance, fmt("weber channel_decay: rel L2 error %.4f (limit %.2f)", err, kRelTolerance));
  verdict("3b", err_nb >= kBoundaryRatio * err,
          fmt("weber channel_decay without wall term: rel L2 error %.4f = %.2f x the full run (required >= %.0f x)", err_nb,
              err_nb / err, kBoundaryRatio));
}

void criterion_verify(const std::string& id, const std::string& file, const std::string& what) {
  const auto cfg = load(file);
  const auto rep = report_of(cfg);
  write_result({rep.pass(), {{"report.csv", rep.csv()}}, rep.summary()}, out_dir + "/c" + id);
  verdict(id, rep.pass(),
          what + fmt(": %.0f checks, worst error/tolerance %.3f", static_cast<double>(rep.rows.size()), worst_ratio(rep)));
}

void criterion_6() {
  auto cfg = load("c6_jacobian_det.yaml");
  cfg.jacobian.det_factor = kDetFactor;
  cfg.jacobian.min_ratio = kDetRatio;
  const auto r = run(cfg, "c6");
  std::string detail = "jacobian_det taylor_green t=0.5:";
  std::istringstream in(r.files.at("jacobian.csv"));
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    double dt, med, tol, ratio;
    std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &dt, &med, &tol, &ratio);
    detail += fmt(" dt=%g median=%.3g", dt, med);
    if (std::isfinite(ratio)) detail += fmt(" (x%.2f)", ratio);
  }
  verdict("6", r.pass, detail);
}

void criterion_7() {
  auto c2 = load("c7_leray_2d.yaml");
  auto c3 = load("c7_leray_3d.yaml");
  c2.leray.tolerance = c3.leray.tolerance = kLerayTolerance;
  const auto r2 = run(c2, "c7_2d");
  const auto r3 = run(c3, "c7_3d");
  auto worst = [](const std::string& s) {
    const auto at = s.find("worst residual") + 15;
    return s.substr(at, s.find(',', at) - at);
  };
  verdict("7", r2.pass && r3.pass,
          "leray_properties: 100 fields each on 32^2 and 12^3, worst residual " + worst(r2.summary) + " / " +
              worst(r3.summary) + fmt(" (limit %.0e)", kLerayTolerance));
}

void criterion_8() {
  const auto cfg = load("c8_circulation.yaml");
  const auto rep = report_of(cfg);
  write_result({rep.pass(), {{"report.csv", rep.csv()}}, rep.summary()}, out_dir + "/c8");

  // Gradient initial data: every transported loop must close to quadrature error.
  const double t = cfg.problem.times.front();
  const Domain<2> domain = reference::taylor_green_domain();
  const Grid<2> grid(domain, cfg.solver.grid_shape<2>());
  const auto series = detail::reference_series(cfg.problem, grid, t, cfg.solver.dt_snap);
  BoundaryData<2> data;
  data.u0 = [](const Vec<2>& x) {
    return Vec<2>(std::cos(x[0]) * std::cos(x[1]) + 0.5, -std::sin(x[0]) * std::sin(x[1]) + 0.5 * std::cos(x[1]));
  };
  double worst = 0.0;
  std::size_t samples_checked = 0;
  for (const auto& curve : cfg.problem.curves) {
    std::vector<double> samples;
    estimate_circulation(series, domain, data, curve, t, cfg.solver.estimator(), &samples);
    for (double s : samples) worst = std::max(worst, std::abs(s));
    samples_checked += samples.size();
  }
  const bool grad_ok = worst <= kGradientLoopTolerance;
  verdict("8", rep.pass() && grad_ok,
          fmt("circulation taylor_green t=0.2: worst error/(3 SE) %.3f over %.0f loops; gradient data max |sample| %.2e",
              worst_ratio(rep), static_cast<double>(rep.rows.size()), worst) +
              fmt(" over %.0f samples (limit %.0e)", static_cast<double>(samples_checked), kGradientLoopTolerance));
}

/// Shrinks a config to desk-check size for the worker sweep.
ExperimentConfig reduced(std::string file, std::size_t n_paths) {
  auto cfg = load(file);
  cfg.solver.n_paths = n_paths;
  return cfg;
}

void criterion_9() {
  std::vector<std::pair<std::string, ExperimentConfig>> runs;
  {
    auto c = reduced("c1_scalar_fk_heat_slab.yaml", 2000);
    c.solver.dt = 1e-3;
    runs.emplace_back("scalar_fk", c);
  }
  {
    auto c = reduced("c2_ns_periodic_taylor_green.yaml", 40);
    c.solver.shape = {12, 12};
    c.solver.t_final = 0.1;
    runs.emplace_back("ns_periodic", c);
  }
  {
    auto c = reduced("c3_weber_channel.yaml", 40);
    c.solver.shape = {8, 9};
    c.solver.dt = 5e-3;
    c.solver.dt_snap = 0.01;
    c.problem.dt_pde = 1e-3;
    runs.emplace_back("weber", c);
  }
  {
    auto c = reduced("c4_vorticity_channel.yaml", 2000);
    c.solver.dt = 5e-3;
    runs.emplace_back("vorticity", c);
  }
  {
    auto c = reduced("c5_martingale_channel.yaml", 2000);
    c.solver.dt = 2.5e-3;
    c.solver.dt_snap = 0.0125;
    c.problem.dt_pde = 1e-3;
    runs.emplace_back("martingale", c);
  }
  {
    auto c = reduced("c6_jacobian_det.yaml", 200);
    c.solver.shape = {32, 32};
    runs.emplace_back("jacobian_det", c);
  }
  {
    auto c = reduced("c7_leray_2d.yaml", 2);
    c.leray.n_fields = 10;
    runs.emplace_back("leray_properties", c);
  }
  {
    auto c = reduced("c8_circulation.yaml", 200);
    c.solver.dt = 0.02;
    runs.emplace_back("circulation", c);
  }
  {
    auto c = reduced("c10_n_ladder_heat_slab.yaml", 100);
    c.ladder.values = {100, 400, 1600};
    runs.emplace_back("convergence_ladder", c);
  }
  std::size_t files = 0;
  std::vector<std::string> mismatched;
  for (auto& [name, cfg] : runs) {
    std::optional<ExperimentResult> base;
    for (int w : {1, 4, 8, 1}) {
      cfg.solver.workers = w;
      auto r = run_experiment(cfg);
      if (!base) {
        base = std::move(r);
        write_result(*base, out_dir + "/c9/" + name);
        files += base->files.size();
        continue;
      }
      if (r.files != base->files) {
        mismatched.push_back(name + "@" + std::to_string(w));
      }
    }
  }
  std::string detail = std::to_string(runs.size()) + " experiments, " + std::to_string(files) +
                       " output files compared byte for byte at workers 1, 4, 8 and a repeat at 1";
  for (const auto& m : mismatched) detail += "; differs: " + m;
  verdict("9", mismatched.empty(), detail);
}

std::string slope_of(const ExperimentResult& r) {
  const auto& fit = r.files.at("fit.csv");
  std::istringstream in(fit);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  std::vector<std::string> cells;
  std::stringstream ss(row);
  for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
  return cells.size() > 2 ? cells[2] : "?";
}

void criterion_10() {
  auto n = load("c10_n_ladder_heat_slab.yaml");
  n.ladder.slope_range = kSeSlope;
  const auto rn = run(n, "c10_n");
  verdict("10a", rn.pass,
          "standard error vs n on scalar_fk heat_slab: slope " + slope_of(rn) + fmt(" (range [%g, %g])", kSeSlope.first, kSeSlope.second));

  auto d1 = load("c10_dt_ladder_heat_slab.yaml");
  d1.ladder.slope_range = kBiasSlope;
  const auto r1 = run(d1, "c10_dt_c1");
  verdict("10b", r1.pass,
          "bias vs dt on criterion 1 (scalar_fk heat_slab): slope " + slope_of(r1) +
              fmt(" (range [%g, %g])", kBiasSlope.first, kBiasSlope.second));

  auto d4 = load("c10_dt_ladder_vorticity.yaml");
  d4.ladder.slope_range = kBiasSlope;
  const auto r4 = run(d4, "c10_dt_c4");
  verdict("10c", r4.pass,
          "bias vs dt on criterion 4 (vorticity channel_decay): slope " + slope_of(r4) +
              fmt(" (range [%g, %g])", kBiasSlope.first, kBiasSlope.second));
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) out_dir = argv[1];
  const std::vector<std::pair<std::string, std::function<void()>>> criteria{
      {"1", criterion_1},
      {"2", criterion_2},
      {"3", criterion_3},
      {"4", [] { criterion_verify("4", "c4_vorticity_channel.yaml", "vorticity channel_decay"); }},
      {"5", [] { criterion_verify("5", "c5_martingale_channel.yaml", "martingale channel_decay"); }},
      {"6", criterion_6},
      {"7", criterion_7},
      {"8", criterion_8},
      {"9", criterion_9},
      {"10", criterion_10},
  };
  for (const auto& [id, body] : criteria) {
    try {
      body();
    } catch (const std::exception& e) {
      verdict(id, false, std::string("error: ") + e.what());
    }
  }
  std::cout << failures << " failing line(s)" << std::endl;
  return failures == 0 ? 0 : 1;
}
