// volfn: simulate paths, estimate integrated volatility functionals, and run
// Monte Carlo validation studies.
//
// Exit codes: 0 success, 2 config validation error, 3 I/O error,
// 4 numerical failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "volfn/errors.hpp"
#include "volfn/harness.hpp"

namespace {

using volfn::EstimatorConfig;
using volfn::MatrixFunctional;
using volfn::ScenarioSpec;

struct EstimatorFlags {
  double theta = 1.0;
  double varpi = 0.47;
  double trunc_scale = -1.0;
  bool no_truncation = false;
  double varpi_prime = 0.1;
  double jump_scale = -1.0;
  bool no_jump_correction = false;
  int quad_nodes = 16;
  bool legacy_border = false;
  double r_activity = 0.0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--theta", theta, "window constant: k_n ~ theta/sqrt(delta)");
    cmd->add_option("--varpi", varpi, "truncation exponent");
    cmd->add_option("--trunc-scale", trunc_scale,
                    "truncation scale alpha (<=0: data-driven default)");
    cmd->add_flag("--no-truncation", no_truncation, "disable jump truncation");
    cmd->add_option("--varpi-prime", varpi_prime, "jump detection exponent");
    cmd->add_option("--jump-scale", jump_scale,
                    "jump detection scale alpha' (<=0: data-driven default)");
    cmd->add_flag("--no-jump-correction", no_jump_correction,
                  "drop the V(G'') correction term");
    cmd->add_option("--quad-nodes", quad_nodes, "Gauss-Legendre nodes for G kernels");
    cmd->add_flag("--legacy-border", legacy_border,
                  "use the (k_n-1) border coefficient variant");
    cmd->add_option("--r-activity", r_activity, "declared jump activity label r");
  }

  EstimatorConfig to_config() const {
    EstimatorConfig cfg;
    cfg.theta = theta;
    cfg.varpi = varpi;
    cfg.trunc_scale = trunc_scale;
    cfg.truncation_enabled = !no_truncation;
    cfg.varpi_prime = varpi_prime;
    cfg.jump_trunc_scale = jump_scale;
    cfg.jump_correction = !no_jump_correction;
    cfg.quad_nodes = quad_nodes;
    cfg.legacy_border = legacy_border;
    cfg.r_activity = r_activity;
    return cfg;
  }
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw volfn::IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw volfn::IoError("failed writing '" + path + "'");
}

nlohmann::json truth_json(const volfn::SimulatedPath& path,
                          const std::vector<std::string>& g_names) {
  nlohmann::json integrated = nlohmann::json::object();
  for (const std::string& name : g_names) {
    MatrixFunctional g = MatrixFunctional::from_name(name, path.series.dim);
    integrated[name] = volfn::true_integrated_functional(path, g);
  }
  nlohmann::json jumps = nlohmann::json::array();
  for (const auto& ev : path.c_jump_log) {
    nlohmann::json size = nlohmann::json::array();
    nlohmann::json pre = nlohmann::json::array();
    for (int j = 0; j < ev.size.dim(); ++j) {
      nlohmann::json srow = nlohmann::json::array();
      nlohmann::json prow = nlohmann::json::array();
      for (int k = 0; k < ev.size.dim(); ++k) {
        srow.push_back(ev.size(j, k));
        prow.push_back(ev.pre(j, k));
      }
      size.push_back(srow);
      pre.push_back(prow);
    }
    jumps.push_back({{"time", ev.time}, {"size", size}, {"pre", pre}});
  }
  return nlohmann::json{{"dim", path.series.dim},
                        {"delta_n", path.series.delta_n},
                        {"t", path.series.horizon()},
                        {"integrated", integrated},
                        {"jumps", jumps},
                        {"n_x_jumps", path.x_jump_times.size()}};
}

int run(int argc, char** argv) {
  CLI::App app{"integrated volatility functional estimation"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "simulate a path and write it as CSV");
  std::string sim_scenario, sim_out, sim_truth;
  double sim_delta = 2e-4;
  std::vector<std::string> sim_gs{"identity", "square"};
  std::optional<std::uint64_t> sim_seed;
  sim->add_option("--scenario", sim_scenario, "scenario JSON file")->required();
  sim->add_option("--delta", sim_delta, "observation interval delta_n")->required();
  sim->add_option("--out", sim_out, "output series CSV")->required();
  sim->add_option("--truth", sim_truth, "optional truth sidecar JSON");
  sim->add_option("--g", sim_gs, "functionals evaluated into the truth sidecar");
  std::uint64_t sim_seed_val = 0;
  auto* sim_seed_opt = sim->add_option("--seed", sim_seed_val, "override scenario seed");

  // estimate
  auto* est = app.add_subcommand("estimate", "estimate V(g) from a series CSV");
  std::string est_series, est_g = "square", est_out, est_truth, est_detections;
  double est_level = 0.95;
  EstimatorFlags est_flags;
  est->add_option("--series", est_series, "input series CSV")->required();
  est->add_option("--g", est_g, "functional name");
  est->add_option("--out", est_out, "output report JSON");
  est->add_option("--truth", est_truth, "truth sidecar JSON (attaches error columns)");
  est->add_option("--level", est_level, "confidence level");
  est->add_option("--detections", est_detections, "write the jump detection list CSV");
  est_flags.attach(est);

  // mc
  auto* mc = app.add_subcommand("mc", "Monte Carlo study of the estimator");
  std::string mc_scenario, mc_g = "square", mc_out, mc_json, mc_per_rep;
  double mc_delta = 2e-4;
  int mc_reps = 500;
  int mc_threads = 1;
  std::vector<double> mc_levels{0.95};
  std::uint64_t mc_seed_val = 0;
  mc->add_option("--scenario", mc_scenario, "scenario JSON file")->required();
  mc->add_option("--g", mc_g, "functional name");
  mc->add_option("--delta", mc_delta, "observation interval delta_n");
  mc->add_option("--reps", mc_reps, "number of replications");
  mc->add_option("--levels", mc_levels, "confidence levels")->delimiter(',');
  auto* mc_seed_opt = mc->add_option("--seed", mc_seed_val, "master seed");
  mc->add_option("--threads", mc_threads, "worker threads");
  mc->add_option("--out", mc_out, "aggregate report CSV");
  mc->add_option("--json", mc_json, "aggregate report JSON");
  mc->add_option("--per-rep", mc_per_rep, "per-replication CSV (plot-ready)");
  EstimatorFlags mc_flags;
  mc_flags.attach(mc);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);  // prints help or the parse error
    return code == 0 ? 0 : 2;
  }

  if (*sim) {
    ScenarioSpec scenario = ScenarioSpec::load(sim_scenario);
    if (sim_seed_opt->count() > 0) scenario.seed = sim_seed_val;
    volfn::SimulatedPath path = volfn::simulate_path(scenario, sim_delta);
    volfn::write_series_csv(sim_out, path.series);
    if (!sim_truth.empty())
      write_text(sim_truth, truth_json(path, sim_gs).dump(2) + "\n");
    std::cout << "wrote " << path.series.n_observations() << " observations (dim "
              << path.series.dim << ") to " << sim_out << "\n";
    return 0;
  }

  if (*est) {
    volfn::ObservedSeries series = volfn::read_series_csv(est_series);
    MatrixFunctional g = MatrixFunctional::from_name(est_g, series.dim);
    std::optional<double> truth;
    if (!est_truth.empty()) {
      std::ifstream in(est_truth);
      if (!in) throw volfn::IoError("cannot open truth file '" + est_truth + "'");
      nlohmann::json tj;
      try {
        in >> tj;
      } catch (const nlohmann::json::exception& e) {
        throw volfn::IoError("truth file '" + est_truth + "': " + e.what());
      }
      if (tj.contains("integrated") && tj["integrated"].contains(est_g))
        truth = tj["integrated"][est_g].get<double>();
    }
    std::vector<volfn::JumpDetection> detections;
    volfn::EstimateReport report = volfn::run_estimate(
        series, g, est_flags.to_config(), est_level, truth, &detections);
    std::string text = report.to_json().dump(2) + "\n";
    if (est_out.empty())
      std::cout << text;
    else
      write_text(est_out, text);
    if (!est_detections.empty())
      volfn::write_detections_csv(est_detections, detections);
    return 0;
  }

  ScenarioSpec scenario = ScenarioSpec::load(mc_scenario);
  if (mc_seed_opt->count() > 0) scenario.seed = mc_seed_val;
  MatrixFunctional g = MatrixFunctional::from_name(mc_g, scenario.dim);
  std::vector<volfn::RepRecord> recs;
  volfn::MCReport report =
      volfn::run_mc(scenario, g, mc_flags.to_config(), mc_delta, mc_reps,
                    mc_levels, mc_threads, mc_per_rep.empty() ? nullptr : &recs);
  if (mc_out.empty())
    std::cout << report.csv();
  else
    write_text(mc_out, report.csv());
  if (!mc_json.empty()) write_text(mc_json, report.to_json().dump(2) + "\n");
  if (!mc_per_rep.empty()) write_text(mc_per_rep, per_rep_csv(report, recs));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const volfn::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const volfn::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const volfn::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
