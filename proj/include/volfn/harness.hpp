#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "volfn/estimators.hpp"
#include "volfn/simkit.hpp"

namespace volfn {

// Full pipeline on an observed series: resolve config, build the spot
// series, evaluate the jump correction when applicable, assemble the
// debiased estimate. A known true value (e.g. from a truth sidecar) is
// attached to the report when supplied.
EstimateReport run_estimate(const ObservedSeries& series,
                            const MatrixFunctional& g,
                            const EstimatorConfig& cfg, double ci_level = 0.95,
                            std::optional<double> true_value = {},
                            std::vector<JumpDetection>* detections = nullptr);

// Same pipeline on a simulated path; the truth comes from the path itself.
EstimateReport run_estimate(const SimulatedPath& path, const MatrixFunctional& g,
                            const EstimatorConfig& cfg, double ci_level = 0.95,
                            std::vector<JumpDetection>* detections = nullptr);

// One Monte Carlo replication, exposed for per-rep reporting.
struct RepRecord {
  int rep = 0;
  std::uint64_t seed = 0;
  double true_value = 0.0;
  double raw = 0.0;
  double debiased = 0.0;
  double err_raw_norm = 0.0;       // (V - V(g)) / sqrt(dt)
  double err_debiased_norm = 0.0;  // (Vbar - V(g)) / sqrt(dt)
  double variance_est = 0.0;
  double studentized = 0.0;
  double border = 0.0, a2 = 0.0, a3 = 0.0, jump_term = 0.0;
  TheoreticalLimits limits;
  std::vector<bool> covered;  // one flag per requested level
};

struct MCReport {
  int replications = 0;
  double delta_n = 0.0;
  double t = 0.0;
  std::string g_name;
  double theta = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> levels;
  std::vector<double> coverage;

  double mean_err_debiased = 0.0, se_err_debiased = 0.0, var_err_debiased = 0.0;
  double mean_err_raw = 0.0, se_err_raw = 0.0, var_err_raw = 0.0;
  double mean_zvar = 0.0;  // mean of the per-path theoretical variance
  double mean_a1 = 0.0, mean_a2_limit = 0.0, mean_a3_limit = 0.0,
         mean_a4_limit = 0.0;
  double mean_border = 0.0, mean_a2_term = 0.0, mean_a3_term = 0.0,
         mean_jump_term = 0.0;
  double stud_mean = 0.0, stud_var = 0.0, stud_skew = 0.0;
  double runtime_sec = 0.0;

  // include_runtime=false gives the byte-reproducible form compared across
  // runs and thread counts (wall time is the one non-deterministic field)
  std::string csv(bool include_runtime = true) const;
  nlohmann::json to_json(bool include_runtime = true) const;
};

// M independent replications with per-index derived seeds; aggregation is an
// ordered reduction over replication index, so the statistics do not depend
// on the worker count.
MCReport run_mc(const ScenarioSpec& scenario, const MatrixFunctional& g,
                const EstimatorConfig& cfg, double delta_n, int replications,
                const std::vector<double>& levels, int threads = 1,
                std::vector<RepRecord>* per_rep = nullptr);

std::string per_rep_csv(const MCReport& report,
                        const std::vector<RepRecord>& records);

}  // namespace volfn
