#pragma once

#include <span>
#include <string>

#include "json.hpp"
#include "volfn/functional.hpp"
#include "volfn/spotvol.hpp"
#include "volfn/symmatrix.hpp"

namespace volfn {

// V(g)^n_t = delta_n * sum_i g(chat_i) over the admissible windows; empty
// input sums to 0 by convention.
double plugin_functional(std::span<const SymMatrix> spots,
                         const MatrixFunctional& g, double delta_n);

// (k_n dt / 2) (g(chat_first) + g(chat_last)); with legacy=true the
// (k_n - 1) coefficient variant is used instead.
double border_term(std::span<const SymMatrix> spots, const MatrixFunctional& g,
                   int k_n, double delta_n, bool legacy = false);

// A^{n,2} = V(h)^n / (k_n sqrt(dt)), the estimator of the statistical-noise
// bias integral.
double a2_term(std::span<const SymMatrix> spots, const MatrixFunctional& g,
               int k_n, double delta_n);

// A^{n,3} = -(sqrt(dt)/8) sum_i sum_{jklm} d2g(chat_i)
//           (chat_{i+k_n}-chat_i)^{jk} (chat_{i+k_n}-chat_i)^{lm},
// summed over i = 1 .. #spots - k_n (empty range gives 0).
double a3_term(std::span<const SymMatrix> spots, const MatrixFunctional& g,
               int k_n, double delta_n);

// Point estimate with all corrections, the variance estimate and a
// confidence interval.
struct EstimateReport {
  // inputs echo
  double t = 0.0;
  double delta_n = 0.0;
  int dim = 1;
  std::string g_name;
  int k_n = 0;
  int n_spots = 0;
  double theta = 0.0;
  double varpi = 0.0;
  double u_n = 0.0;
  double trunc_scale_eff = 0.0;
  bool truncation_enabled = true;
  double varpi_prime = 0.0;
  double u_prime_n = 0.0;
  double jump_scale_eff = 0.0;
  int quad_nodes = 16;
  bool legacy_border = false;

  // estimate decomposition
  double raw = 0.0;        // V(g)^n
  double border = 0.0;
  double a2 = 0.0;         // A^{n,2}
  double a3 = 0.0;         // A^{n,3}
  double jump_term = 0.0;  // V(G'')^n
  int n_detections = 0;
  double debiased = 0.0;   // Vbar(g)^n
  double variance_est = 0.0;  // dt * V(hbar)^n
  double ci_level = 0.95;
  double ci_low = 0.0;
  double ci_high = 0.0;

  // filled when simulation truth is available
  bool has_truth = false;
  double true_value = 0.0;
  double error = 0.0;
  double error_normalized = 0.0;  // (Vbar - V) / sqrt(dt)

  nlohmann::json to_json() const;
  static std::string csv_header();
  std::string csv_row() const;
};

// Assembles Vbar(g)^n = V + border - sqrt(dt) (3/2 A^{n,2} + A^{n,3})
//                        - k_n dt * jump_term.
// jump_term is V(G'')^n computed by the jump module on the same spots (0
// when disabled or when G'' vanishes identically).
EstimateReport debiased_estimator(std::span<const SymMatrix> spots,
                                  const MatrixFunctional& g,
                                  const ResolvedConfig& cfg, double jump_term,
                                  double ci_level = 0.95);

// debiased +- z_{(1+level)/2} sqrt(variance_est); degenerate when the
// variance estimate is zero.
std::pair<double, double> confidence_interval(const EstimateReport& report,
                                              double level);

}  // namespace volfn
