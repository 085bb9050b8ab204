#pragma once

#include <limits>
#include <string>
#include <vector>

#include "volfn/symmatrix.hpp"

namespace volfn {

// A d-dimensional series observed on a uniform grid: values X_{i*delta_n},
// i = 0..N. Immutable after construction.
struct ObservedSeries {
  int dim = 1;
  double delta_n = 0.0;
  std::vector<double> values;  // (N+1) x dim, row-major

  int n_observations() const { return static_cast<int>(values.size()) / dim; }
  int n_increments() const { return n_observations() - 1; }
  double horizon() const { return n_increments() * delta_n; }
  double value(int i, int a) const { return values[static_cast<size_t>(i) * dim + a]; }
  // i-th increment, 1-based (X_{i dt} - X_{(i-1) dt})
  double increment(int i, int a) const { return value(i, a) - value(i - 1, a); }
  double increment_norm(int i) const;

  void validate() const;
};

// CSV with header t,x1,...,xd and uniformly spaced t (checked to 1e-9
// relative on read).
ObservedSeries read_series_csv(const std::string& path);
void write_series_csv(const std::string& path, const ObservedSeries& series);

// Tuning constants of the estimator. Scales <= 0 select the data-driven
// defaults resolved by resolve_config (recorded in output metadata).
struct EstimatorConfig {
  double theta = 1.0;          // window constant: k_n ~ theta / sqrt(delta_n)
  double varpi = 0.47;         // truncation exponent, u_n = alpha * delta_n^varpi
  double trunc_scale = -1.0;   // alpha; <= 0 -> 4*sqrt(median block RV per unit time)
  bool truncation_enabled = true;
  double varpi_prime = 0.1;    // jump detection exponent, u'_n = alpha' * delta_n^varpi'
  double jump_trunc_scale = -1.0;  // alpha'; <= 0 -> robust scale of block deltas
  bool jump_correction = true;     // include the V(G'') term in the debiasing
  int quad_nodes = 16;
  bool legacy_border = false;  // use the (k_n - 1) border coefficient variant
  double r_activity = 0.0;     // declared jump activity label of X
};

// Config with the grid-dependent quantities pinned down.
struct ResolvedConfig {
  EstimatorConfig base;
  double delta_n = 0.0;
  int k_n = 2;
  double u_n = std::numeric_limits<double>::infinity();
  double u_prime_n = 0.0;
  double trunc_scale_eff = 0.0;
  double jump_scale_eff = 0.0;
};

// k_n = round(theta / sqrt(delta_n)), clamped to >= 2.
int window_size(double delta_n, double theta);

// Checks the exponent constraints against the growth exponent p of the test
// function and the jump activity r, and derives k_n, u_n, u'_n. Throws
// ConfigError naming the violated inequality. Scales must be concrete
// (resolve data-driven ones first via resolve_config).
ResolvedConfig validate_config(const EstimatorConfig& cfg, double p, double r,
                               double delta_n);

// Fills in data-driven truncation scales from the series, then validates.
// Resolving the jump-detection scale costs one pass over the spot series;
// callers that will not evaluate a jump functional can skip it.
ResolvedConfig resolve_config(const EstimatorConfig& cfg, double p,
                              const ObservedSeries& series,
                              bool need_jump_scale = true);

// Truncated spot covariance at 1-based window start i:
// chat_i^{lm} = (1/(k_n dt)) sum_{j=0}^{k_n-1} dX_{i+j}^l dX_{i+j}^m
//               1{ ||dX_{i+j}|| <= u_n }.
SymMatrix spot_cov_at(const ObservedSeries& series, int i, int k_n, double u_n);

// All admissible windows i = 1 .. N-k_n+1, via a compensated rolling update
// in O(N d^2). Element [i-1] equals spot_cov_at(series, i, k_n, u_n) up to
// summation-order rounding (<= 1e-10).
std::vector<SymMatrix> spot_cov_series(const ObservedSeries& series, int k_n,
                                       double u_n);

}  // namespace volfn
