#include "volfn/estimators.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "volfn/errors.hpp"
#include "volfn/kernels.hpp"
#include "volfn/numutil.hpp"

namespace volfn {

namespace {

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

double plugin_functional(std::span<const SymMatrix> spots,
                         const MatrixFunctional& g, double delta_n) {
  KahanSum acc;
  for (const SymMatrix& c : spots) acc.add(g.eval(c));
  return delta_n * acc.value();
}

double border_term(std::span<const SymMatrix> spots, const MatrixFunctional& g,
                   int k_n, double delta_n, bool legacy) {
  if (spots.empty()) throw ConfigError("border_term: empty spot series");
  double coeff = (legacy ? (k_n - 1) : k_n) * delta_n / 2.0;
  return coeff * (g.eval(spots.front()) + g.eval(spots.back()));
}

double a2_term(std::span<const SymMatrix> spots, const MatrixFunctional& g,
               int k_n, double delta_n) {
  KahanSum acc;
  for (const SymMatrix& c : spots) acc.add(h_from_g(g, c));
  double v_h = delta_n * acc.value();
  return v_h / (k_n * std::sqrt(delta_n));
}

double a3_term(std::span<const SymMatrix> spots, const MatrixFunctional& g,
               int k_n, double delta_n) {
  int M = static_cast<int>(spots.size());
  int last = M - k_n;  // 1-based upper limit [t/dt]-2k_n+1
  if (last < 1) return 0.0;
  KahanSum acc;
  for (int i = 1; i <= last; ++i) {
    const SymMatrix& lo = spots[i - 1];
    SymMatrix diff = spots[i - 1 + k_n] - lo;
    acc.add(g.hess(lo).contract_pair(diff));
  }
  return -std::sqrt(delta_n) / 8.0 * acc.value();
}

EstimateReport debiased_estimator(std::span<const SymMatrix> spots,
                                  const MatrixFunctional& g,
                                  const ResolvedConfig& cfg, double jump_term,
                                  double ci_level) {
  if (spots.empty()) throw ConfigError("debiased_estimator: empty spot series");
  if (spots.front().dim() != g.dim())
    throw ConfigError("debiased_estimator: spot dimension does not match g");

  EstimateReport r;
  r.delta_n = cfg.delta_n;
  r.dim = g.dim();
  r.g_name = g.name();
  r.k_n = cfg.k_n;
  r.n_spots = static_cast<int>(spots.size());
  r.t = (static_cast<int>(spots.size()) + cfg.k_n - 1) * cfg.delta_n;
  r.theta = cfg.base.theta;
  r.varpi = cfg.base.varpi;
  r.u_n = cfg.u_n;
  r.trunc_scale_eff = cfg.trunc_scale_eff;
  r.truncation_enabled = cfg.base.truncation_enabled;
  r.varpi_prime = cfg.base.varpi_prime;
  r.u_prime_n = cfg.u_prime_n;
  r.jump_scale_eff = cfg.jump_scale_eff;
  r.quad_nodes = cfg.base.quad_nodes;
  r.legacy_border = cfg.base.legacy_border;

  r.raw = plugin_functional(spots, g, cfg.delta_n);
  r.border = border_term(spots, g, cfg.k_n, cfg.delta_n, cfg.base.legacy_border);
  r.a2 = a2_term(spots, g, cfg.k_n, cfg.delta_n);
  r.a3 = a3_term(spots, g, cfg.k_n, cfg.delta_n);
  r.jump_term = jump_term;

  double sdt = std::sqrt(cfg.delta_n);
  r.debiased = r.raw + r.border - sdt * (1.5 * r.a2 + r.a3) -
               cfg.k_n * cfg.delta_n * jump_term;

  KahanSum acc;
  for (const SymMatrix& c : spots) acc.add(hbar_from_g(g, c));
  double v_hbar = cfg.delta_n * acc.value();  // V(hbar)^n
  r.variance_est = cfg.delta_n * v_hbar;
  if (r.variance_est < 0.0) {
    // hbar >= 0 pointwise on PSD arguments; only rounding can land here
    if (r.variance_est < -1e-12)
      throw NumericalError("variance estimate negative beyond tolerance");
    r.variance_est = 0.0;
  }

  r.ci_level = ci_level;
  auto [lo, hi] = confidence_interval(r, ci_level);
  r.ci_low = lo;
  r.ci_high = hi;
  return r;
}

std::pair<double, double> confidence_interval(const EstimateReport& report,
                                              double level) {
  if (!(level > 0.0 && level < 1.0))
    throw ConfigError("confidence_interval: level must lie in (0,1)");
  if (report.variance_est < 0.0)
    throw NumericalError("confidence_interval: negative variance estimate");
  double z = normal_quantile(0.5 * (1.0 + level));
  double half = z * std::sqrt(report.variance_est);
  return {report.debiased - half, report.debiased + half};
}

nlohmann::json EstimateReport::to_json() const {
  nlohmann::json j{
      {"t", t},
      {"delta_n", delta_n},
      {"dim", dim},
      {"g", g_name},
      {"k_n", k_n},
      {"n_spots", n_spots},
      {"theta", theta},
      {"varpi", varpi},
      {"u_n", std::isfinite(u_n) ? nlohmann::json(u_n) : nlohmann::json("inf")},
      {"trunc_scale", std::isfinite(trunc_scale_eff)
                          ? nlohmann::json(trunc_scale_eff)
                          : nlohmann::json("inf")},
      {"truncation_enabled", truncation_enabled},
      {"varpi_prime", varpi_prime},
      {"u_prime_n", u_prime_n},
      {"jump_trunc_scale", jump_scale_eff},
      {"quad_nodes", quad_nodes},
      {"legacy_border", legacy_border},
      {"raw", raw},
      {"border", border},
      {"a2_term", a2},
      {"a3_term", a3},
      {"jump_term", jump_term},
      {"n_detections", n_detections},
      {"debiased", debiased},
      {"variance_est", variance_est},
      {"ci_level", ci_level},
      {"ci_low", ci_low},
      {"ci_high", ci_high},
  };
  if (has_truth) {
    j["true_value"] = true_value;
    j["error"] = error;
    j["error_normalized"] = error_normalized;
  }
  return j;
}

std::string EstimateReport::csv_header() {
  return "t,delta_n,dim,g,k_n,n_spots,raw,border,a2_term,a3_term,jump_term,"
         "n_detections,debiased,variance_est,ci_level,ci_low,ci_high,"
         "true_value,error,error_normalized";
}

std::string EstimateReport::csv_row() const {
  std::ostringstream os;
  os << fmt17(t) << ',' << fmt17(delta_n) << ',' << dim << ',' << g_name << ','
     << k_n << ',' << n_spots << ',' << fmt17(raw) << ',' << fmt17(border)
     << ',' << fmt17(a2) << ',' << fmt17(a3) << ',' << fmt17(jump_term) << ','
     << n_detections << ',' << fmt17(debiased) << ',' << fmt17(variance_est)
     << ',' << fmt17(ci_level) << ',' << fmt17(ci_low) << ',' << fmt17(ci_high);
  if (has_truth)
    os << ',' << fmt17(true_value) << ',' << fmt17(error) << ','
       << fmt17(error_normalized);
  else
    os << ",,,";
  return os.str();
}

}  // namespace volfn
