#include "volfn/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <thread>

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

EstimateReport run_estimate(const ObservedSeries& series,
                            const MatrixFunctional& g,
                            const EstimatorConfig& cfg, double ci_level,
                            std::optional<double> true_value,
                            std::vector<JumpDetection>* detections) {
  if (series.dim != g.dim())
    throw ConfigError("run_estimate: series dimension does not match g");
  bool wants_jump = cfg.jump_correction && !g.jump_kernel_vanishes();
  ResolvedConfig rc = resolve_config(cfg, g.growth_exponent(), series, wants_jump);
  std::vector<SymMatrix> spots = spot_cov_series(series, rc.k_n, rc.u_n);

  double jump_term = 0.0;
  int n_det = 0;
  if (wants_jump) {
    int nodes = cfg.quad_nodes;
    JumpKernel kernel = [&g, nodes](const SymMatrix& pre, const SymMatrix& dc) {
      return bias_kernel_Gsecond(g, pre, dc, nodes);
    };
    JumpFunctionalResult jr =
        jump_functional(spots, kernel, rc.k_n, series.delta_n, rc.u_prime_n);
    jump_term = jr.value;
    n_det = static_cast<int>(jr.detections.size());
    if (detections) *detections = std::move(jr.detections);
  } else if (detections) {
    detections->clear();
  }

  EstimateReport report = debiased_estimator(spots, g, rc, jump_term, ci_level);
  report.n_detections = n_det;
  if (true_value) {
    report.has_truth = true;
    report.true_value = *true_value;
    report.error = report.debiased - *true_value;
    report.error_normalized = report.error / std::sqrt(series.delta_n);
  }
  return report;
}

EstimateReport run_estimate(const SimulatedPath& path, const MatrixFunctional& g,
                            const EstimatorConfig& cfg, double ci_level,
                            std::vector<JumpDetection>* detections) {
  double truth = true_integrated_functional(path, g);
  return run_estimate(path.series, g, cfg, ci_level, truth, detections);
}

namespace {

RepRecord run_one_rep(const ScenarioSpec& scenario, const MatrixFunctional& g,
                      const EstimatorConfig& cfg, double delta_n, int rep,
                      std::uint64_t master,
                      const std::vector<double>& levels) {
  RepRecord r;
  r.rep = rep;
  r.seed = derive_seed(master, static_cast<std::uint64_t>(rep));
  ScenarioSpec sc = scenario;
  sc.seed = r.seed;
  SimulatedPath path = simulate_path(sc, delta_n);
  EstimateReport est = run_estimate(path, g, cfg);
  double sdt = std::sqrt(delta_n);
  r.true_value = est.true_value;
  r.raw = est.raw;
  r.debiased = est.debiased;
  r.err_raw_norm = (est.raw - est.true_value) / sdt;
  r.err_debiased_norm = est.error_normalized;
  r.variance_est = est.variance_est;
  r.studentized = est.variance_est > 0.0
                      ? est.error / std::sqrt(est.variance_est)
                      : (est.error == 0.0 ? 0.0 : std::copysign(1e300, est.error));
  r.border = est.border;
  r.a2 = est.a2;
  r.a3 = est.a3;
  r.jump_term = est.jump_term;
  // evaluate the limit terms at the effective window constant k_n sqrt(dt);
  // the CLT holds along subsequences with this limit (it differs from the
  // nominal theta only by the integer rounding of k_n)
  double theta_eff = est.k_n * sdt;
  r.limits = theoretical_limits(path, g, theta_eff, cfg.quad_nodes);
  r.covered.resize(levels.size());
  for (size_t li = 0; li < levels.size(); ++li) {
    double z = normal_quantile(0.5 * (1.0 + levels[li]));
    double half = z * std::sqrt(est.variance_est);
    r.covered[li] = std::abs(est.error) <= half;
  }
  return r;
}

}  // namespace

MCReport run_mc(const ScenarioSpec& scenario, const MatrixFunctional& g,
                const EstimatorConfig& cfg, double delta_n, int replications,
                const std::vector<double>& levels, int threads,
                std::vector<RepRecord>* per_rep) {
  if (replications < 2) throw ConfigError("run_mc: need at least 2 replications");
  for (double l : levels)
    if (!(l > 0.0 && l < 1.0))
      throw ConfigError("run_mc: confidence levels must lie in (0,1)");
  scenario.validate();
  auto t0 = std::chrono::steady_clock::now();

  std::vector<RepRecord> recs(replications);
  std::vector<std::string> failures(replications);
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      int rep = next.fetch_add(1);
      if (rep >= replications) return;
      try {
        recs[rep] = run_one_rep(scenario, g, cfg, delta_n, rep, scenario.seed, levels);
      } catch (const std::exception& e) {
        failures[rep] = e.what();
      }
    }
  };
  int nw = std::max(1, threads);
  if (nw == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < nw; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (int rep = 0; rep < replications; ++rep)
    if (!failures[rep].empty())
      throw NumericalError("replication " + std::to_string(rep) +
                           " failed: " + failures[rep]);

  MCReport rep;
  rep.replications = replications;
  rep.delta_n = delta_n;
  rep.t = scenario.horizon;
  rep.g_name = g.name();
  rep.theta = cfg.theta;
  rep.seed = scenario.seed;
  rep.levels = levels;
  rep.coverage.assign(levels.size(), 0.0);

  // ordered reductions (replication index order, independent of threads)
  KahanSum s_deb, s_raw, s_deb2, s_raw2, s_zvar, s_a1, s_a2l, s_a3l, s_a4l;
  KahanSum s_border, s_a2t, s_a3t, s_jump, s_stud, s_stud2, s_stud3;
  std::vector<KahanSum> s_cov(levels.size());
  for (const RepRecord& r : recs) {
    s_deb.add(r.err_debiased_norm);
    s_raw.add(r.err_raw_norm);
    s_zvar.add(r.limits.z_var);
    s_a1.add(r.limits.a1);
    s_a2l.add(r.limits.a2);
    s_a3l.add(r.limits.a3);
    s_a4l.add(r.limits.a4);
    s_border.add(r.border);
    s_a2t.add(r.a2);
    s_a3t.add(r.a3);
    s_jump.add(r.jump_term);
    s_stud.add(r.studentized);
    for (size_t li = 0; li < levels.size(); ++li)
      if (r.covered[li]) s_cov[li].add(1.0);
  }
  double M = replications;
  rep.mean_err_debiased = s_deb.value() / M;
  rep.mean_err_raw = s_raw.value() / M;
  rep.mean_zvar = s_zvar.value() / M;
  rep.mean_a1 = s_a1.value() / M;
  rep.mean_a2_limit = s_a2l.value() / M;
  rep.mean_a3_limit = s_a3l.value() / M;
  rep.mean_a4_limit = s_a4l.value() / M;
  rep.mean_border = s_border.value() / M;
  rep.mean_a2_term = s_a2t.value() / M;
  rep.mean_a3_term = s_a3t.value() / M;
  rep.mean_jump_term = s_jump.value() / M;
  rep.stud_mean = s_stud.value() / M;
  for (size_t li = 0; li < levels.size(); ++li)
    rep.coverage[li] = s_cov[li].value() / M;

  for (const RepRecord& r : recs) {
    double dd = r.err_debiased_norm - rep.mean_err_debiased;
    double dr = r.err_raw_norm - rep.mean_err_raw;
    double ds = r.studentized - rep.stud_mean;
    s_deb2.add(dd * dd);
    s_raw2.add(dr * dr);
    s_stud2.add(ds * ds);
    s_stud3.add(ds * ds * ds);
  }
  rep.var_err_debiased = s_deb2.value() / (M - 1.0);
  rep.var_err_raw = s_raw2.value() / (M - 1.0);
  rep.stud_var = s_stud2.value() / (M - 1.0);
  double m2 = s_stud2.value() / M;
  double m3 = s_stud3.value() / M;
  rep.stud_skew = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
  rep.se_err_debiased = std::sqrt(rep.var_err_debiased / M);
  rep.se_err_raw = std::sqrt(rep.var_err_raw / M);

  rep.runtime_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (per_rep) *per_rep = std::move(recs);
  return rep;
}

std::string MCReport::csv(bool include_runtime) const {
  std::ostringstream head, row;
  head << "replications,delta_n,t,g,theta,seed,"
       << "mean_err_debiased,se_err_debiased,var_err_debiased,"
       << "mean_err_raw,se_err_raw,var_err_raw,mean_zvar,"
       << "mean_a1,mean_a2_limit,mean_a3_limit,mean_a4_limit,"
       << "mean_border,mean_a2_term,mean_a3_term,mean_jump_term,"
       << "stud_mean,stud_var,stud_skew";
  row << replications << ',' << fmt17(delta_n) << ',' << fmt17(t) << ','
      << g_name << ',' << fmt17(theta) << ',' << seed << ','
      << fmt17(mean_err_debiased) << ',' << fmt17(se_err_debiased) << ','
      << fmt17(var_err_debiased) << ',' << fmt17(mean_err_raw) << ','
      << fmt17(se_err_raw) << ',' << fmt17(var_err_raw) << ','
      << fmt17(mean_zvar) << ',' << fmt17(mean_a1) << ','
      << fmt17(mean_a2_limit) << ',' << fmt17(mean_a3_limit) << ','
      << fmt17(mean_a4_limit) << ',' << fmt17(mean_border) << ','
      << fmt17(mean_a2_term) << ',' << fmt17(mean_a3_term) << ','
      << fmt17(mean_jump_term) << ',' << fmt17(stud_mean) << ','
      << fmt17(stud_var) << ',' << fmt17(stud_skew);
  for (size_t li = 0; li < levels.size(); ++li) {
    char name[32];
    std::snprintf(name, sizeof(name), "coverage_%g", levels[li]);
    head << ',' << name;
    row << ',' << fmt17(coverage[li]);
  }
  if (include_runtime) {
    head << ",runtime_sec";
    row << ',' << fmt17(runtime_sec);
  }
  return head.str() + "\n" + row.str() + "\n";
}

nlohmann::json MCReport::to_json(bool include_runtime) const {
  nlohmann::json j{{"replications", replications},
                   {"delta_n", delta_n},
                   {"t", t},
                   {"g", g_name},
                   {"theta", theta},
                   {"seed", seed},
                   {"mean_err_debiased", mean_err_debiased},
                   {"se_err_debiased", se_err_debiased},
                   {"var_err_debiased", var_err_debiased},
                   {"mean_err_raw", mean_err_raw},
                   {"se_err_raw", se_err_raw},
                   {"var_err_raw", var_err_raw},
                   {"mean_zvar", mean_zvar},
                   {"mean_a1", mean_a1},
                   {"mean_a2_limit", mean_a2_limit},
                   {"mean_a3_limit", mean_a3_limit},
                   {"mean_a4_limit", mean_a4_limit},
                   {"mean_border", mean_border},
                   {"mean_a2_term", mean_a2_term},
                   {"mean_a3_term", mean_a3_term},
                   {"mean_jump_term", mean_jump_term},
                   {"stud_mean", stud_mean},
                   {"stud_var", stud_var},
                   {"stud_skew", stud_skew}};
  nlohmann::json cov = nlohmann::json::object();
  for (size_t li = 0; li < levels.size(); ++li) {
    char name[32];
    std::snprintf(name, sizeof(name), "%g", levels[li]);
    cov[name] = coverage[li];
  }
  j["coverage"] = cov;
  if (include_runtime) j["runtime_sec"] = runtime_sec;
  return j;
}

std::string per_rep_csv(const MCReport& report,
                        const std::vector<RepRecord>& records) {
  std::ostringstream os;
  os << "rep,seed,true_value,raw,debiased,err_raw_norm,err_debiased_norm,"
        "variance_est,studentized,border,a2_term,a3_term,jump_term,"
        "a1,a2_limit,a3_limit,a4_limit,z_var";
  for (double l : report.levels) {
    char name[32];
    std::snprintf(name, sizeof(name), "covered_%g", l);
    os << ',' << name;
  }
  os << '\n';
  for (const RepRecord& r : records) {
    os << r.rep << ',' << r.seed << ',' << fmt17(r.true_value) << ','
       << fmt17(r.raw) << ',' << fmt17(r.debiased) << ','
       << fmt17(r.err_raw_norm) << ',' << fmt17(r.err_debiased_norm) << ','
       << fmt17(r.variance_est) << ',' << fmt17(r.studentized) << ','
       << fmt17(r.border) << ',' << fmt17(r.a2) << ',' << fmt17(r.a3) << ','
       << fmt17(r.jump_term) << ',' << fmt17(r.limits.a1) << ','
       << fmt17(r.limits.a2) << ',' << fmt17(r.limits.a3) << ','
       << fmt17(r.limits.a4) << ',' << fmt17(r.limits.z_var);
    for (bool c : r.covered) os << ',' << (c ? 1 : 0);
    os << '\n';
  }
  return os.str();
}

}  // namespace volfn
