#include "volfn/spotvol.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "volfn/errors.hpp"
#include "volfn/numutil.hpp"

namespace volfn {

double ObservedSeries::increment_norm(int i) const {
  double s = 0.0;
  for (int a = 0; a < dim; ++a) {
    double v = increment(i, a);
    s += v * v;
  }
  return std::sqrt(s);
}

void ObservedSeries::validate() const {
  if (dim < 1) throw ConfigError("series: dimension must be positive");
  if (delta_n <= 0.0) throw ConfigError("series: delta_n must be positive");
  if (values.size() % dim != 0)
    throw ConfigError("series: value storage not a multiple of dim");
  if (n_increments() < 1) throw ConfigError("series: need at least 2 observations");
  for (double v : values)
    if (!std::isfinite(v)) throw NumericalError("series: non-finite value");
}

ObservedSeries read_series_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open series file '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty series file '" + path + "'");
  // header: t,x1,...,xd
  int dim = 0;
  {
    std::stringstream ss(line);
    std::string tok;
    bool first = true;
    while (std::getline(ss, tok, ',')) {
      if (first) {
        if (tok != "t") throw IoError("series header must start with 't'");
        first = false;
      } else {
        ++dim;
      }
    }
  }
  if (dim < 1) throw IoError("series header has no value columns");

  std::vector<double> times;
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    int col = 0;
    while (std::getline(ss, tok, ',')) {
      double v;
      try {
        v = std::stod(tok);
      } catch (const std::exception&) {
        throw IoError("series: cannot parse '" + tok + "' as a number");
      }
      if (col == 0)
        times.push_back(v);
      else
        values.push_back(v);
      ++col;
    }
    if (col != dim + 1)
      throw IoError("series: row with " + std::to_string(col) +
                    " columns, expected " + std::to_string(dim + 1));
  }
  if (times.size() < 2) throw IoError("series: need at least 2 rows");

  double dt = times[1] - times[0];
  if (dt <= 0.0) throw IoError("series: time column must be strictly increasing");
  for (size_t i = 1; i < times.size(); ++i) {
    double step = times[i] - times[i - 1];
    if (std::abs(step - dt) > 1e-9 * dt)
      throw IoError("series: non-uniform spacing at row " + std::to_string(i) +
                    " (step " + std::to_string(step) + " vs " + std::to_string(dt) + ")");
  }

  ObservedSeries s;
  s.dim = dim;
  s.delta_n = dt;
  s.values = std::move(values);
  s.validate();
  return s;
}

void write_series_csv(const std::string& path, const ObservedSeries& series) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "t";
  for (int a = 1; a <= series.dim; ++a) out << ",x" << a;
  out << "\n";
  char buf[32];
  int n = series.n_observations();
  for (int i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", i * series.delta_n);
    out << buf;
    for (int a = 0; a < series.dim; ++a) {
      std::snprintf(buf, sizeof(buf), "%.17g", series.value(i, a));
      out << "," << buf;
    }
    out << "\n";
  }
  if (!out) throw IoError("failed writing '" + path + "'");
}

int window_size(double delta_n, double theta) {
  if (delta_n <= 0.0) throw ConfigError("window_size: delta_n must be positive");
  if (theta <= 0.0) throw ConfigError("window_size: theta must be positive");
  int k = static_cast<int>(std::floor(theta / std::sqrt(delta_n) + 0.5));
  return std::max(2, k);
}

ResolvedConfig validate_config(const EstimatorConfig& cfg, double p, double r,
                               double delta_n) {
  if (p < 3.0) throw ConfigError("config: growth exponent p must be >= 3");
  if (!(r >= 0.0 && r < 1.0))
    throw ConfigError("config: jump activity r must lie in [0,1)");
  ResolvedConfig out;
  out.base = cfg;
  out.delta_n = delta_n;
  out.k_n = window_size(delta_n, cfg.theta);

  if (cfg.truncation_enabled) {
    double lower = (2.0 * p - 1.0) / (2.0 * (2.0 * p - r));
    if (!(cfg.varpi >= lower && cfg.varpi < 0.5)) {
      std::ostringstream msg;
      msg << "config: truncation exponent varpi=" << cfg.varpi
          << " violates (2p-1)/(2(2p-r)) <= varpi < 1/2 (lower bound " << lower
          << " for p=" << p << ", r=" << r << ")";
      throw ConfigError(msg.str());
    }
    if (cfg.trunc_scale <= 0.0)
      throw ConfigError("config: truncation scale not resolved (use resolve_config)");
    out.trunc_scale_eff = cfg.trunc_scale;
    out.u_n = cfg.trunc_scale * std::pow(delta_n, cfg.varpi);
  } else {
    out.u_n = std::numeric_limits<double>::infinity();
    out.trunc_scale_eff = std::numeric_limits<double>::infinity();
  }

  if (!(cfg.varpi_prime > 0.0 && cfg.varpi_prime < 0.125)) {
    std::ostringstream msg;
    msg << "config: jump exponent varpi'=" << cfg.varpi_prime
        << " violates 0 < varpi' < 1/8";
    throw ConfigError(msg.str());
  }
  if (cfg.jump_trunc_scale > 0.0) {
    out.jump_scale_eff = cfg.jump_trunc_scale;
    out.u_prime_n = cfg.jump_trunc_scale * std::pow(delta_n, cfg.varpi_prime);
  } else {
    // stays 0 when no series is available; resolve_config supplies the
    // data-driven default
    out.jump_scale_eff = 0.0;
    out.u_prime_n = 0.0;
  }
  return out;
}

ResolvedConfig resolve_config(const EstimatorConfig& cfg, double p,
                              const ObservedSeries& series,
                              bool need_jump_scale) {
  series.validate();
  int N = series.n_increments();
  int k_n = window_size(series.delta_n, cfg.theta);
  if (N < k_n)
    throw ConfigError("series has " + std::to_string(N) +
                      " increments, fewer than one window k_n=" + std::to_string(k_n));

  EstimatorConfig c = cfg;
  if (c.truncation_enabled && c.trunc_scale <= 0.0) {
    // 4 * sqrt(median of per-block realized variance per unit time);
    // block length k_n keeps the median robust to sparse jumps
    std::vector<double> block_rv;
    int nblocks = N / k_n;
    for (int b = 0; b < nblocks; ++b) {
      double rv = 0.0;
      for (int i = b * k_n + 1; i <= (b + 1) * k_n; ++i) {
        double nrm = series.increment_norm(i);
        rv += nrm * nrm;
      }
      block_rv.push_back(rv / (k_n * series.delta_n));
    }
    if (block_rv.empty()) {
      double rv = 0.0;
      for (int i = 1; i <= N; ++i) {
        double nrm = series.increment_norm(i);
        rv += nrm * nrm;
      }
      block_rv.push_back(rv / (N * series.delta_n));
    }
    std::nth_element(block_rv.begin(), block_rv.begin() + block_rv.size() / 2,
                     block_rv.end());
    double med = block_rv[block_rv.size() / 2];
    c.trunc_scale = 4.0 * std::sqrt(std::max(med, 1e-300));
  }

  ResolvedConfig out = validate_config(c, p, c.r_activity, series.delta_n);

  if (c.jump_trunc_scale <= 0.0 && need_jump_scale) {
    // robust scale of the block-difference norms: u'_n = 4.5 * sigma_hat,
    // sigma_hat from the median of ||delta_j chat|| (half-normal factor)
    std::vector<SymMatrix> spots = spot_cov_series(series, out.k_n, out.u_n);
    std::vector<double> norms;
    int M = static_cast<int>(spots.size());
    for (int j = 2;; ++j) {
      int hi = j * out.k_n;      // 0-based index of chat_{j k_n + 1}
      int lo = (j - 2) * out.k_n;
      if (hi >= M) break;
      norms.push_back((spots[hi] - spots[lo]).frobenius_norm());
    }
    double u = 0.0;
    if (!norms.empty()) {
      std::nth_element(norms.begin(), norms.begin() + norms.size() / 2, norms.end());
      double med = norms[norms.size() / 2];
      u = 4.5 * med / 0.6745;
    }
    out.u_prime_n = u;
    out.jump_scale_eff =
        u > 0.0 ? u / std::pow(series.delta_n, c.varpi_prime) : 0.0;
  }
  return out;
}

SymMatrix spot_cov_at(const ObservedSeries& series, int i, int k_n, double u_n) {
  int N = series.n_increments();
  if (k_n < 2) throw ConfigError("spot_cov_at: k_n must be >= 2");
  if (i < 1 || i > N - k_n + 1)
    throw ConfigError("spot_cov_at: window start " + std::to_string(i) +
                      " out of range [1," + std::to_string(N - k_n + 1) + "]");
  int d = series.dim;
  SymMatrix c(d);
  for (int j = 0; j < k_n; ++j) {
    int idx = i + j;
    if (!(series.increment_norm(idx) <= u_n)) continue;
    for (int a = 0; a < d; ++a)
      for (int b = a; b < d; ++b)
        c.set(a, b, c(a, b) + series.increment(idx, a) * series.increment(idx, b));
  }
  c *= 1.0 / (k_n * series.delta_n);
  return c;
}

std::vector<SymMatrix> spot_cov_series(const ObservedSeries& series, int k_n,
                                       double u_n) {
  int N = series.n_increments();
  if (k_n < 2) throw ConfigError("spot_cov_series: k_n must be >= 2");
  if (N < k_n)
    throw ConfigError("spot_cov_series: series has " + std::to_string(N) +
                      " increments, fewer than one window k_n=" + std::to_string(k_n));
  int d = series.dim;
  int M = N - k_n + 1;
  int npair = d * d;

  // one Kahan state per matrix entry; adding and later subtracting the
  // bit-identical outer product keeps the window sum stable over long runs
  std::vector<double> sum(npair, 0.0), comp(npair, 0.0);
  auto kadd = [&](int e, double v) {
    double y = v - comp[e];
    double t = sum[e] + y;
    comp[e] = (t - sum[e]) - y;
    sum[e] = t;
  };
  auto apply = [&](int inc, double sign) {
    if (!(series.increment_norm(inc) <= u_n)) return;
    for (int a = 0; a < d; ++a) {
      double da = series.increment(inc, a);
      for (int b = 0; b < d; ++b)
        kadd(a * d + b, sign * da * series.increment(inc, b));
    }
  };

  std::vector<SymMatrix> out;
  out.reserve(M);
  double scale = 1.0 / (k_n * series.delta_n);
  for (int inc = 1; inc <= k_n; ++inc) apply(inc, +1.0);
  for (int i = 1;; ++i) {
    SymMatrix c(d);
    for (int a = 0; a < d; ++a)
      for (int b = a; b < d; ++b)
        c.set(a, b, 0.5 * (sum[a * d + b] + sum[b * d + a]) * scale);
    out.push_back(std::move(c));
    if (i == M) break;
    apply(i, -1.0);
    apply(i + k_n, +1.0);
  }
  return out;
}

}  // namespace volfn
