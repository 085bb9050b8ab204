#include "volfn/simkit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "volfn/errors.hpp"
#include "volfn/kernels.hpp"
#include "volfn/numutil.hpp"

namespace volfn {

double Rng::normal() { return normal_quantile(uniform()); }

int Rng::poisson(double mean) {
  if (mean < 0.0) throw ConfigError("poisson: negative mean");
  int total = 0;
  // product method in chunks; exp(-500) stays normal-range
  while (mean > 0.0) {
    double chunk = std::min(mean, 500.0);
    mean -= chunk;
    double limit = std::exp(-chunk);
    double prod = uniform();
    while (prod > limit) {
      ++total;
      prod *= uniform();
    }
  }
  return total;
}

namespace {

std::vector<double> broadcast(const std::vector<double>& v, int dim,
                              const char* what) {
  if (v.empty()) return std::vector<double>(dim, 0.0);
  if (static_cast<int>(v.size()) == 1) return std::vector<double>(dim, v[0]);
  if (static_cast<int>(v.size()) != dim)
    throw ConfigError(std::string("scenario: ") + what + " needs 1 or dim entries");
  return v;
}

// lower Cholesky with zero-pivot tolerance for PSD (possibly singular) input
std::vector<double> cholesky_lower(const SymMatrix& a) {
  int n = a.dim();
  std::vector<double> l(static_cast<size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double sum = 0.0;
      for (int k = 0; k < j; ++k) sum += l[i * n + k] * l[j * n + k];
      if (i == j) {
        double diag = a(i, i) - sum;
        if (diag < -1e-12)
          throw ConfigError("scenario: constant covariance is not PSD");
        l[i * n + j] = diag > 0.0 ? std::sqrt(diag) : 0.0;
      } else {
        double denom = l[j * n + j];
        l[i * n + j] = denom > 0.0 ? (a(i, j) - sum) / denom : 0.0;
      }
    }
  }
  return l;
}

nlohmann::json matrix_to_json(const SymMatrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int j = 0; j < m.dim(); ++j) {
    nlohmann::json row = nlohmann::json::array();
    for (int k = 0; k < m.dim(); ++k) row.push_back(m(j, k));
    rows.push_back(row);
  }
  return rows;
}

SymMatrix matrix_from_json(const nlohmann::json& j, int dim) {
  if (j.is_number()) {
    if (dim != 1) {
      // scalar shorthand: v * identity-diagonal
      std::vector<double> diag(dim, j.get<double>());
      return SymMatrix::diagonal(diag);
    }
    return SymMatrix::scalar(j.get<double>());
  }
  if (j.is_array() && !j.empty() && j[0].is_number()) {
    std::vector<double> diag = j.get<std::vector<double>>();
    if (static_cast<int>(diag.size()) != dim)
      throw ConfigError("scenario: diagonal list length does not match dim");
    return SymMatrix::diagonal(diag);
  }
  if (j.is_array()) {
    std::vector<double> full;
    for (const auto& row : j)
      for (const auto& v : row) full.push_back(v.get<double>());
    if (static_cast<int>(full.size()) != dim * dim)
      throw ConfigError("scenario: matrix shape does not match dim");
    return SymMatrix(dim, full);
  }
  throw ConfigError("scenario: cannot parse matrix value");
}

}  // namespace

void ScenarioSpec::validate() const {
  if (dim < 1) throw ConfigError("scenario: dim must be >= 1");
  if (horizon <= 0.0) throw ConfigError("scenario: horizon must be positive");
  if (fine_steps_per_obs < 1)
    throw ConfigError("scenario: fine_steps_per_obs must be >= 1");
  if (!drift.empty() && static_cast<int>(drift.size()) != 1 &&
      static_cast<int>(drift.size()) != dim)
    throw ConfigError("scenario: drift needs 1 or dim entries");
  if (vol.c0.dim() != dim) throw ConfigError("scenario: c0 dimension mismatch");
  if (vol.model == VolSpec::Model::SquareRoot) {
    for (double k : vol.kappa)
      if (k < 0.0) throw ConfigError("scenario: kappa must be >= 0");
    for (double c : vol.cbar)
      if (c < 0.0) throw ConfigError("scenario: cbar must be >= 0");
    for (double x : vol.xi)
      if (x < 0.0) throw ConfigError("scenario: xi must be >= 0");
    for (double r : vol.rho)
      if (!(r >= -1.0 && r <= 1.0))
        throw ConfigError("scenario: rho must lie in [-1,1]");
    for (int j = 0; j < dim; ++j)
      if (vol.c0(j, j) < 0.0)
        throw ConfigError("scenario: square-root c0 must be nonnegative");
  } else {
    if (min_eigenvalue(vol.c0) < -1e-12)
      throw ConfigError("scenario: constant c0 must be PSD");
  }
  if (c_jumps.rate < 0.0) throw ConfigError("scenario: c-jump rate must be >= 0");
  for (const auto& sj : c_jumps.scheduled) {
    if (!(sj.time > 0.0 && sj.time <= horizon))
      throw ConfigError("scenario: scheduled c-jump time outside (0, horizon]");
    if (sj.size < 0.0)
      throw ConfigError("scenario: scheduled c-jump size must be >= 0 to keep c PSD");
  }
  if (x_jumps.rate < 0.0) throw ConfigError("scenario: x-jump rate must be >= 0");
  if (x_jumps.rate > 0.0 && x_jumps.size < 0.0)
    throw ConfigError("scenario: x-jump size must be >= 0");
  if (!(x_jumps.r_activity >= 0.0 && x_jumps.r_activity < 1.0))
    throw ConfigError("scenario: activity label r must lie in [0,1)");
}

nlohmann::json ScenarioSpec::to_json() const {
  nlohmann::json vol_j;
  if (vol.model == VolSpec::Model::Constant) {
    vol_j["model"] = "constant";
    vol_j["c0"] = matrix_to_json(vol.c0);
  } else {
    vol_j["model"] = "square_root";
    vol_j["kappa"] = vol.kappa;
    vol_j["cbar"] = vol.cbar;
    vol_j["xi"] = vol.xi;
    vol_j["rho"] = vol.rho;
    std::vector<double> diag(dim);
    for (int j = 0; j < dim; ++j) diag[j] = vol.c0(j, j);
    vol_j["c0"] = diag;
  }
  nlohmann::json cj{{"rate", c_jumps.rate},
                    {"size_meanlog", c_jumps.size_meanlog},
                    {"size_sdlog", c_jumps.size_sdlog}};
  nlohmann::json sched = nlohmann::json::array();
  for (const auto& s : c_jumps.scheduled)
    sched.push_back({{"time", s.time}, {"size", s.size}});
  cj["scheduled"] = sched;
  nlohmann::json xj{
      {"rate", x_jumps.rate},
      {"law", x_jumps.law == XJumpSpec::Law::TwoPoint ? "two_point" : "normal"},
      {"size", x_jumps.size},
      {"r", x_jumps.r_activity}};
  return nlohmann::json{{"dim", dim},
                        {"horizon", horizon},
                        {"fine_steps_per_obs", fine_steps_per_obs},
                        {"seed", seed},
                        {"drift", drift},
                        {"vol", vol_j},
                        {"c_jumps", cj},
                        {"x_jumps", xj}};
}

ScenarioSpec ScenarioSpec::from_json(const nlohmann::json& j) {
  ScenarioSpec s;
  s.dim = j.value("dim", 1);
  s.horizon = j.value("horizon", 1.0);
  s.fine_steps_per_obs = j.value("fine_steps_per_obs", 10);
  s.seed = j.value("seed", static_cast<std::uint64_t>(1));
  if (j.contains("drift")) {
    if (j["drift"].is_number())
      s.drift = {j["drift"].get<double>()};
    else
      s.drift = j["drift"].get<std::vector<double>>();
  }
  if (!j.contains("vol")) throw ConfigError("scenario: missing 'vol' block");
  const auto& v = j["vol"];
  std::string model = v.value("model", "constant");
  if (model == "constant") {
    s.vol.model = VolSpec::Model::Constant;
    if (!v.contains("c0")) throw ConfigError("scenario: constant vol needs c0");
    s.vol.c0 = matrix_from_json(v["c0"], s.dim);
  } else if (model == "square_root") {
    s.vol.model = VolSpec::Model::SquareRoot;
    auto grab = [&](const char* key) {
      if (!v.contains(key))
        throw ConfigError(std::string("scenario: square_root vol needs ") + key);
      if (v[key].is_number()) return std::vector<double>{v[key].get<double>()};
      return v[key].get<std::vector<double>>();
    };
    s.vol.kappa = broadcast(grab("kappa"), s.dim, "kappa");
    s.vol.cbar = broadcast(grab("cbar"), s.dim, "cbar");
    s.vol.xi = broadcast(grab("xi"), s.dim, "xi");
    if (v.contains("rho")) {
      auto rho = v["rho"].is_number() ? std::vector<double>{v["rho"].get<double>()}
                                      : v["rho"].get<std::vector<double>>();
      s.vol.rho = broadcast(rho, s.dim, "rho");
    } else {
      s.vol.rho.assign(s.dim, 0.0);
    }
    if (v.contains("c0"))
      s.vol.c0 = matrix_from_json(v["c0"], s.dim);
    else
      s.vol.c0 = SymMatrix::diagonal(s.vol.cbar);
  } else {
    throw ConfigError("scenario: unknown vol model '" + model + "'");
  }
  if (j.contains("c_jumps")) {
    const auto& c = j["c_jumps"];
    s.c_jumps.rate = c.value("rate", 0.0);
    s.c_jumps.size_meanlog = c.value("size_meanlog", -4.0);
    s.c_jumps.size_sdlog = c.value("size_sdlog", 0.5);
    if (c.contains("scheduled"))
      for (const auto& e : c["scheduled"])
        s.c_jumps.scheduled.push_back(
            {e.at("time").get<double>(), e.at("size").get<double>()});
  }
  if (j.contains("x_jumps")) {
    const auto& x = j["x_jumps"];
    s.x_jumps.rate = x.value("rate", 0.0);
    std::string law = x.value("law", "two_point");
    if (law == "two_point")
      s.x_jumps.law = XJumpSpec::Law::TwoPoint;
    else if (law == "normal")
      s.x_jumps.law = XJumpSpec::Law::Normal;
    else
      throw ConfigError("scenario: unknown x-jump law '" + law + "'");
    s.x_jumps.size = x.value("size", 0.0);
    s.x_jumps.r_activity = x.value("r", 0.0);
  }
  s.validate();
  return s;
}

ScenarioSpec ScenarioSpec::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("scenario file '" + path + "': " + e.what());
  }
  return from_json(j);
}

void ScenarioSpec::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << to_json().dump(2) << "\n";
  if (!out) throw IoError("failed writing '" + path + "'");
}

ScenarioSpec ScenarioSpec::constant_vol(int dim, const SymMatrix& c0,
                                        double horizon, std::uint64_t seed) {
  ScenarioSpec s;
  s.dim = dim;
  s.horizon = horizon;
  s.seed = seed;
  s.vol.model = VolSpec::Model::Constant;
  s.vol.c0 = c0;
  return s;
}

ScenarioSpec ScenarioSpec::square_root_vol(double kappa, double cbar, double xi,
                                           double rho, double horizon,
                                           std::uint64_t seed) {
  ScenarioSpec s;
  s.dim = 1;
  s.horizon = horizon;
  s.seed = seed;
  s.vol.model = VolSpec::Model::SquareRoot;
  s.vol.kappa = {kappa};
  s.vol.cbar = {cbar};
  s.vol.xi = {xi};
  s.vol.rho = {rho};
  s.vol.c0 = SymMatrix::scalar(cbar);
  return s;
}

SimulatedPath simulate_path(const ScenarioSpec& spec, double delta_n) {
  spec.validate();
  if (delta_n <= 0.0) throw ConfigError("simulate_path: delta_n must be positive");
  double n_real = spec.horizon / delta_n;
  int n_obs = static_cast<int>(std::floor(n_real + 0.5));
  if (n_obs < 2 || std::abs(n_real - n_obs) > 1e-6 * n_real)
    throw ConfigError("simulate_path: horizon must be an integer multiple of delta_n");

  const int d = spec.dim;
  const int m = spec.fine_steps_per_obs;
  const int F = n_obs * m;
  const double dt = delta_n / m;
  const double sqdt = std::sqrt(dt);
  const double t_end = spec.horizon;

  Rng rng(spec.seed);

  // jump bookkeeping is drawn up front, in a fixed order
  struct PendingXJump {
    double time;
    std::vector<double> size;
  };
  std::vector<PendingXJump> xj;
  if (spec.x_jumps.rate > 0.0) {
    int count = rng.poisson(spec.x_jumps.rate * t_end);
    for (int q = 0; q < count; ++q) {
      PendingXJump e;
      e.time = rng.uniform() * t_end;
      e.size.resize(d);
      for (int a = 0; a < d; ++a) {
        if (spec.x_jumps.law == XJumpSpec::Law::TwoPoint)
          e.size[a] = (rng.uniform() < 0.5 ? -1.0 : 1.0) * spec.x_jumps.size;
        else
          e.size[a] = spec.x_jumps.size * rng.normal();
      }
      xj.push_back(std::move(e));
    }
  }
  struct PendingCJump {
    double time;
    double diag_add;
  };
  std::vector<PendingCJump> cj;
  if (spec.c_jumps.rate > 0.0) {
    int count = rng.poisson(spec.c_jumps.rate * t_end);
    for (int q = 0; q < count; ++q) {
      double time = rng.uniform() * t_end;
      double size = std::exp(spec.c_jumps.size_meanlog +
                             spec.c_jumps.size_sdlog * rng.normal());
      cj.push_back({time, size});
    }
  }
  for (const auto& s : spec.c_jumps.scheduled) cj.push_back({s.time, s.size});
  auto by_time = [](const auto& a, const auto& b) { return a.time < b.time; };
  std::sort(xj.begin(), xj.end(), by_time);
  std::sort(cj.begin(), cj.end(), by_time);

  const std::vector<double> drift = broadcast(spec.drift, d, "drift");
  const bool cir = spec.vol.model == VolSpec::Model::SquareRoot;
  std::vector<double> kappa, cbar, xi, rho, rho_perp;
  std::vector<double> chol;
  if (cir) {
    kappa = spec.vol.kappa;
    cbar = spec.vol.cbar;
    xi = spec.vol.xi;
    rho = spec.vol.rho;
    rho_perp.resize(d);
    for (int j = 0; j < d; ++j) rho_perp[j] = std::sqrt(1.0 - rho[j] * rho[j]);
  } else {
    chol = cholesky_lower(spec.vol.c0);
  }

  SimulatedPath path;
  path.fine_per_obs = m;
  path.fine_dt = dt;
  path.fine_x.assign(static_cast<size_t>(F + 1) * d, 0.0);
  path.c_fine.reserve(F + 1);
  path.volvol_diag.assign(static_cast<size_t>(F + 1) * d, 0.0);

  SymMatrix c_cur = spec.vol.c0;
  std::vector<double> x_cur(d, 0.0);
  auto record = [&](int k) {
    for (int a = 0; a < d; ++a)
      path.fine_x[static_cast<size_t>(k) * d + a] = x_cur[a];
    path.c_fine.push_back(c_cur);
    if (cir)
      for (int j = 0; j < d; ++j)
        path.volvol_diag[static_cast<size_t>(k) * d + j] =
            xi[j] * xi[j] * c_cur(j, j);
  };
  record(0);

  size_t next_x = 0, next_c = 0;
  std::vector<double> z(d), zp(d);
  for (int k = 1; k <= F; ++k) {
    // the last step absorbs any event pushed past F*dt by rounding
    double t1 = (k == F) ? std::numeric_limits<double>::infinity()
                         : k * dt;
    // X diffusion with the left-point volatility
    for (int a = 0; a < d; ++a) z[a] = rng.normal();
    if (cir) {
      for (int a = 0; a < d; ++a)
        x_cur[a] += drift[a] * dt + std::sqrt(c_cur(a, a)) * z[a] * sqdt;
      for (int j = 0; j < d; ++j) zp[j] = rng.normal();
      for (int j = 0; j < d; ++j) {
        double cj_cur = std::max(c_cur(j, j), 0.0);
        double dw = (rho[j] * z[j] + rho_perp[j] * zp[j]) * sqdt;
        double next = cj_cur + kappa[j] * (cbar[j] - cj_cur) * dt +
                      xi[j] * std::sqrt(cj_cur) * dw;
        c_cur.set(j, j, std::max(next, 0.0));  // full-truncation step
      }
    } else {
      for (int a = 0; a < d; ++a) {
        double diff = 0.0;
        for (int b = 0; b <= a; ++b) diff += chol[a * d + b] * z[b];
        x_cur[a] += drift[a] * dt + diff * sqdt;
      }
    }
    // jumps inside (t1 - dt, t1] land atomically at this fine step
    bool c_jumped = false;
    while (next_c < cj.size() && cj[next_c].time <= t1) {
      CJumpEvent ev;
      ev.time = cj[next_c].time;
      ev.pre = c_cur;
      SymMatrix add(d);
      for (int j = 0; j < d; ++j) add.set(j, j, cj[next_c].diag_add);
      ev.size = add;
      c_cur += add;
      c_jumped = true;
      path.c_jump_log.push_back(std::move(ev));
      ++next_c;
    }
    if (c_jumped && !cir) chol = cholesky_lower(c_cur);
    while (next_x < xj.size() && xj[next_x].time <= t1) {
      for (int a = 0; a < d; ++a) x_cur[a] += xj[next_x].size[a];
      path.x_jump_times.push_back(xj[next_x].time);
      ++next_x;
    }
    record(k);
  }

  path.series.dim = d;
  path.series.delta_n = delta_n;
  path.series.values.resize(static_cast<size_t>(n_obs + 1) * d);
  for (int i = 0; i <= n_obs; ++i)
    for (int a = 0; a < d; ++a)
      path.series.values[static_cast<size_t>(i) * d + a] =
          path.fine_x[static_cast<size_t>(i) * m * d + a];
  return path;
}

SimulatedPath SimulatedPath::coarsen(int factor) const {
  if (factor < 1 || fine_per_obs % factor != 0)
    throw ConfigError("coarsen: factor must divide fine_per_obs");
  if (factor == 1) return *this;
  SimulatedPath out;
  out.series = series;
  out.fine_per_obs = fine_per_obs / factor;
  out.fine_dt = fine_dt * factor;
  out.c_jump_log = c_jump_log;
  out.x_jump_times = x_jump_times;
  int d = series.dim;
  int Fc = n_fine_steps() / factor;
  out.fine_x.resize(static_cast<size_t>(Fc + 1) * d);
  out.volvol_diag.resize(static_cast<size_t>(Fc + 1) * d);
  out.c_fine.reserve(Fc + 1);
  for (int k = 0; k <= Fc; ++k) {
    for (int a = 0; a < d; ++a) {
      out.fine_x[static_cast<size_t>(k) * d + a] = fine_x_at(k * factor, a);
      out.volvol_diag[static_cast<size_t>(k) * d + a] = volvol_at(k * factor, a);
    }
    out.c_fine.push_back(c_fine[static_cast<size_t>(k) * factor]);
  }
  return out;
}

double true_integrated_functional(const SimulatedPath& path,
                                  const MatrixFunctional& g) {
  if (path.c_fine.empty()) throw ConfigError("path has no fine c grid");
  KahanSum acc;
  int F = path.n_fine_steps();
  for (int k = 0; k < F; ++k) acc.add(g.eval(path.c_fine[k]));
  return acc.value() * path.fine_dt;
}

double true_jump_functional(const SimulatedPath& path, const JumpKernel& F) {
  KahanSum acc;
  for (const auto& ev : path.c_jump_log) acc.add(F(ev.pre, ev.size));
  return acc.value();
}

TheoreticalLimits theoretical_limits(const SimulatedPath& path,
                                     const MatrixFunctional& g, double theta,
                                     int quad_nodes) {
  if (path.c_fine.empty()) throw ConfigError("path has no fine c grid");
  TheoreticalLimits out;
  int d = path.series.dim;
  int F = path.n_fine_steps();
  out.a1 = -(theta / 2.0) * (g.eval(path.c_fine.front()) + g.eval(path.c_fine.back()));
  KahanSum acc_h, acc_hbar, acc_vv;
  for (int k = 0; k < F; ++k) {
    const SymMatrix& c = path.c_fine[k];
    acc_h.add(h_from_g(g, c));
    acc_hbar.add(hbar_from_g(g, c));
    double vv = 0.0;
    bool any = false;
    for (int j = 0; j < d; ++j)
      if (path.volvol_at(k, j) != 0.0) any = true;
    if (any) {
      HessTensor H = g.hess(c);
      for (int j = 0; j < d; ++j) vv += H(j, j, j, j) * path.volvol_at(k, j);
    }
    acc_vv.add(vv);
  }
  out.a2 = acc_h.value() * path.fine_dt / theta;
  out.z_var = acc_hbar.value() * path.fine_dt;
  out.a3 = -(theta / 12.0) * acc_vv.value() * path.fine_dt;
  KahanSum acc_j;
  for (const auto& ev : path.c_jump_log)
    acc_j.add(bias_kernel_G(g, ev.pre, ev.size, quad_nodes));
  out.a4 = theta * acc_j.value();
  return out;
}

}  // namespace volfn
