#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "volfn/functional.hpp"
#include "volfn/jumpfun.hpp"
#include "volfn/spotvol.hpp"
#include "volfn/symmatrix.hpp"

namespace volfn {

// Deterministic across platforms: raw bits come from mt19937_64 and all
// variates are derived by fixed arithmetic (inverse-CDF normals, product
// Poisson), not by implementation-defined std distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  // uniform on (0,1), never returns an endpoint
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
  }
  double normal();
  int poisson(double mean);

 private:
  std::mt19937_64 engine_;
};

struct VolSpec {
  enum class Model { Constant, SquareRoot };
  Model model = Model::Constant;
  // Constant: full starting (and permanent, jumps aside) matrix.
  // SquareRoot: diagonal entries evolve as independent square-root
  // processes; c0 holds the starting diagonal.
  SymMatrix c0;
  std::vector<double> kappa;  // per-component mean-reversion rate
  std::vector<double> cbar;   // per-component long-run level
  std::vector<double> xi;     // per-component vol-of-vol
  std::vector<double> rho;    // leverage: corr(c-driver_j, X-driver_j)
};

struct ScheduledCJump {
  double time = 0.0;
  double size = 0.0;  // added to every diagonal entry; must be >= 0
};

struct CJumpSpec {
  double rate = 0.0;  // compound Poisson intensity
  double size_meanlog = -4.0;
  double size_sdlog = 0.5;  // lognormal size added to every diagonal entry
  std::vector<ScheduledCJump> scheduled;
};

struct XJumpSpec {
  enum class Law { TwoPoint, Normal };
  double rate = 0.0;
  Law law = Law::TwoPoint;
  double size = 0.0;     // two_point: +-size per component; normal: sd
  double r_activity = 0.0;  // declared activity label (finite activity here)
};

struct ScenarioSpec {
  int dim = 1;
  double horizon = 1.0;
  int fine_steps_per_obs = 10;
  std::uint64_t seed = 1;
  std::vector<double> drift;  // empty = zero drift
  VolSpec vol;
  CJumpSpec c_jumps;
  XJumpSpec x_jumps;

  void validate() const;
  nlohmann::json to_json() const;
  static ScenarioSpec from_json(const nlohmann::json& j);
  static ScenarioSpec load(const std::string& path);
  void save(const std::string& path) const;

  // convenience builders used across tests and examples
  static ScenarioSpec constant_vol(int dim, const SymMatrix& c0, double horizon,
                                   std::uint64_t seed);
  static ScenarioSpec square_root_vol(double kappa, double cbar, double xi,
                                      double rho, double horizon,
                                      std::uint64_t seed);
};

struct CJumpEvent {
  double time = 0.0;
  SymMatrix size;
  SymMatrix pre;  // left limit of c at the jump time
};

// A simulated (X, c) pair with every piece of ground truth the validation
// oracles need: the fine c path, the vol-of-vol path and the c-jump log.
struct SimulatedPath {
  ObservedSeries series;
  int fine_per_obs = 1;
  double fine_dt = 0.0;
  std::vector<double> fine_x;        // (F+1) x dim
  std::vector<SymMatrix> c_fine;     // F+1 right-continuous values
  std::vector<double> volvol_diag;   // (F+1) x dim, entry j: qv density of c^{jj}
  std::vector<CJumpEvent> c_jump_log;
  std::vector<double> x_jump_times;

  int n_fine_steps() const { return static_cast<int>(c_fine.size()) - 1; }
  double fine_x_at(int k, int a) const {
    return fine_x[static_cast<size_t>(k) * series.dim + a];
  }
  double volvol_at(int k, int j) const {
    return volvol_diag[static_cast<size_t>(k) * series.dim + j];
  }

  // The same trajectory recorded on a grid coarsened by `factor`
  // (fine_per_obs must be divisible by it). Used by grid-refinement oracles.
  SimulatedPath coarsen(int factor) const;
};

SimulatedPath simulate_path(const ScenarioSpec& spec, double delta_n);

// V(g)_t = int_0^t g(c_s) ds by left-point Riemann sum on the fine grid.
double true_integrated_functional(const SimulatedPath& path,
                                  const MatrixFunctional& g);

// V(F)_t = sum over logged jumps of F(c_{s-}, dc_s); exact given the log.
double true_jump_functional(const SimulatedPath& path, const JumpKernel& F);

// The limiting bias terms and conditional variance for this path.
struct TheoreticalLimits {
  double a1 = 0.0;  // border bias   -(theta/2)(g(c_0)+g(c_t))
  double a2 = 0.0;  // statistical   V(h)_t / theta
  double a3 = 0.0;  // vol-of-vol    -(theta/12) sum d2g : ctilde
  double a4 = 0.0;  // c-jump        theta sum G(c_-, dc)
  double z_var = 0.0;  // V(hbar)_t
};
TheoreticalLimits theoretical_limits(const SimulatedPath& path,
                                     const MatrixFunctional& g, double theta,
                                     int quad_nodes = 16);

}  // namespace volfn
