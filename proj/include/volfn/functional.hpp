#pragma once

#include <functional>
#include <optional>
#include <string>

#include "volfn/symmatrix.hpp"

namespace volfn {

// Flat d^2 x d^2 array of second partials, index (jk,lm) with all four
// indices running over 0..d-1.
class HessTensor {
 public:
  HessTensor() = default;
  explicit HessTensor(int dim)
      : dim_(dim), a_(static_cast<size_t>(dim) * dim * dim * dim, 0.0) {}
  int dim() const { return dim_; }
  double operator()(int j, int k, int l, int m) const { return a_[idx(j, k, l, m)]; }
  void set(int j, int k, int l, int m, double v) { a_[idx(j, k, l, m)] = v; }
  void add(int j, int k, int l, int m, double v) { a_[idx(j, k, l, m)] += v; }
  const std::vector<double>& data() const { return a_; }

  // sum_{jklm} H(j,k,l,m) y(j,k) y(l,m)
  double contract_pair(const SymMatrix& y) const;

 private:
  size_t idx(int j, int k, int l, int m) const {
    return ((static_cast<size_t>(j) * dim_ + k) * dim_ + l) * dim_ + m;
  }
  int dim_ = 0;
  std::vector<double> a_;
};

enum class DerivativeMode { Analytic, FiniteDifference };

// A real test function g on symmetric PSD matrices together with its first
// and second derivative arrays and polynomial growth exponent p (>= 3, per
// the CLT's growth condition). Partial derivatives follow the symmetrized
// convention: off-diagonal coordinates are treated as (x^{jk}+x^{kj})/2, so
// gradients and Hessians carry the j<->k and l<->m symmetries exactly.
class MatrixFunctional {
 public:
  using EvalFn = std::function<double(const SymMatrix&)>;
  using GradFn = std::function<SymMatrix(const SymMatrix&)>;
  using HessFn = std::function<HessTensor(const SymMatrix&)>;

  // g(x) = x^{(1,1)}; the linear functional for which all nonlinear bias
  // corrections vanish identically
  static MatrixFunctional identity(int dim);
  // g(x) = (x^{(j,k)})^p with 1-based indices; "square"/"cube" are
  // entry_power(1,1,2) and entry_power(1,1,3)
  static MatrixFunctional entry_power(int dim, int j, int k, int p);
  static MatrixFunctional square(int dim) { return entry_power(dim, 1, 1, 2); }
  static MatrixFunctional cube(int dim) { return entry_power(dim, 1, 1, 3); }
  // g(x) = tr(x^p)
  static MatrixFunctional trace_power(int dim, int p);

  // "identity" | "square" | "cube" | "trace_power:k" | "entry_power:j,k,p"
  static MatrixFunctional from_name(const std::string& name, int dim);

  // User-supplied functional; missing derivatives fall back to central
  // finite differences with relative step 1e-5*(1+||x||). Functionals that
  // only make sense on PSD arguments can set requires_psd: arguments with
  // negative eigenvalues (e.g. x+wy inside the G kernels for a signed jump
  // y) are spectrally projected onto the PSD cone before evaluation.
  static MatrixFunctional custom(std::string name, int dim, double growth_exponent,
                                 EvalFn eval, std::optional<GradFn> grad = {},
                                 std::optional<HessFn> hess = {},
                                 bool requires_psd = false);

  double eval(const SymMatrix& x) const;
  SymMatrix grad(const SymMatrix& x) const;
  HessTensor hess(const SymMatrix& x) const;

  int dim() const { return dim_; }
  double growth_exponent() const { return growth_exponent_; }
  const std::string& name() const { return name_; }
  DerivativeMode derivative_mode() const { return mode_; }

  // polynomial degree when known, -1 otherwise
  int degree() const { return degree_; }
  // linear and quadratic g have G'' == 0, so the jump correction is skipped
  bool jump_kernel_vanishes() const { return degree_ >= 0 && degree_ <= 2; }

  // Finite-difference derivatives regardless of analytic availability
  // (exposed so analytic/FD agreement can be checked).
  SymMatrix fd_grad(const SymMatrix& x) const;
  HessTensor fd_hess(const SymMatrix& x) const;

 private:
  MatrixFunctional() = default;
  void check_arg(const SymMatrix& x) const;

  std::string name_;
  int dim_ = 0;
  double growth_exponent_ = 3.0;
  int degree_ = -1;
  DerivativeMode mode_ = DerivativeMode::Analytic;
  EvalFn eval_;
  std::optional<GradFn> grad_;
  std::optional<HessFn> hess_;
};

}  // namespace volfn
