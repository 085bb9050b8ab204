#include "volfn/functional.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "volfn/errors.hpp"
#include "volfn/numutil.hpp"

namespace volfn {

double HessTensor::contract_pair(const SymMatrix& y) const {
  double s = 0.0;
  int d = dim_;
  for (int j = 0; j < d; ++j)
    for (int k = 0; k < d; ++k)
      for (int l = 0; l < d; ++l)
        for (int m = 0; m < d; ++m) s += (*this)(j, k, l, m) * y(j, k) * y(l, m);
  return s;
}

void MatrixFunctional::check_arg(const SymMatrix& x) const {
  if (x.dim() != dim_)
    throw ConfigError("functional '" + name_ + "': argument dimension " +
                      std::to_string(x.dim()) + " does not match declared " +
                      std::to_string(dim_));
}

double MatrixFunctional::eval(const SymMatrix& x) const {
  check_arg(x);
  return eval_(x);
}

SymMatrix MatrixFunctional::grad(const SymMatrix& x) const {
  check_arg(x);
  if (grad_) return (*grad_)(x);
  return fd_grad(x);
}

HessTensor MatrixFunctional::hess(const SymMatrix& x) const {
  check_arg(x);
  if (hess_) return (*hess_)(x);
  return fd_hess(x);
}

SymMatrix MatrixFunctional::fd_grad(const SymMatrix& x) const {
  check_arg(x);
  int d = dim_;
  double h = 1e-5 * (1.0 + x.frobenius_norm());
  SymMatrix g(d);
  for (int j = 0; j < d; ++j)
    for (int k = j; k < d; ++k) {
      // symmetric coordinate bump: h/2 on each of (j,k),(k,j) off-diagonal
      double bump = (j == k) ? h : 0.5 * h;
      SymMatrix xp = x, xm = x;
      xp.set(j, k, x(j, k) + bump);
      xm.set(j, k, x(j, k) - bump);
      g.set(j, k, (eval_(xp) - eval_(xm)) / (2.0 * h));
    }
  return g;
}

HessTensor MatrixFunctional::fd_hess(const SymMatrix& x) const {
  check_arg(x);
  int d = dim_;
  double h = 1e-5 * (1.0 + x.frobenius_norm());
  HessTensor H(d);
  auto bumped = [&](const SymMatrix& base, int j, int k, double amount) {
    SymMatrix m = base;
    double bump = (j == k) ? amount : 0.5 * amount;
    m.set(j, k, base(j, k) + bump);
    return m;
  };
  for (int j = 0; j < d; ++j)
    for (int k = j; k < d; ++k)
      for (int l = 0; l < d; ++l)
        for (int m = l; m < d; ++m) {
          if ((l * d + m) < (j * d + k)) continue;  // fill by (jk,lm) symmetry
          double v;
          if (j == l && k == m) {
            SymMatrix xp = bumped(x, j, k, h);
            SymMatrix xm = bumped(x, j, k, -h);
            v = (eval_(xp) - 2.0 * eval_(x) + eval_(xm)) / (h * h);
          } else {
            SymMatrix xpp = bumped(bumped(x, j, k, h), l, m, h);
            SymMatrix xpm = bumped(bumped(x, j, k, h), l, m, -h);
            SymMatrix xmp = bumped(bumped(x, j, k, -h), l, m, h);
            SymMatrix xmm = bumped(bumped(x, j, k, -h), l, m, -h);
            v = (eval_(xpp) - eval_(xpm) - eval_(xmp) + eval_(xmm)) / (4.0 * h * h);
          }
          // propagate to all index images under j<->k, l<->m, (jk)<->(lm)
          int js[2] = {j, k}, ks[2] = {k, j}, ls[2] = {l, m}, ms[2] = {m, l};
          for (int u = 0; u < 2; ++u)
            for (int w = 0; w < 2; ++w) {
              H.set(js[u], ks[u], ls[w], ms[w], v);
              H.set(ls[w], ms[w], js[u], ks[u], v);
            }
        }
  return H;
}

MatrixFunctional MatrixFunctional::identity(int dim) {
  return entry_power(dim, 1, 1, 1);
}

MatrixFunctional MatrixFunctional::entry_power(int dim, int j, int k, int p) {
  if (dim < 1) throw ConfigError("entry_power: dimension must be positive");
  if (j < 1 || j > dim || k < 1 || k > dim)
    throw ConfigError("entry_power: entry indices out of range");
  if (p < 1) throw ConfigError("entry_power: power must be >= 1");
  int a = j - 1, b = k - 1;
  MatrixFunctional f;
  if (p == 1 && j == 1 && k == 1)
    f.name_ = "identity";
  else if (p == 2 && j == 1 && k == 1)
    f.name_ = "square";
  else if (p == 3 && j == 1 && k == 1)
    f.name_ = "cube";
  else
    f.name_ = "entry_power:" + std::to_string(j) + "," + std::to_string(k) + "," +
              std::to_string(p);
  f.dim_ = dim;
  f.degree_ = p;
  f.growth_exponent_ = std::max(3.0, static_cast<double>(p));
  f.eval_ = [a, b, p](const SymMatrix& x) { return int_pow(x(a, b), p); };
  f.grad_ = [dim, a, b, p](const SymMatrix& x) {
    SymMatrix g(dim);
    double v = p * int_pow(x(a, b), p - 1);
    // symmetrized convention: d/dx^{ab} of ((x^{ab}+x^{ba})/2)^p
    g.set(a, b, a == b ? v : 0.5 * v);
    return g;
  };
  f.hess_ = [dim, a, b, p](const SymMatrix& x) {
    HessTensor H(dim);
    if (p >= 2) {
      double v = p * (p - 1) * int_pow(x(a, b), p - 2);
      double w = (a == b) ? v : 0.25 * v;
      H.add(a, b, a, b, w);
      if (a != b) {
        H.add(a, b, b, a, w);
        H.add(b, a, a, b, w);
        H.add(b, a, b, a, w);
      }
    }
    return H;
  };
  return f;
}

MatrixFunctional MatrixFunctional::trace_power(int dim, int p) {
  if (dim < 1) throw ConfigError("trace_power: dimension must be positive");
  if (p < 1) throw ConfigError("trace_power: power must be >= 1");
  MatrixFunctional f;
  f.name_ = "trace_power:" + std::to_string(p);
  f.dim_ = dim;
  f.degree_ = p;
  f.growth_exponent_ = std::max(3.0, static_cast<double>(p));
  f.eval_ = [p](const SymMatrix& x) { return sym_power(x, p).trace(); };
  // d tr(x^p) / dx^{jk} = p (x^{p-1})^{jk} for symmetric x
  f.grad_ = [p](const SymMatrix& x) {
    SymMatrix g = sym_power(x, p - 1);
    g *= static_cast<double>(p);
    return g;
  };
  // d^2 tr(x^p) = p * sum_{r=0}^{p-2} (x^r)^{kl} (x^{p-2-r})^{mj}, then
  // symmetrized over j<->k and l<->m
  f.hess_ = [dim, p](const SymMatrix& x) {
    HessTensor H(dim);
    if (p < 2) return H;
    std::vector<SymMatrix> pw(p);
    pw[0] = SymMatrix::identity(dim);
    for (int r = 1; r < p; ++r) pw[r] = sym_product(pw[r - 1], x);
    for (int j = 0; j < dim; ++j)
      for (int k = 0; k < dim; ++k)
        for (int l = 0; l < dim; ++l)
          for (int m = 0; m < dim; ++m) {
            double s = 0.0;
            for (int r = 0; r <= p - 2; ++r) {
              // raw second partial of tr(X^p) wrt X_{jk}, X_{lm} is
              // sum_r (X^r)_{kl} (X^{p-2-r})_{mj}; average the 4 images
              s += 0.25 * (pw[r](k, l) * pw[p - 2 - r](m, j) +
                           pw[r](j, l) * pw[p - 2 - r](m, k) +
                           pw[r](k, m) * pw[p - 2 - r](l, j) +
                           pw[r](j, m) * pw[p - 2 - r](l, k));
            }
            H.set(j, k, l, m, p * s);
          }
    return H;
  };
  return f;
}

MatrixFunctional MatrixFunctional::custom(std::string name, int dim,
                                          double growth_exponent, EvalFn eval,
                                          std::optional<GradFn> grad,
                                          std::optional<HessFn> hess,
                                          bool requires_psd) {
  if (growth_exponent < 3.0)
    throw ConfigError("custom functional: growth exponent must be >= 3");
  MatrixFunctional f;
  f.name_ = std::move(name);
  f.dim_ = dim;
  f.growth_exponent_ = growth_exponent;
  if (requires_psd) {
    f.eval_ = [inner = std::move(eval)](const SymMatrix& x) {
      if (min_eigenvalue(x) < 0.0) return inner(psd_project(x));
      return inner(x);
    };
  } else {
    f.eval_ = std::move(eval);
  }
  f.grad_ = std::move(grad);
  f.hess_ = std::move(hess);
  f.mode_ = (f.grad_ && f.hess_) ? DerivativeMode::Analytic
                                 : DerivativeMode::FiniteDifference;
  return f;
}

MatrixFunctional MatrixFunctional::from_name(const std::string& name, int dim) {
  if (name == "identity") return identity(dim);
  if (name == "square") return square(dim);
  if (name == "cube") return cube(dim);
  auto colon = name.find(':');
  std::string head = name.substr(0, colon);
  try {
    if (head == "trace_power" && colon != std::string::npos) {
      int p = std::stoi(name.substr(colon + 1));
      return trace_power(dim, p);
    }
    if (head == "entry_power" && colon != std::string::npos) {
      std::string rest = name.substr(colon + 1);
      auto c1 = rest.find(',');
      auto c2 = rest.find(',', c1 + 1);
      if (c1 == std::string::npos || c2 == std::string::npos)
        throw ConfigError("entry_power spec needs j,k,p");
      int j = std::stoi(rest.substr(0, c1));
      int k = std::stoi(rest.substr(c1 + 1, c2 - c1 - 1));
      int p = std::stoi(rest.substr(c2 + 1));
      return entry_power(dim, j, k, p);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError("could not parse functional name '" + name + "'");
  }
  throw ConfigError("unknown functional '" + name +
                    "' (expected identity, square, cube, trace_power:k or "
                    "entry_power:j,k,p)");
}

}  // namespace volfn
