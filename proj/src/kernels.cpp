#include "volfn/kernels.hpp"

#include "volfn/errors.hpp"
#include "volfn/numutil.hpp"

namespace volfn {

namespace {

void check_dims(const MatrixFunctional& g, const SymMatrix& x, const SymMatrix& y) {
  if (x.dim() != g.dim() || y.dim() != g.dim())
    throw ConfigError("bias kernel: dimension mismatch between g and arguments");
}

}  // namespace

double h_from_g(const MatrixFunctional& g, const SymMatrix& x) {
  if (x.dim() != g.dim())
    throw ConfigError("h_from_g: dimension mismatch");
  HessTensor H = g.hess(x);
  int d = x.dim();
  double s = 0.0;
  for (int j = 0; j < d; ++j)
    for (int k = 0; k < d; ++k)
      for (int l = 0; l < d; ++l)
        for (int m = 0; m < d; ++m)
          s += H(j, k, l, m) * (x(j, l) * x(k, m) + x(j, m) * x(k, l));
  return 0.5 * s;
}

double hbar_from_g(const MatrixFunctional& g, const SymMatrix& x) {
  if (x.dim() != g.dim())
    throw ConfigError("hbar_from_g: dimension mismatch");
  SymMatrix D = g.grad(x);
  int d = x.dim();
  double s = 0.0;
  for (int j = 0; j < d; ++j)
    for (int k = 0; k < d; ++k)
      for (int l = 0; l < d; ++l)
        for (int m = 0; m < d; ++m)
          s += D(j, k) * D(l, m) * (x(j, l) * x(k, m) + x(j, m) * x(k, l));
  return s;
}

double bias_kernel_G(const MatrixFunctional& g, const SymMatrix& x,
                     const SymMatrix& y, int quad_nodes) {
  check_dims(g, x, y);
  if (y.frobenius_norm() == 0.0) return 0.0;
  const Quadrature& q = gauss_legendre_01(quad_nodes);
  double gx = g.eval(x);
  double gxy = g.eval(x + y);
  KahanSum acc;
  SymMatrix arg(x.dim());
  for (size_t i = 0; i < q.nodes.size(); ++i) {
    double w = q.nodes[i];
    arg = x;
    arg.add_scaled(y, w);
    acc.add(q.weights[i] * (g.eval(arg) - w * gxy - (1.0 - w) * gx));
  }
  return acc.value();
}

double bias_kernel_Gprime(const MatrixFunctional& g, const SymMatrix& x,
                          const SymMatrix& y, int quad_nodes) {
  check_dims(g, x, y);
  if (y.frobenius_norm() == 0.0) return 0.0;
  const Quadrature& q = gauss_legendre_01(quad_nodes);
  double base = g.hess(x).contract_pair(y);
  KahanSum acc;
  SymMatrix arg(x.dim());
  for (size_t i = 0; i < q.nodes.size(); ++i) {
    double w = q.nodes[i];
    arg = x;
    arg.add_scaled(y, 1.0 - w);
    double shifted = g.hess(arg).contract_pair(y);
    acc.add(q.weights[i] * w * w * (base + shifted));
  }
  return -0.125 * acc.value();
}

double bias_kernel_Gsecond(const MatrixFunctional& g, const SymMatrix& x,
                           const SymMatrix& y, int quad_nodes) {
  return bias_kernel_G(g, x, y, quad_nodes) -
         bias_kernel_Gprime(g, x, y, quad_nodes);
}

}  // namespace volfn
