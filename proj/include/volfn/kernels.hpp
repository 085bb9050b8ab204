#pragma once

#include "volfn/functional.hpp"
#include "volfn/symmatrix.hpp"

namespace volfn {

// h(x) = 1/2 sum_{jklm} d2g_{jk,lm}(x) (x^{jl}x^{km} + x^{jm}x^{kl});
// the integrand of the window-statistical bias A^2 = V(h)/theta.
double h_from_g(const MatrixFunctional& g, const SymMatrix& x);

// hbar(x) = sum_{jklm} dg_{jk}(x) dg_{lm}(x) (x^{jl}x^{km} + x^{jm}x^{kl});
// the conditional variance integrand of the limiting Gaussian term.
// Nonnegative on PSD x.
double hbar_from_g(const MatrixFunctional& g, const SymMatrix& x);

// G(x,y) = int_0^1 ( g(x+wy) - w g(x+y) - (1-w) g(x) ) dw, by Gauss-Legendre
// with quad_nodes points (exact for polynomial g of degree <= 2n-1).
double bias_kernel_G(const MatrixFunctional& g, const SymMatrix& x,
                     const SymMatrix& y, int quad_nodes = 16);

// G'(x,y) = -1/8 sum_{jklm} int_0^1 ( d2g(x) + d2g(x+(1-w)y) )_{jk,lm}
//           w^2 y^{jk} y^{lm} dw
double bias_kernel_Gprime(const MatrixFunctional& g, const SymMatrix& x,
                          const SymMatrix& y, int quad_nodes = 16);

// G'' = G - G'; the jump-functional kernel entering the debiased estimator.
double bias_kernel_Gsecond(const MatrixFunctional& g, const SymMatrix& x,
                           const SymMatrix& y, int quad_nodes = 16);

}  // namespace volfn
