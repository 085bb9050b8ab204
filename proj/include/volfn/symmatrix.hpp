#pragma once

#include <cstddef>
#include <vector>

namespace volfn {

// Dense symmetric d x d matrix with exact entry symmetry: set() writes both
// (j,k) and (k,j), so stored values compare equal bit for bit. Holds spot
// covariance values c_t and their estimates, and the x/y arguments of the
// test-function transforms.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(int dim) : dim_(dim), a_(static_cast<size_t>(dim) * dim, 0.0) {}
  // row-major full storage; symmetrizes exactly via (v+v^T)/2
  SymMatrix(int dim, const std::vector<double>& full);

  static SymMatrix scalar(double v) {
    SymMatrix m(1);
    m.set(0, 0, v);
    return m;
  }
  static SymMatrix identity(int dim);
  static SymMatrix diagonal(const std::vector<double>& diag);

  int dim() const { return dim_; }
  double operator()(int j, int k) const { return a_[static_cast<size_t>(j) * dim_ + k]; }
  void set(int j, int k, double v) {
    a_[static_cast<size_t>(j) * dim_ + k] = v;
    a_[static_cast<size_t>(k) * dim_ + j] = v;
  }
  const std::vector<double>& data() const { return a_; }

  double trace() const;
  double frobenius_norm() const;

  SymMatrix& operator+=(const SymMatrix& o);
  SymMatrix& operator-=(const SymMatrix& o);
  SymMatrix& operator*=(double s);
  friend SymMatrix operator+(SymMatrix a, const SymMatrix& b) { return a += b; }
  friend SymMatrix operator-(SymMatrix a, const SymMatrix& b) { return a -= b; }
  friend SymMatrix operator*(SymMatrix a, double s) { return a *= s; }
  friend SymMatrix operator*(double s, SymMatrix a) { return a *= s; }

  // this += s*b without temporary allocations in hot loops
  void add_scaled(const SymMatrix& b, double s);

  bool same_dim(const SymMatrix& o) const { return dim_ == o.dim_; }

 private:
  int dim_ = 0;
  std::vector<double> a_;
};

// x*y for symmetric operands of the same x-power family; result is written as
// a full (possibly asymmetric) product but powers of one matrix stay symmetric.
SymMatrix sym_product(const SymMatrix& a, const SymMatrix& b);

// x^p, p >= 0 (p=0 gives the identity)
SymMatrix sym_power(const SymMatrix& x, int p);

// Eigenvalues by cyclic Jacobi rotations (ascending). Intended for the small
// dimensions this library works at.
std::vector<double> sym_eigenvalues(const SymMatrix& x);

double min_eigenvalue(const SymMatrix& x);

// Clip negative eigenvalues to zero (spectral projection onto the PSD cone).
SymMatrix psd_project(const SymMatrix& x);

}  // namespace volfn
