#include "volfn/symmatrix.hpp"

#include <algorithm>
#include <cmath>

#include "volfn/errors.hpp"

namespace volfn {

SymMatrix::SymMatrix(int dim, const std::vector<double>& full)
    : dim_(dim), a_(static_cast<size_t>(dim) * dim, 0.0) {
  if (full.size() != a_.size())
    throw ConfigError("SymMatrix: storage size does not match dimension");
  for (int j = 0; j < dim; ++j)
    for (int k = j; k < dim; ++k) {
      double v = 0.5 * (full[static_cast<size_t>(j) * dim + k] +
                        full[static_cast<size_t>(k) * dim + j]);
      set(j, k, v);
    }
}

SymMatrix SymMatrix::identity(int dim) {
  SymMatrix m(dim);
  for (int j = 0; j < dim; ++j) m.set(j, j, 1.0);
  return m;
}

SymMatrix SymMatrix::diagonal(const std::vector<double>& diag) {
  SymMatrix m(static_cast<int>(diag.size()));
  for (int j = 0; j < m.dim(); ++j) m.set(j, j, diag[j]);
  return m;
}

double SymMatrix::trace() const {
  double t = 0.0;
  for (int j = 0; j < dim_; ++j) t += (*this)(j, j);
  return t;
}

double SymMatrix::frobenius_norm() const {
  double s = 0.0;
  for (double v : a_) s += v * v;
  return std::sqrt(s);
}

SymMatrix& SymMatrix::operator+=(const SymMatrix& o) {
  if (!same_dim(o)) throw ConfigError("SymMatrix: dimension mismatch in +=");
  for (size_t i = 0; i < a_.size(); ++i) a_[i] += o.a_[i];
  return *this;
}

SymMatrix& SymMatrix::operator-=(const SymMatrix& o) {
  if (!same_dim(o)) throw ConfigError("SymMatrix: dimension mismatch in -=");
  for (size_t i = 0; i < a_.size(); ++i) a_[i] -= o.a_[i];
  return *this;
}

SymMatrix& SymMatrix::operator*=(double s) {
  for (double& v : a_) v *= s;
  return *this;
}

void SymMatrix::add_scaled(const SymMatrix& b, double s) {
  if (!same_dim(b)) throw ConfigError("SymMatrix: dimension mismatch in add_scaled");
  for (size_t i = 0; i < a_.size(); ++i) a_[i] += s * b.a_[i];
}

SymMatrix sym_product(const SymMatrix& a, const SymMatrix& b) {
  if (!a.same_dim(b)) throw ConfigError("sym_product: dimension mismatch");
  int d = a.dim();
  SymMatrix r(d);
  // symmetrized product (ab+ba)/2; coincides with ab when a and b commute
  // (powers of one matrix), and keeps the stored-symmetry invariant exact
  for (int j = 0; j < d; ++j)
    for (int k = j; k < d; ++k) {
      double s1 = 0.0, s2 = 0.0;
      for (int l = 0; l < d; ++l) {
        s1 += a(j, l) * b(l, k);
        s2 += a(k, l) * b(l, j);
      }
      r.set(j, k, 0.5 * (s1 + s2));
    }
  return r;
}

SymMatrix sym_power(const SymMatrix& x, int p) {
  if (p < 0) throw ConfigError("sym_power: negative exponent");
  SymMatrix r = SymMatrix::identity(x.dim());
  for (int i = 0; i < p; ++i) r = sym_product(r, x);
  return r;
}

std::vector<double> sym_eigenvalues(const SymMatrix& x) {
  int d = x.dim();
  std::vector<double> a(x.data());
  auto at = [&](int j, int k) -> double& { return a[static_cast<size_t>(j) * d + k]; };
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int j = 0; j < d; ++j)
      for (int k = j + 1; k < d; ++k) off += at(j, k) * at(j, k);
    if (off < 1e-30) break;
    for (int p = 0; p < d; ++p)
      for (int q = p + 1; q < d; ++q) {
        if (at(p, q) == 0.0) continue;
        double theta = (at(q, q) - at(p, p)) / (2.0 * at(p, q));
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (int k = 0; k < d; ++k) {
          double akp = at(k, p), akq = at(k, q);
          at(k, p) = c * akp - s * akq;
          at(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < d; ++k) {
          double apk = at(p, k), aqk = at(q, k);
          at(p, k) = c * apk - s * aqk;
          at(q, k) = s * apk + c * aqk;
        }
      }
  }
  std::vector<double> ev(d);
  for (int j = 0; j < d; ++j) ev[j] = at(j, j);
  std::sort(ev.begin(), ev.end());
  return ev;
}

double min_eigenvalue(const SymMatrix& x) { return sym_eigenvalues(x).front(); }

SymMatrix psd_project(const SymMatrix& x) {
  // Jacobi with accumulated rotations; clip the spectrum at zero.
  int d = x.dim();
  std::vector<double> a(x.data());
  std::vector<double> v(static_cast<size_t>(d) * d, 0.0);
  for (int j = 0; j < d; ++j) v[static_cast<size_t>(j) * d + j] = 1.0;
  auto at = [&](int j, int k) -> double& { return a[static_cast<size_t>(j) * d + k]; };
  auto vt = [&](int j, int k) -> double& { return v[static_cast<size_t>(j) * d + k]; };
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int j = 0; j < d; ++j)
      for (int k = j + 1; k < d; ++k) off += at(j, k) * at(j, k);
    if (off < 1e-30) break;
    for (int p = 0; p < d; ++p)
      for (int q = p + 1; q < d; ++q) {
        if (at(p, q) == 0.0) continue;
        double theta = (at(q, q) - at(p, p)) / (2.0 * at(p, q));
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (int k = 0; k < d; ++k) {
          double akp = at(k, p), akq = at(k, q);
          at(k, p) = c * akp - s * akq;
          at(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < d; ++k) {
          double apk = at(p, k), aqk = at(q, k);
          at(p, k) = c * apk - s * aqk;
          at(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < d; ++k) {
          double vkp = vt(k, p), vkq = vt(k, q);
          vt(k, p) = c * vkp - s * vkq;
          vt(k, q) = s * vkp + c * vkq;
        }
      }
  }
  SymMatrix r(d);
  for (int j = 0; j < d; ++j)
    for (int k = j; k < d; ++k) {
      double s = 0.0;
      for (int l = 0; l < d; ++l) {
        double lam = std::max(0.0, at(l, l));
        s += vt(j, l) * lam * vt(k, l);
      }
      r.set(j, k, s);
    }
  return r;
}

}  // namespace volfn
