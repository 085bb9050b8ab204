#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace volfn {

// Compensated (Kahan) accumulator. Keeps long running sums accurate to a few
// ulps regardless of term count, which the rolling spot-covariance update and
// the plug-in sums rely on.
class KahanSum {
 public:
  void add(double v) {
    double y = v - comp_;
    double t = sum_ + y;
    comp_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const { return sum_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// x^p for small integer p by repeated multiplication (exact for p<=2, faster
// and more predictable than std::pow).
inline double int_pow(double x, int p) {
  if (p < 0) return 1.0 / int_pow(x, -p);
  double r = 1.0;
  double b = x;
  while (p > 0) {
    if (p & 1) r *= b;
    b *= b;
    p >>= 1;
  }
  return r;
}

// Gauss-Legendre rule mapped to [0,1]; exact for polynomials of degree
// <= 2n-1. Results are cached per node count.
struct Quadrature {
  std::vector<double> nodes;
  std::vector<double> weights;
};
const Quadrature& gauss_legendre_01(int n);

// Inverse standard normal CDF. Acklam's rational approximation followed by
// one Halley refinement; absolute error well below 1e-9.
double normal_quantile(double p);

double normal_cdf(double x);

// SplitMix64 finalizer; used to derive well-separated per-replication seeds
// from a master seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(master ^ (index + 1) * 0x9e3779b97f4a7c15ULL);
}

}  // namespace volfn
