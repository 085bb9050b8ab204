#include "volfn/jumpfun.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "volfn/errors.hpp"
#include "volfn/numutil.hpp"

namespace volfn {

std::vector<SymMatrix> spot_deltas(std::span<const SymMatrix> spots, int k_n) {
  if (k_n < 2) throw ConfigError("spot_deltas: k_n must be >= 2");
  int M = static_cast<int>(spots.size());
  std::vector<SymMatrix> out;
  for (int j = 2;; ++j) {
    int hi = j * k_n;        // 0-based image of chat_{j k_n + 1}
    int lo = (j - 2) * k_n;  // 0-based image of chat_{(j-2) k_n + 1}
    if (hi >= M) break;
    out.push_back(spots[hi] - spots[lo]);
  }
  return out;
}

JumpFunctionalResult jump_functional(std::span<const SymMatrix> spots,
                                     const JumpKernel& F, int k_n,
                                     double delta_n, double u_prime_n) {
  if (delta_n <= 0.0) throw ConfigError("jump_functional: delta_n must be positive");
  JumpFunctionalResult res;
  int M = static_cast<int>(spots.size());
  if (M == 0) return res;

  // t = N dt with N the increment count behind these spots
  int N = M + k_n - 1;
  int J = N / k_n;  // [t / (k_n dt)]

  std::vector<SymMatrix> deltas = spot_deltas(spots, k_n);
  auto delta_at = [&](int j) -> const SymMatrix& { return deltas[j - 2]; };

  KahanSum acc;
  for (int j = 3; j <= J - 3; ++j) {
    double nj = delta_at(j).frobenius_norm();
    double nprev = delta_at(j - 1).frobenius_norm();
    double nnext = delta_at(j + 1).frobenius_norm();
    double bar = std::max(std::max(nprev, nnext), u_prime_n);
    if (!(bar < nj)) continue;  // strict; ties reject
    const SymMatrix& pre = spots[(j - 3) * k_n];
    double contrib = F(pre, delta_at(j));
    acc.add(contrib);
    JumpDetection det;
    det.block_index = j;
    det.location_estimate = j * k_n * delta_n;
    det.pre_jump = pre;
    det.jump_size = delta_at(j);
    det.delta_norm = nj;
    det.contribution = contrib;
    res.detections.push_back(std::move(det));
  }
  res.value = acc.value();
  return res;
}

std::string detections_csv(const std::vector<JumpDetection>& detections) {
  std::ostringstream os;
  os << "j,t_est,norm_delta,contribution\n";
  char buf[32];
  for (const auto& d : detections) {
    os << d.block_index;
    std::snprintf(buf, sizeof(buf), "%.17g", d.location_estimate);
    os << ',' << buf;
    std::snprintf(buf, sizeof(buf), "%.17g", d.delta_norm);
    os << ',' << buf;
    std::snprintf(buf, sizeof(buf), "%.17g", d.contribution);
    os << ',' << buf << '\n';
  }
  return os.str();
}

void write_detections_csv(const std::string& path,
                          const std::vector<JumpDetection>& detections) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << detections_csv(detections);
  if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace volfn
