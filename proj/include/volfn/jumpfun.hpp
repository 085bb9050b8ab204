#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "volfn/symmatrix.hpp"

namespace volfn {

// One accepted block from the jump scan: block index j, its time estimate,
// the pre-jump spot level chat_{(j-3)k_n+1}, the block difference
// delta_j chat and the F contribution.
struct JumpDetection {
  int block_index = 0;
  double location_estimate = 0.0;
  SymMatrix pre_jump;
  SymMatrix jump_size;
  double delta_norm = 0.0;
  double contribution = 0.0;
};

// delta_j chat = chat_{j k_n + 1} - chat_{(j-2) k_n + 1} in 1-based
// window-start indexing; returned for j = 2, 3, ... as long as both indices
// exist (element u of the result corresponds to j = u + 2). Too-short input
// gives an empty vector.
std::vector<SymMatrix> spot_deltas(std::span<const SymMatrix> spots, int k_n);

using JumpKernel = std::function<double(const SymMatrix& pre, const SymMatrix& jump)>;

struct JumpFunctionalResult {
  double value = 0.0;
  std::vector<JumpDetection> detections;
};

// V(F)^n_t = sum_{j=3}^{[t/(k_n dt)]-3} F(chat_{(j-3)k_n+1}, delta_j chat)
//            1{ ||delta_{j-1} chat|| v ||delta_{j+1} chat|| v u'_n
//               < ||delta_j chat|| }
// with Frobenius norms and a strict local-maximum test (ties reject).
// Fewer than 6 k_n increments leave no admissible j: returns (0, empty).
// F is assumed to satisfy the |F(x,y)| <= K(1+||x||+||y||)^{p-2}||y||^2
// growth bound; this is documented, not checked.
JumpFunctionalResult jump_functional(std::span<const SymMatrix> spots,
                                     const JumpKernel& F, int k_n,
                                     double delta_n, double u_prime_n);

// CSV: j,t_est,norm_delta,contribution
std::string detections_csv(const std::vector<JumpDetection>& detections);
void write_detections_csv(const std::string& path,
                          const std::vector<JumpDetection>& detections);

}  // namespace volfn
