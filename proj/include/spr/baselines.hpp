#pragma once

#include <cstdint>
#include <vector>

#include "spr/denoiser.hpp"
#include "spr/model.hpp"
#include "spr/solver.hpp"

namespace spr {

struct CaolConfig {
  int n_filters = 16;
  int side = 3;
  /// Soft-threshold level of the sparse-coding step. Negative means
  /// auto-scale to 0.01 times the median absolute filter response of the
  /// initial filters on the training volumes.
  double sparsity_alpha = -1.0;
  int outer_iters = 30;
};

struct CaolResult {
  FilterBank filters;
  std::vector<double> objective;        // recorded after each outer round
  double sparsity_alpha_used = 0.0;
};

/// Decoupled filter learning on ground-truth volumes: alternate exact
/// soft-threshold sparse coding with a constrained filter update. Filters are
/// kept mutually orthogonal with squared norm 1/side^3 each (the feasible
/// tight-frame normalization for K <= side^3), via a Procrustes-type update:
/// each inner step takes the orthogonal factor of an SVD of the majorized
/// filter-side normal matrix, which never increases the objective.
/// Whole volumes with circular convolution, no patch extraction; both
/// channels of each complex volume contribute. The returned regularization
/// scalars are at their default initialization.
CaolResult caol_pretrain(const std::vector<ComplexVolume>& ground_truth,
                         const CaolConfig& cfg, std::uint64_t seed);

struct AltMinResult {
  ComplexVolume x;
  /// Relaxed objective at its prox-optimal codes; entry 0 is the starting
  /// point, one more entry per outer iteration.
  std::vector<double> objective;
};

/// Reference solver: alternate exact soft-threshold code updates with CG
/// solves of the filter-dependent system
///   (Ashp A + lambda sum_k h_k^T * h_k) x = Ashp y + lambda sum_k h_k^T * s_k.
AltMinResult alternating_min_reconstruct(const MeasuredData& y, const AcquisitionModel& m,
                                         const FilterBank& fb, int outer_iters,
                                         int inner_cg);

}  // namespace spr
