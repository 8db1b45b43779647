#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "spr/denoiser.hpp"
#include "spr/model.hpp"
#include "spr/tensor.hpp"

namespace spr {

struct NetworkConfig {
  int unroll_steps = 4;    // alternations of denoising and data consistency
  int n_cg = 4;            // CG iterations per data-consistency solve
  double cg_tol = 0.0;     // relative residual for early exit; 0 = fixed count
  bool exact_threshold = false;  // inference-only exact soft-threshold mode
};

/// Everything the reverse-mode pass needs to replay one CG solve.
struct CgTape {
  ComplexVolume b;
  std::vector<ComplexVolume> p, q, r;  // p_i, q_i (i < iters); r_i (i <= iters)
  std::vector<double> rho;             // |r_i|^2, i <= iters
  std::vector<double> pq, step, beta;  // beta has iters-1 entries
  ComplexVolume x_out;
  int iters = 0;
};

struct CgResult {
  ComplexVolume x;
  double final_residual = 0.0;  // |r| after the last iteration
  int iters = 0;
};

using LinearOp = std::function<ComplexVolume(const ComplexVolume&)>;

/// Conjugate gradient from x = 0 for a Hermitian positive-definite operator.
/// Runs n_iter iterations or stops early once |r| <= tol * |b|. Throws
/// CgBreakdown when a search direction has non-positive curvature.
CgResult cg_solve(const LinearOp& apply_h, const ComplexVolume& b, int n_iter, double tol,
                  CgTape* tape = nullptr);

/// Proximal data-consistency update: approximately solves
///   (Ashp A + lambda I) x = Ashp y + lambda z
/// with n_cg CG iterations from zero, where Ashp is the density-compensated
/// pseudo-inverse of the model.
ComplexVolume data_consistency_step(const ComplexVolume& z, const MeasuredData& y,
                                    const AcquisitionModel& m, double lambda,
                                    const NetworkConfig& cfg, CgTape* tape = nullptr);

struct StepTape {
  ComplexVolume x_in;
  std::vector<std::vector<double>> coeff;  // pre-threshold maps, [filter*2 + channel]
  ComplexVolume z;
  CgTape cg;
};

struct ForwardTape {
  ComplexVolume x0;
  std::vector<StepTape> steps;
  ComplexVolume x_out;
};

/// Objective diagnostics recorded per unroll step (exact thresholding).
struct StepObjective {
  int step = 0;
  double analysis_objective = 0.0;  // data term + alpha * sum_k |h_k * x|_1
  double relaxed_objective = 0.0;   // quadratic-penalty form at its best s
  double cg_residual = 0.0;
};

struct NetworkResult {
  ComplexVolume x;
  std::unique_ptr<ForwardTape> tape;
  std::vector<StepObjective> objectives;
};

/// The unrolled reconstruction network: unroll_steps alternations of the
/// sparsifying denoiser and the CG data-consistency solve, starting from
/// x0 (by convention the pseudo-inverse of y).
NetworkResult network_forward(const ComplexVolume& x0, const MeasuredData& y,
                              const AcquisitionModel& m, const FilterBank& fb,
                              const NetworkConfig& cfg, bool record_tape,
                              bool log_objectives = false);

/// 0.5 * sum_i sqrt(w_i) |(A x - y)_i|^2.
double weighted_data_term(const ComplexVolume& x, const MeasuredData& y,
                          const AcquisitionModel& m);

/// Data term plus alpha * sum_k |h_k * x|_1 over both channels.
double analysis_l1_objective(const ComplexVolume& x, const MeasuredData& y,
                             const AcquisitionModel& m, const FilterBank& fb);

/// Quadratic-penalty relaxation evaluated at its minimizing sparse codes
/// s_k = soft_threshold(h_k * x, alpha/lambda).
double relaxed_objective(const ComplexVolume& x, const MeasuredData& y,
                         const AcquisitionModel& m, const FilterBank& fb);

}  // namespace spr
