#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "spr/solver.hpp"

namespace spr {

/// Gradient of a scalar loss with respect to the trainable parameter set.
struct Gradients {
  std::vector<double> d_filters;  // same layout as FilterBank::coeffs
  double d_alpha_raw = 0.0;
  double d_lambda_raw = 0.0;
};

struct TrainConfig {
  double learning_rate = 1e-4;
  int epochs = 1;
  int batch_size = 1;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
};

/// Squared L2 error over the two-channel real view.
double loss_l2(const ComplexVolume& x_out, const ComplexVolume& x_ref);

/// Exact reverse-mode gradient of the forward pass as executed: through the
/// truncated CG iterations, the (smooth or exact) soft-threshold, both
/// convolution directions, and the Soft-Plus transforms of the raw scalars.
/// grad_out pairs with perturbations through Re<g, dx>, i.e. it holds the
/// loss derivatives with respect to the real and imaginary parts.
/// With skip_filter_grads the filter block is reported as exact zeros and its
/// kernel-gradient work is skipped.
Gradients network_backward(const ForwardTape& tape, const ComplexVolume& grad_out,
                           const AcquisitionModel& m, const FilterBank& fb,
                           const NetworkConfig& cfg, bool skip_filter_grads = false);

struct FiniteDiffReport {
  double filters_rel_err = 0.0;
  double alpha_rel_err = 0.0;
  double lambda_rel_err = 0.0;
  double max_rel_err = 0.0;
};

/// Central differences (step scaled by 1 + |theta| per coordinate) of the
/// training loss against network_backward, per parameter block. Intended for
/// small instances only.
FiniteDiffReport finite_diff_check(const MeasuredData& y, const ComplexVolume& x_ref,
                                   const AcquisitionModel& m, const FilterBank& fb,
                                   const NetworkConfig& cfg, double rel_step);

struct AdamState {
  std::vector<double> m, v;
  long t = 0;
};

/// One bias-corrected first/second-moment update. Non-finite gradients are
/// rejected with NumericalError.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const TrainConfig& cfg);

struct TrainSample {
  MeasuredData y;
  ComplexVolume x_ref;
  std::shared_ptr<const AcquisitionModel> model;
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double alpha = 0.0;
  double lambda = 0.0;
};

struct TrainResult {
  FilterBank filters;  // parameters of the best validation epoch
  std::vector<EpochStats> history;
  int best_epoch = 0;
  bool diverged = false;
};

/// Per-pair training with a seeded shuffle each epoch. freeze_filters trains
/// only the two regularization scalars and leaves the kernels bit-identical.
/// A non-finite loss aborts and returns the last finite checkpoint.
TrainResult train(const std::vector<TrainSample>& train_set,
                  const std::vector<TrainSample>& val_set, FilterBank fb0,
                  const NetworkConfig& net_cfg, const TrainConfig& train_cfg,
                  bool freeze_filters);

}  // namespace spr
