#pragma once

#include <memory>
#include <span>
#include <vector>

#include "spr/tensor.hpp"
#include "spr/trajectory.hpp"

namespace spr {

/// Direct nonuniform DFT between a centered nx-by-ny pixel grid and off-grid
/// frequency samples:
///
///   y_i = (1/sqrt(nx*ny)) sum_r x(r) exp(-2 pi i k_i . r)
///
/// with r ranging over centered integer coordinates in [-n/2, n/2). The plan
/// materializes the sample-by-pixel matrix once (built from separable per-axis
/// phase tables) so repeated applications are plain mat-vec products. The
/// adjoint is the exact conjugate transpose.
class NdftPlan {
 public:
  NdftPlan(std::span<const KSample> samples, int nx, int ny);
  ~NdftPlan();
  NdftPlan(NdftPlan&&) noexcept;
  NdftPlan& operator=(NdftPlan&&) noexcept;
  NdftPlan(const NdftPlan&) = delete;
  NdftPlan& operator=(const NdftPlan&) = delete;

  int n_samples() const { return m_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }

  std::vector<cplx> forward(std::span<const cplx> frame) const;
  std::vector<cplx> adjoint(std::span<const cplx> samples) const;

 private:
  struct Impl;
  int m_ = 0, nx_ = 0, ny_ = 0;
  std::unique_ptr<Impl> impl_;
};

std::vector<cplx> ndft_forward(std::span<const cplx> frame, int nx, int ny,
                               std::span<const KSample> samples);
std::vector<cplx> ndft_adjoint(std::span<const cplx> sample_values,
                               std::span<const KSample> coords, int nx, int ny);

/// Centered unitary 2D DFT (sign = -1 forward, +1 inverse); the exact
/// Cartesian counterpart of the NDFT above, used as an oracle operator.
std::vector<cplx> centered_dft_2d(std::span<const cplx> frame, int nx, int ny, int sign);

}  // namespace spr
