#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "spr/ndft.hpp"
#include "spr/tensor.hpp"
#include "spr/trajectory.hpp"

namespace spr {

/// Per-coil complex sensitivity maps, sum-of-squares normalized so that
/// sum_j |c_j(p)|^2 = 1 wherever the support is nonzero.
struct CoilMaps {
  int nc = 0;
  int nx = 0;
  int ny = 0;
  std::vector<cplx> data;  // (coil, x, y)

  static CoilMaps uniform(int nx, int ny);  // single all-ones coil

  std::span<cplx> map(int j) {
    return {data.data() + static_cast<std::size_t>(j) * nx * ny,
            static_cast<std::size_t>(nx) * ny};
  }
  std::span<const cplx> map(int j) const {
    return {data.data() + static_cast<std::size_t>(j) * nx * ny,
            static_cast<std::size_t>(nx) * ny};
  }
};

/// Complex k-space samples indexed (coil, frame, sample).
struct MeasuredData {
  int n_coils = 0;
  int n_frames = 0;
  std::vector<std::vector<cplx>> data;  // [coil * n_frames + frame]

  MeasuredData() = default;
  MeasuredData(int nc, int nt) : n_coils(nc), n_frames(nt), data(static_cast<std::size_t>(nc) * nt) {}

  std::vector<cplx>& at(int coil, int frame) { return data[static_cast<std::size_t>(coil) * n_frames + frame]; }
  const std::vector<cplx>& at(int coil, int frame) const {
    return data[static_cast<std::size_t>(coil) * n_frames + frame];
  }
  std::size_t total_samples() const;

  void add_scaled(const MeasuredData& other, double a);
  void scale(double a);
};

cplx inner(const MeasuredData& a, const MeasuredData& b);
double norm2(const MeasuredData& a);

/// Linear acquisition operator with its adjoint and the density-compensated
/// pseudo-inverse used as the reconstruction starting point.
class AcquisitionModel {
 public:
  virtual ~AcquisitionModel() = default;

  virtual Shape3 image_shape() const = 0;
  virtual int n_coils() const = 0;

  virtual MeasuredData forward(const ComplexVolume& x) const = 0;
  virtual ComplexVolume adjoint(const MeasuredData& y) const = 0;

  /// Adjoint applied to samples pre-scaled by sqrt(w_i).
  virtual ComplexVolume pseudo_inverse(const MeasuredData& y) const = 0;

  /// sum_i sqrt(w_i) |v_i|^2, the weighted squared norm of the data term.
  virtual double weighted_norm2(const MeasuredData& v) const = 0;

  /// Data-consistency system operator: pseudo_inverse(forward(x)) + lambda*x.
  /// Hermitian, and positive definite for lambda > 0.
  ComplexVolume normal(const ComplexVolume& x, double lambda) const;
};

/// Multi-coil radial encoding: per coil j and frame t the samples are the
/// NDFT of the coil-weighted frame c_j * x_t along that frame's trajectory.
/// NDFT plans may be shared between models that use the same trajectory.
class ForwardModel : public AcquisitionModel {
 public:
  using PlanSet = std::vector<NdftPlan>;

  ForwardModel(CoilMaps coils, Trajectory traj, DensityWeights weights, Shape3 shape);
  ForwardModel(CoilMaps coils, Trajectory traj, DensityWeights weights, Shape3 shape,
               std::shared_ptr<const PlanSet> plans);

  static std::shared_ptr<const PlanSet> build_plans(const Trajectory& traj, Shape3 shape);

  Shape3 image_shape() const override { return shape_; }
  int n_coils() const override { return coils_.nc; }
  const Trajectory& trajectory() const { return traj_; }
  const DensityWeights& weights() const { return weights_; }
  const CoilMaps& coils() const { return coils_; }

  MeasuredData forward(const ComplexVolume& x) const override;
  ComplexVolume adjoint(const MeasuredData& y) const override;
  ComplexVolume pseudo_inverse(const MeasuredData& y) const override;
  double weighted_norm2(const MeasuredData& v) const override;

 private:
  void validate() const;
  ComplexVolume adjoint_scaled(const MeasuredData& y, bool apply_sqrt_w) const;

  CoilMaps coils_;
  Trajectory traj_;
  DensityWeights weights_;
  Shape3 shape_;
  std::shared_ptr<const PlanSet> plans_;
};

/// Masked Cartesian operator: per coil and frame a centered unitary FFT
/// restricted to the masked coefficients; weights are identically one, so the
/// pseudo-inverse equals the adjoint and A A^H is the identity on the samples.
class CartesianMaskedModel : public AcquisitionModel {
 public:
  /// mask is (t, x, y) in volume storage order; nonzero entries are sampled.
  CartesianMaskedModel(std::vector<std::uint8_t> mask, Shape3 shape, CoilMaps coils);
  static CartesianMaskedModel full(Shape3 shape, int n_coils = 1);

  Shape3 image_shape() const override { return shape_; }
  int n_coils() const override { return coils_.nc; }

  MeasuredData forward(const ComplexVolume& x) const override;
  ComplexVolume adjoint(const MeasuredData& y) const override;
  ComplexVolume pseudo_inverse(const MeasuredData& y) const override { return adjoint(y); }
  double weighted_norm2(const MeasuredData& v) const override { return norm2(v); }

 private:
  std::vector<std::uint8_t> mask_;
  Shape3 shape_;
  CoilMaps coils_;
  std::vector<int> frame_sample_count_;
};

}  // namespace spr
