#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

#include "spr/tensor.hpp"

namespace spr {

double softplus(double r);          // ln(1 + exp(r)), overflow-safe
double softplus_deriv(double r);    // logistic(r)
double inverse_softplus(double y);  // ln(exp(y) - 1), y > 0

/// Trainable parameter set: K real cubic kernels plus the raw (pre-Soft-Plus)
/// regularization scalars. The effective alpha and lambda are strictly
/// positive by construction.
struct FilterBank {
  int n_filters = 0;
  int side = 0;                // kernel side, odd
  std::vector<double> coeffs;  // (k, t, x, y)
  double alpha_raw = 0.0;
  double lambda_raw = 0.0;
  double smooth_b = 1e-3;

  FilterBank() = default;
  FilterBank(int k, int kf);

  /// Entries uniform in [-s, s] with s = 1/sqrt(K * side^3); alpha = 0.1 and
  /// lambda = 1.0 through the Soft-Plus.
  static FilterBank random_init(int k, int kf, std::uint64_t seed, double smooth_b = 1e-3);

  double alpha() const { return softplus(alpha_raw); }
  double lambda() const { return softplus(lambda_raw); }
  double threshold() const { return alpha() / lambda(); }

  std::size_t kernel_size() const { return static_cast<std::size_t>(side) * side * side; }
  std::span<double> kernel(int k) { return {coeffs.data() + k * kernel_size(), kernel_size()}; }
  std::span<const double> kernel(int k) const {
    return {coeffs.data() + k * kernel_size(), kernel_size()};
  }

  /// K * side^3 filter coefficients plus the two raw scalars.
  std::size_t parameter_count() const { return coeffs.size() + 2; }

  void validate() const;
};

/// Writes <path> (SPT1, f64, shape [K, side, side, side]) and a sibling .json
/// holding the scalars plus any caller-supplied extra fields.
void save_filter_bank(const FilterBank& fb, const std::filesystem::path& path,
                      const nlohmann::json& extra = nlohmann::json::object());
FilterBank load_filter_bank(const std::filesystem::path& path);

/// Circular 3D convolution with a centered kernel (true convolution, kernel
/// indices reversed relative to correlation):
///   (h * u)(p) = sum_q h(q) u((p - q + c) mod shape), c = side/2 per axis.
std::vector<double> conv3_circular(std::span<const double> u, Shape3 shape,
                                   std::span<const double> kernel, int side);

/// Exact adjoint of conv3_circular: circular convolution with the
/// index-reversed kernel.
std::vector<double> conv3_circular_transpose(std::span<const double> v, Shape3 shape,
                                             std::span<const double> kernel, int side);

/// Gradient of a circular convolution with respect to its kernel:
///   g(q) = sum_p a(p) b((p - q + c) mod shape).
/// With (a = upstream, b = input) this differentiates conv3_circular; with
/// (a = input, b = upstream) it differentiates conv3_circular_transpose.
std::vector<double> conv3_kernel_grad(std::span<const double> a, std::span<const double> b,
                                      Shape3 shape, int side);

double soft_threshold(double z, double t);

/// Smooth surrogate z + ((z-t)^2 + b)^1/2 / 2 - ((z+t)^2 + b)^1/2 / 2,
/// differentiable in both z and t; approaches the exact operator as b -> 0.
double smooth_soft_threshold(double z, double t, double b);
double smooth_soft_threshold_dz(double z, double t, double b);
double smooth_soft_threshold_dt(double z, double t, double b);

/// One sparsifying denoising step: for each channel of the two-channel view
/// and each filter, threshold the filter response and map it back through the
/// transposed filter; both channels share the same filters.
/// When coeff_maps is non-null it receives the pre-threshold responses,
/// indexed [filter * 2 + channel].
ComplexVolume denoise_step(const ComplexVolume& x, const FilterBank& fb,
                           bool exact_threshold = false,
                           std::vector<std::vector<double>>* coeff_maps = nullptr);

}  // namespace spr
