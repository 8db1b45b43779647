#pragma once

#include <vector>

namespace spr {

/// One k-space sample position in cycles/pixel, each component in [-0.5, 0.5).
struct KSample {
  double kx = 0.0;
  double ky = 0.0;
};

/// Per-frame non-Cartesian sample coordinates. Spokes are straight lines
/// through the k-space origin; every frame holds spokes_per_frame * readout
/// samples.
struct Trajectory {
  int spokes_per_frame = 0;
  int readout = 0;
  std::vector<std::vector<KSample>> frames;

  int n_frames() const { return static_cast<int>(frames.size()); }
  int samples_per_frame(int t) const { return static_cast<int>(frames[t].size()); }
};

/// Per-frame nonnegative compensation weights, one per trajectory sample.
struct DensityWeights {
  std::vector<std::vector<double>> frames;
};

/// Angle increment between consecutive spokes, in degrees: 180*(sqrt(5)-1)/2.
double golden_angle_deg();

/// Spokes needed to meet the radial Nyquist criterion: ceil(pi/2 * nx).
int nyquist_spokes(int nx);

/// Undersampling factor of a radial schedule relative to Nyquist.
double acceleration_factor(int nx, int spokes_per_frame);

/// Golden-angle schedule: global spoke n has angle n*golden_angle mod 180 deg;
/// spokes are dealt to frames in acquisition order; each spoke carries
/// readout = 2*nx samples uniformly spanning radius [-0.5, 0.5).
Trajectory golden_angle_trajectory(int nx, int nt, int spokes_per_frame);

/// Radial ramp: w_i = max(|k_i|, dk/2), dk = 1/readout, scaled so the largest
/// weight in each frame is 1.
DensityWeights ramp_density_weights(const Trajectory& traj);

}  // namespace spr
