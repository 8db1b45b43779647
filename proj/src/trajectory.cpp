#include "spr/trajectory.hpp"

#include <cmath>
#include <stdexcept>

namespace spr {

namespace {
constexpr double kPi = 3.14159265358979323846264338327950288;
}

double golden_angle_deg() { return 180.0 * (std::sqrt(5.0) - 1.0) / 2.0; }

int nyquist_spokes(int nx) {
  return static_cast<int>(std::ceil(kPi / 2.0 * static_cast<double>(nx)));
}

double acceleration_factor(int nx, int spokes_per_frame) {
  return static_cast<double>(nyquist_spokes(nx)) / static_cast<double>(spokes_per_frame);
}

Trajectory golden_angle_trajectory(int nx, int nt, int spokes_per_frame) {
  if (nx < 4) throw std::invalid_argument("golden_angle_trajectory: nx must be >= 4");
  if (nt < 1) throw std::invalid_argument("golden_angle_trajectory: nt must be >= 1");
  if (spokes_per_frame < 1)
    throw std::invalid_argument("golden_angle_trajectory: spokes_per_frame must be >= 1");

  Trajectory traj;
  traj.spokes_per_frame = spokes_per_frame;
  traj.readout = 2 * nx;
  traj.frames.resize(nt);

  const double dtheta = golden_angle_deg();
  const int readout = traj.readout;
  for (int t = 0; t < nt; ++t) {
    auto& frame = traj.frames[t];
    frame.reserve(static_cast<std::size_t>(spokes_per_frame) * readout);
    for (int s = 0; s < spokes_per_frame; ++s) {
      const long long global = static_cast<long long>(t) * spokes_per_frame + s;
      const double angle_deg = std::fmod(static_cast<double>(global) * dtheta, 180.0);
      const double angle = angle_deg * kPi / 180.0;
      const double c = std::cos(angle);
      const double sn = std::sin(angle);
      for (int m = 0; m < readout; ++m) {
        const double r = static_cast<double>(m - readout / 2) / readout;
        frame.push_back({r * c, r * sn});
      }
    }
  }
  return traj;
}

DensityWeights ramp_density_weights(const Trajectory& traj) {
  if (traj.readout < 2)
    throw std::invalid_argument("ramp_density_weights: trajectory readout too small");
  const double dk = 1.0 / traj.readout;
  DensityWeights weights;
  weights.frames.resize(traj.frames.size());
  for (std::size_t t = 0; t < traj.frames.size(); ++t) {
    const auto& frame = traj.frames[t];
    auto& w = weights.frames[t];
    w.resize(frame.size());
    double frame_max = 0.0;
    for (std::size_t i = 0; i < frame.size(); ++i) {
      const double radius = std::hypot(frame[i].kx, frame[i].ky);
      w[i] = std::max(radius, dk / 2.0);
      frame_max = std::max(frame_max, w[i]);
    }
    for (auto& v : w) v /= frame_max;
  }
  return weights;
}

}  // namespace spr
