#include "spr/ndft.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace spr {

namespace {
constexpr double kTwoPi = 6.28318530717958647692528676655900577;

void check_coords(std::span<const KSample> samples) {
  for (const auto& s : samples) {
    if (!(s.kx >= -0.5 && s.kx < 0.5 && s.ky >= -0.5 && s.ky < 0.5))
      throw std::invalid_argument("ndft: coordinate outside [-0.5, 0.5)");
  }
}
}  // namespace

struct NdftPlan::Impl {
  Eigen::MatrixXcd matrix;  // m x (nx*ny), row i = phase factors of sample i
};

NdftPlan::NdftPlan(std::span<const KSample> samples, int nx, int ny)
    : m_(static_cast<int>(samples.size())), nx_(nx), ny_(ny), impl_(new Impl) {
  if (nx < 1 || ny < 1) throw std::invalid_argument("ndft: grid must be positive");
  check_coords(samples);

  const double scale = 1.0 / std::sqrt(static_cast<double>(nx) * ny);
  impl_->matrix.resize(m_, static_cast<Eigen::Index>(nx) * ny);
  std::vector<cplx> ux(nx), uy(ny);
  for (int i = 0; i < m_; ++i) {
    for (int x = 0; x < nx; ++x) {
      const double rx = x - nx / 2;
      const double ph = -kTwoPi * samples[i].kx * rx;
      ux[x] = cplx(std::cos(ph), std::sin(ph)) * scale;
    }
    for (int y = 0; y < ny; ++y) {
      const double ry = y - ny / 2;
      const double ph = -kTwoPi * samples[i].ky * ry;
      uy[y] = cplx(std::cos(ph), std::sin(ph));
    }
    for (int x = 0; x < nx; ++x)
      for (int y = 0; y < ny; ++y)
        impl_->matrix(i, static_cast<Eigen::Index>(x) * ny + y) = ux[x] * uy[y];
  }
}

NdftPlan::~NdftPlan() = default;
NdftPlan::NdftPlan(NdftPlan&&) noexcept = default;
NdftPlan& NdftPlan::operator=(NdftPlan&&) noexcept = default;

std::vector<cplx> NdftPlan::forward(std::span<const cplx> frame) const {
  if (frame.size() != static_cast<std::size_t>(nx_) * ny_)
    throw std::invalid_argument("ndft forward: frame size mismatch");
  std::vector<cplx> out(m_);
  Eigen::Map<const Eigen::VectorXcd> x(frame.data(), frame.size());
  Eigen::Map<Eigen::VectorXcd> y(out.data(), m_);
  y.noalias() = impl_->matrix * x;
  return out;
}

std::vector<cplx> NdftPlan::adjoint(std::span<const cplx> samples) const {
  if (samples.size() != static_cast<std::size_t>(m_))
    throw std::invalid_argument("ndft adjoint: sample count mismatch");
  std::vector<cplx> out(static_cast<std::size_t>(nx_) * ny_);
  Eigen::Map<const Eigen::VectorXcd> y(samples.data(), samples.size());
  Eigen::Map<Eigen::VectorXcd> x(out.data(), out.size());
  x.noalias() = impl_->matrix.adjoint() * y;
  return out;
}

std::vector<cplx> ndft_forward(std::span<const cplx> frame, int nx, int ny,
                               std::span<const KSample> samples) {
  return NdftPlan(samples, nx, ny).forward(frame);
}

std::vector<cplx> ndft_adjoint(std::span<const cplx> sample_values,
                               std::span<const KSample> coords, int nx, int ny) {
  return NdftPlan(coords, nx, ny).adjoint(sample_values);
}

std::vector<cplx> centered_dft_2d(std::span<const cplx> frame, int nx, int ny, int sign) {
  if (frame.size() != static_cast<std::size_t>(nx) * ny)
    throw std::invalid_argument("centered_dft_2d: frame size mismatch");
  if (sign != 1 && sign != -1)
    throw std::invalid_argument("centered_dft_2d: sign must be +-1");

  // Separable unitary transform; frequencies and pixels both centered.
  Eigen::MatrixXcd wx(nx, nx), wy(ny, ny);
  for (int f = 0; f < nx; ++f)
    for (int x = 0; x < nx; ++x) {
      const double ph = sign * kTwoPi * (f - nx / 2) * (x - nx / 2) / nx;
      wx(f, x) = cplx(std::cos(ph), std::sin(ph)) / std::sqrt(static_cast<double>(nx));
    }
  for (int f = 0; f < ny; ++f)
    for (int y = 0; y < ny; ++y) {
      const double ph = sign * kTwoPi * (f - ny / 2) * (y - ny / 2) / ny;
      wy(f, y) = cplx(std::cos(ph), std::sin(ph)) / std::sqrt(static_cast<double>(ny));
    }

  Eigen::Map<const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
      img(frame.data(), nx, ny);
  std::vector<cplx> out(frame.size());
  Eigen::Map<Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> res(
      out.data(), nx, ny);
  res = wx * img * wy.transpose();
  return out;
}

}  // namespace spr
