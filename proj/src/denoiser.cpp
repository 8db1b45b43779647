#include "spr/denoiser.hpp"

#include <cmath>
#include <stdexcept>

#include "spr/rng.hpp"
#include "spr/serialize.hpp"
#include "spr/threading.hpp"

namespace spr {

double softplus(double r) {
  if (r > 0.0) return r + std::log1p(std::exp(-r));
  return std::log1p(std::exp(r));
}

double softplus_deriv(double r) { return 1.0 / (1.0 + std::exp(-r)); }

double inverse_softplus(double y) {
  if (!(y > 0.0)) throw std::invalid_argument("inverse_softplus: argument must be > 0");
  return std::log(std::expm1(y));
}

FilterBank::FilterBank(int k, int kf) : n_filters(k), side(kf) {
  coeffs.assign(static_cast<std::size_t>(k) * kf * kf * kf, 0.0);
  alpha_raw = inverse_softplus(0.1);
  lambda_raw = inverse_softplus(1.0);
  validate();
}

FilterBank FilterBank::random_init(int k, int kf, std::uint64_t seed, double smooth_b) {
  FilterBank fb(k, kf);
  fb.smooth_b = smooth_b;
  Rng rng(seed);
  const double s = 1.0 / std::sqrt(static_cast<double>(fb.coeffs.size()));
  for (auto& c : fb.coeffs) c = rng.uniform(-s, s);
  fb.validate();
  return fb;
}

void FilterBank::validate() const {
  if (n_filters < 1) throw std::invalid_argument("FilterBank: need at least one filter");
  if (side < 1 || side % 2 == 0)
    throw std::invalid_argument("FilterBank: kernel side must be odd and >= 1");
  if (coeffs.size() != static_cast<std::size_t>(n_filters) * side * side * side)
    throw std::invalid_argument("FilterBank: coefficient count mismatch");
  if (!(smooth_b > 0.0)) throw std::invalid_argument("FilterBank: smooth_b must be > 0");
}

void save_filter_bank(const FilterBank& fb, const std::filesystem::path& path,
                      const nlohmann::json& extra) {
  fb.validate();
  const std::int64_t shape[4] = {fb.n_filters, fb.side, fb.side, fb.side};
  save_spt_f64(path, shape, fb.coeffs);
  nlohmann::json j = extra;
  j["alpha_raw"] = fb.alpha_raw;
  j["lambda_raw"] = fb.lambda_raw;
  j["smooth_b"] = fb.smooth_b;
  std::filesystem::path jpath = path;
  jpath.replace_extension(".json");
  save_json(jpath, j);
}

FilterBank load_filter_bank(const std::filesystem::path& path) {
  Spt t = load_spt(path);
  if (t.dtype != "f64" || t.shape.size() != 4 || t.shape[1] != t.shape[2] ||
      t.shape[1] != t.shape[3])
    throw std::runtime_error("expected an f64 [K, s, s, s] tensor in " + path.string());
  FilterBank fb;
  fb.n_filters = static_cast<int>(t.shape[0]);
  fb.side = static_cast<int>(t.shape[1]);
  fb.coeffs = std::move(t.f64);
  std::filesystem::path jpath = path;
  jpath.replace_extension(".json");
  const nlohmann::json j = load_json(jpath);
  fb.alpha_raw = j.at("alpha_raw").get<double>();
  fb.lambda_raw = j.at("lambda_raw").get<double>();
  fb.smooth_b = j.at("smooth_b").get<double>();
  fb.validate();
  return fb;
}

// ---------------------------------------------------------------------------
// Circular convolutions

namespace {

void check_conv_args(std::size_t u_size, Shape3 shape, std::size_t kernel_size, int side) {
  if (!shape.valid()) throw std::invalid_argument("conv3: invalid shape");
  if (u_size != shape.size()) throw std::invalid_argument("conv3: volume size mismatch");
  if (side < 1 || side % 2 == 0)
    throw std::invalid_argument("conv3: kernel side must be odd and >= 1");
  if (kernel_size != static_cast<std::size_t>(side) * side * side)
    throw std::invalid_argument("conv3: kernel size mismatch");
  if (side > shape.nx || side > shape.ny || side > shape.nt)
    throw std::invalid_argument("conv3: kernel larger than volume");
}

// wrap[p * side + q] = (p - q + c) mod n
std::vector<int> wrap_table(int n, int side) {
  const int c = side / 2;
  std::vector<int> wrap(static_cast<std::size_t>(n) * side);
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < side; ++q) {
      int idx = (p - q + c) % n;
      if (idx < 0) idx += n;
      wrap[static_cast<std::size_t>(p) * side + q] = idx;
    }
  return wrap;
}

}  // namespace

std::vector<double> conv3_circular(std::span<const double> u, Shape3 shape,
                                   std::span<const double> kernel, int side) {
  check_conv_args(u.size(), shape, kernel.size(), side);
  const int nx = shape.nx, ny = shape.ny, nt = shape.nt;
  const std::vector<int> wt = wrap_table(nt, side);
  const std::vector<int> wx = wrap_table(nx, side);
  const std::vector<int> wy = wrap_table(ny, side);

  std::vector<double> out(u.size());
  // Kernel taps are accumulated in (qt, qx, qy) order per output voxel; the
  // brute-force reference in the tests sums in the same order, so the two
  // agree exactly.
  for (int pt = 0; pt < nt; ++pt) {
    const int* wtp = wt.data() + static_cast<std::size_t>(pt) * side;
    for (int px = 0; px < nx; ++px) {
      const int* wxp = wx.data() + static_cast<std::size_t>(px) * side;
      for (int py = 0; py < ny; ++py) {
        const int* wyp = wy.data() + static_cast<std::size_t>(py) * side;
        double acc = 0.0;
        std::size_t kidx = 0;
        for (int qt = 0; qt < side; ++qt) {
          const std::size_t tbase = static_cast<std::size_t>(wtp[qt]) * nx;
          for (int qx = 0; qx < side; ++qx) {
            const std::size_t xybase = (tbase + wxp[qx]) * ny;
            for (int qy = 0; qy < side; ++qy, ++kidx)
              acc += kernel[kidx] * u[xybase + wyp[qy]];
          }
        }
        out[(static_cast<std::size_t>(pt) * nx + px) * ny + py] = acc;
      }
    }
  }
  return out;
}

std::vector<double> conv3_circular_transpose(std::span<const double> v, Shape3 shape,
                                             std::span<const double> kernel, int side) {
  check_conv_args(v.size(), shape, kernel.size(), side);
  std::vector<double> reversed(kernel.size());
  for (std::size_t i = 0; i < kernel.size(); ++i) reversed[i] = kernel[kernel.size() - 1 - i];
  return conv3_circular(v, shape, reversed, side);
}

std::vector<double> conv3_kernel_grad(std::span<const double> a, std::span<const double> b,
                                      Shape3 shape, int side) {
  if (a.size() != shape.size() || b.size() != shape.size())
    throw std::invalid_argument("conv3_kernel_grad: volume size mismatch");
  check_conv_args(a.size(), shape, static_cast<std::size_t>(side) * side * side, side);
  const int nx = shape.nx, ny = shape.ny, nt = shape.nt;
  const std::vector<int> wt = wrap_table(nt, side);
  const std::vector<int> wx = wrap_table(nx, side);
  const std::vector<int> wy = wrap_table(ny, side);

  std::vector<double> grad(static_cast<std::size_t>(side) * side * side, 0.0);
  std::size_t kidx = 0;
  for (int qt = 0; qt < side; ++qt)
    for (int qx = 0; qx < side; ++qx)
      for (int qy = 0; qy < side; ++qy, ++kidx) {
        double acc = 0.0;
        std::size_t p = 0;
        for (int pt = 0; pt < nt; ++pt) {
          const std::size_t tbase = static_cast<std::size_t>(wt[static_cast<std::size_t>(pt) * side + qt]) * nx;
          for (int px = 0; px < nx; ++px) {
            const std::size_t xybase = (tbase + wx[static_cast<std::size_t>(px) * side + qx]) * ny;
            const int* wyq = wy.data() + qy;
            for (int py = 0; py < ny; ++py, ++p)
              acc += a[p] * b[xybase + wyq[static_cast<std::size_t>(py) * side]];
          }
        }
        grad[kidx] = acc;
      }
  return grad;
}

// ---------------------------------------------------------------------------
// Thresholding

double soft_threshold(double z, double t) {
  if (t < 0.0) throw std::invalid_argument("soft_threshold: threshold must be >= 0");
  const double mag = std::abs(z) - t;
  return mag > 0.0 ? (z > 0.0 ? mag : -mag) : 0.0;
}

double smooth_soft_threshold(double z, double t, double b) {
  if (!(b > 0.0)) throw std::invalid_argument("smooth_soft_threshold: b must be > 0");
  return z + 0.5 * (std::sqrt((z - t) * (z - t) + b) - std::sqrt((z + t) * (z + t) + b));
}

double smooth_soft_threshold_dz(double z, double t, double b) {
  if (!(b > 0.0)) throw std::invalid_argument("smooth_soft_threshold: b must be > 0");
  const double m = z - t, p = z + t;
  return 1.0 + 0.5 * (m / std::sqrt(m * m + b) - p / std::sqrt(p * p + b));
}

double smooth_soft_threshold_dt(double z, double t, double b) {
  if (!(b > 0.0)) throw std::invalid_argument("smooth_soft_threshold: b must be > 0");
  const double m = z - t, p = z + t;
  return -0.5 * (m / std::sqrt(m * m + b) + p / std::sqrt(p * p + b));
}

// ---------------------------------------------------------------------------
// Denoising step

ComplexVolume denoise_step(const ComplexVolume& x, const FilterBank& fb,
                           bool exact_threshold,
                           std::vector<std::vector<double>>* coeff_maps) {
  fb.validate();
  const Shape3 shape = x.shape();
  if (fb.side > shape.nx || fb.side > shape.ny || fb.side > shape.nt)
    throw std::invalid_argument("denoise_step: kernel larger than volume");

  const RealVolume channels = as_two_channel(x);
  const double t = fb.threshold();
  const double b = fb.smooth_b;
  const int n_tasks = fb.n_filters * 2;

  if (coeff_maps) coeff_maps->assign(n_tasks, {});
  std::vector<std::vector<double>> partial(n_tasks);
  parallel_for(n_tasks, [&](int task) {
    const int k = task / 2;
    const int ch = task % 2;
    std::vector<double> w =
        conv3_circular(channels.channel(ch), shape, fb.kernel(k), fb.side);
    if (coeff_maps) (*coeff_maps)[task] = w;
    if (exact_threshold) {
      for (auto& v : w) v = soft_threshold(v, t);
    } else {
      for (auto& v : w) v = smooth_soft_threshold(v, t, b);
    }
    partial[task] = conv3_circular_transpose(w, shape, fb.kernel(k), fb.side);
  });

  // Fixed-order reduction keeps the result independent of the thread count.
  RealVolume out(2, shape);
  for (int task = 0; task < n_tasks; ++task) {
    auto dst = out.channel(task % 2);
    const auto& src = partial[task];
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  }
  return from_two_channel(out);
}

}  // namespace spr
