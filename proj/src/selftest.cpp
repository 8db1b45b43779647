#include "spr/selftest.hpp"

#include <cmath>
#include <functional>
#include <ostream>
#include <string>

#include <Eigen/Dense>

#include "spr/autodiff.hpp"
#include "spr/baselines.hpp"
#include "spr/datasim.hpp"
#include "spr/rng.hpp"
#include "spr/solver.hpp"

namespace spr::selftest {

namespace {

ComplexVolume random_volume(Shape3 s, Rng& rng) {
  ComplexVolume x(s);
  for (auto& v : x.flat()) v = cplx(rng.normal(), rng.normal());
  return x;
}

MeasuredData random_data_like(const MeasuredData& proto, Rng& rng) {
  MeasuredData y = proto;
  for (auto& frame : y.data)
    for (auto& v : frame) v = cplx(rng.normal(), rng.normal());
  return y;
}

struct Runner {
  std::ostream& out;
  bool all_ok = true;

  void check(const std::string& name, const std::function<bool(std::string&)>& body) {
    std::string detail;
    bool ok = false;
    try {
      ok = body(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    out << (ok ? "[ok]   " : "[FAIL] ") << name;
    if (!detail.empty()) out << "  (" << detail << ")";
    out << "\n";
    all_ok = all_ok && ok;
  }
};

std::shared_ptr<ForwardModel> small_radial_model(Shape3 s, int n_coils, int spokes,
                                                 std::uint64_t seed) {
  Trajectory traj = golden_angle_trajectory(s.nx, s.nt, spokes);
  DensityWeights w = ramp_density_weights(traj);
  CoilMaps coils = make_coil_maps(s.nx, s.ny, n_coils, seed);
  return std::make_shared<ForwardModel>(std::move(coils), std::move(traj), std::move(w), s);
}

}  // namespace

bool run_all(std::ostream& out) {
  Runner r{out};

  r.check("operator adjointness (radial and Cartesian)", [&](std::string& detail) {
    Rng rng(71);
    double worst = 0.0;
    const Shape3 s{8, 8, 2};
    for (int rep = 0; rep < 5; ++rep) {
      auto model = small_radial_model(s, 2, 3, 100 + rep);
      const ComplexVolume x = random_volume(s, rng);
      const MeasuredData ax = model->forward(x);
      const MeasuredData y = random_data_like(ax, rng);
      const ComplexVolume aty = model->adjoint(y);
      const double mismatch = std::abs(inner(ax, y) - inner(x, aty));
      worst = std::max(worst, mismatch / (norm(x) * std::sqrt(norm2(y))));
    }
    std::vector<std::uint8_t> mask(s.size());
    for (auto& m : mask) m = rng.uniform() < 0.4 ? 1 : 0;
    CartesianMaskedModel cart(mask, s, make_coil_maps(s.nx, s.ny, 2, 5));
    const ComplexVolume x = random_volume(s, rng);
    const MeasuredData ax = cart.forward(x);
    const MeasuredData y = random_data_like(ax, rng);
    const double mismatch = std::abs(inner(ax, y) - inner(x, cart.adjoint(y)));
    worst = std::max(worst, mismatch / (norm(x) * std::sqrt(norm2(y))));
    detail = "max relative mismatch " + std::to_string(worst);
    return worst <= 1e-10;
  });

  r.check("NDFT matches the centered unitary FFT on grid coordinates", [&](std::string& detail) {
    Rng rng(13);
    const int n = 8;
    std::vector<cplx> frame(n * n);
    for (auto& v : frame) v = cplx(rng.normal(), rng.normal());
    std::vector<KSample> grid;
    for (int fx = 0; fx < n; ++fx)
      for (int fy = 0; fy < n; ++fy)
        grid.push_back({static_cast<double>(fx - n / 2) / n,
                        static_cast<double>(fy - n / 2) / n});
    const std::vector<cplx> via_ndft = ndft_forward(frame, n, n, grid);
    const std::vector<cplx> via_fft = centered_dft_2d(frame, n, n, -1);
    double err = 0.0, ref = 0.0;
    for (std::size_t i = 0; i < via_fft.size(); ++i) {
      err += std::norm(via_ndft[i] - via_fft[i]);
      ref += std::norm(via_fft[i]);
    }
    const double rel = std::sqrt(err / ref);
    detail = "relative error " + std::to_string(rel);
    return rel <= 1e-10;
  });

  r.check("CG matches a dense Hermitian solve", [&](std::string& detail) {
    Rng rng(29);
    const int dim = 24;
    Eigen::MatrixXcd a(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) a(i, j) = cplx(rng.normal(), rng.normal());
    Eigen::MatrixXcd h = a.adjoint() * a + 0.5 * Eigen::MatrixXcd::Identity(dim, dim);
    const Shape3 s{dim, 1, 1};
    ComplexVolume b(s);
    for (auto& v : b.flat()) v = cplx(rng.normal(), rng.normal());
    const LinearOp op = [&](const ComplexVolume& v) {
      ComplexVolume out(s);
      Eigen::Map<const Eigen::VectorXcd> vin(v.flat().data(), dim);
      Eigen::Map<Eigen::VectorXcd> vout(out.flat().data(), dim);
      vout = h * vin;
      return out;
    };
    const ComplexVolume x = cg_solve(op, b, dim * 2, 0.0).x;
    Eigen::Map<const Eigen::VectorXcd> bv(b.flat().data(), dim);
    const Eigen::VectorXcd dense = h.ldlt().solve(bv);
    double err = 0.0;
    for (int i = 0; i < dim; ++i) err += std::norm(x.flat()[i] - dense(i));
    const double rel = std::sqrt(err) / dense.norm();
    detail = "relative error " + std::to_string(rel);
    return rel <= 1e-8;
  });

  r.check("network gradients match finite differences", [&](std::string& detail) {
    double worst = 0.0;
    for (std::uint64_t seed : {1ull, 2ull}) {
      const Shape3 s{8, 8, 2};
      auto model = small_radial_model(s, 2, 3, 300 + seed);
      PhantomSpec ph;
      ph.shape = s;
      ph.seed = 400 + seed;
      ph.n_ellipses = 3;
      const ComplexVolume x_f = make_cine_phantom(ph);
      const MeasuredData y = simulate_kspace(x_f, *model, 0.02, 500 + seed);
      const FilterBank fb = FilterBank::random_init(2, 3, 600 + seed);
      NetworkConfig cfg;
      cfg.unroll_steps = 2;
      cfg.n_cg = 3;
      const FiniteDiffReport rep = finite_diff_check(y, x_f, *model, fb, cfg, 1e-5);
      worst = std::max(worst, rep.max_rel_err);
    }
    detail = "max relative error " + std::to_string(worst);
    return worst <= 1e-4;
  });

  r.check("smooth threshold surrogate: bound and derivatives", [&](std::string& detail) {
    const double b = 1e-3, t = 0.5;
    double worst = 0.0;
    for (int i = 0; i <= 20000; ++i) {
      const double z = -5.0 + i * (10.0 / 20000.0);
      worst = std::max(worst,
                       std::abs(smooth_soft_threshold(z, t, b) - soft_threshold(z, t)));
    }
    const double z = 0.3, tt = 0.2;
    const double h = 1e-6;
    const double fd_z =
        (smooth_soft_threshold(z + h, tt, b) - smooth_soft_threshold(z - h, tt, b)) / (2 * h);
    const double fd_t =
        (smooth_soft_threshold(z, tt + h, b) - smooth_soft_threshold(z, tt - h, b)) / (2 * h);
    const double ez = std::abs(fd_z - smooth_soft_threshold_dz(z, tt, b)) / std::abs(fd_z);
    const double et = std::abs(fd_t - smooth_soft_threshold_dt(z, tt, b)) / std::abs(fd_t);
    detail = "max deviation " + std::to_string(worst);
    return worst <= std::sqrt(b) && ez <= 1e-6 && et <= 1e-6;
  });

  r.check("alternating minimization objective is non-increasing", [&](std::string& detail) {
    const Shape3 s{8, 8, 2};
    auto model = small_radial_model(s, 2, 3, 900);
    PhantomSpec ph;
    ph.shape = s;
    ph.seed = 901;
    ph.n_ellipses = 3;
    const ComplexVolume x_f = make_cine_phantom(ph);
    const MeasuredData y = simulate_kspace(x_f, *model, 0.02, 902);
    const FilterBank fb = FilterBank::random_init(4, 3, 903);
    const AltMinResult res = alternating_min_reconstruct(y, *model, fb, 10, 128);
    double worst = 0.0;
    for (std::size_t i = 1; i < res.objective.size(); ++i)
      worst = std::max(worst, res.objective[i] - res.objective[i - 1]);
    detail = "max increase " + std::to_string(worst);
    return worst <= 1e-9;
  });

  r.check("decoupled pretraining: monotone objective, orthonormal filters",
          [&](std::string& detail) {
    PhantomSpec ph;
    ph.shape = Shape3{12, 12, 4};
    ph.seed = 950;
    ph.n_ellipses = 3;
    const std::vector<ComplexVolume> truths = {make_cine_phantom(ph)};
    CaolConfig cfg;
    cfg.n_filters = 8;
    cfg.side = 3;
    cfg.outer_iters = 8;
    const CaolResult res = caol_pretrain(truths, cfg, 951);
    double worst = 0.0;
    for (std::size_t i = 1; i < res.objective.size(); ++i)
      worst = std::max(worst, res.objective[i] - res.objective[i - 1]);
    const int d = cfg.side * cfg.side * cfg.side;
    double constraint = 0.0;
    for (int a = 0; a < cfg.n_filters; ++a)
      for (int b = 0; b < cfg.n_filters; ++b) {
        double dot = 0.0;
        for (int q = 0; q < d; ++q)
          dot += res.filters.coeffs[a * d + q] * res.filters.coeffs[b * d + q];
        const double target = a == b ? 1.0 / d : 0.0;
        constraint = std::max(constraint, std::abs(dot - target));
      }
    detail = "max increase " + std::to_string(worst) + ", constraint deviation " +
             std::to_string(constraint);
    return worst <= 1e-9 && constraint <= 1e-8;
  });

  r.check("first optimizer step follows the gradient sign", [&](std::string&) {
    TrainConfig cfg;
    cfg.learning_rate = 1e-3;
    AdamState state;
    double params[3] = {1.0, -2.0, 0.5};
    const double grads[3] = {1.0, -1.0, 1.0};
    adam_step({params, 3}, {grads, 3}, state, cfg);
    return std::abs(params[0] - (1.0 - cfg.learning_rate)) <= cfg.learning_rate * 1e-6 &&
           params[1] > -2.0 && params[2] < 0.5;
  });

  return r.all_ok;
}

}  // namespace spr::selftest
