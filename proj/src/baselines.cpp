#include "spr/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "spr/rng.hpp"
#include "spr/threading.hpp"

namespace spr {

namespace {

// Circular autocorrelation-based Gram matrix of the patch operator:
// G(q, q') = sum_p u(p - q + c) u(p - q' + c) = autocorr(q - q').
void accumulate_patch_gram(std::span<const double> u, Shape3 shape, int side,
                           Eigen::MatrixXd& gram) {
  const int nx = shape.nx, ny = shape.ny, nt = shape.nt;
  const int span = 2 * side - 1;
  std::vector<double> corr(static_cast<std::size_t>(span) * span * span, 0.0);
  for (int dt = -(side - 1); dt <= side - 1; ++dt)
    for (int dx = -(side - 1); dx <= side - 1; ++dx)
      for (int dy = -(side - 1); dy <= side - 1; ++dy) {
        double acc = 0.0;
        for (int pt = 0; pt < nt; ++pt) {
          const int qt = (pt + dt + nt) % nt;
          for (int px = 0; px < nx; ++px) {
            const int qx = (px + dx + nx) % nx;
            const std::size_t arow = (static_cast<std::size_t>(pt) * nx + px) * ny;
            const std::size_t brow = (static_cast<std::size_t>(qt) * nx + qx) * ny;
            for (int py = 0; py < ny; ++py) {
              const int qy = (py + dy + ny) % ny;
              acc += u[arow + py] * u[brow + qy];
            }
          }
        }
        corr[(static_cast<std::size_t>(dt + side - 1) * span + (dx + side - 1)) * span +
             (dy + side - 1)] = acc;
      }

  const int d = side * side * side;
  auto lag = [&](int qa, int qb) {
    const int at = qa / (side * side), ax = (qa / side) % side, ay = qa % side;
    const int bt = qb / (side * side), bx = (qb / side) % side, by = qb % side;
    return corr[(static_cast<std::size_t>(at - bt + side - 1) * span +
                 (ax - bx + side - 1)) * span +
                (ay - by + side - 1)];
  };
  for (int qa = 0; qa < d; ++qa)
    for (int qb = 0; qb < d; ++qb) gram(qa, qb) += lag(qa, qb);
}

}  // namespace

CaolResult caol_pretrain(const std::vector<ComplexVolume>& ground_truth,
                         const CaolConfig& cfg, std::uint64_t seed) {
  if (ground_truth.empty())
    throw std::invalid_argument("caol_pretrain: need at least one volume");
  if (cfg.side < 1 || cfg.side % 2 == 0)
    throw std::invalid_argument("caol_pretrain: kernel side must be odd and >= 1");
  const int d = cfg.side * cfg.side * cfg.side;
  if (cfg.n_filters < 1 || cfg.n_filters > d)
    throw std::invalid_argument("caol_pretrain: need 1 <= K <= side^3 filters");
  if (cfg.outer_iters < 1)
    throw std::invalid_argument("caol_pretrain: need at least one round");

  // Training signal: both real channels of every volume.
  std::vector<RealVolume> channels;
  std::vector<Shape3> shapes;
  double signal_norm2 = 0.0;
  for (const auto& vol : ground_truth) {
    const Shape3 s = vol.shape();
    if (cfg.side > s.nx || cfg.side > s.ny || cfg.side > s.nt)
      throw std::invalid_argument("caol_pretrain: kernel larger than a training volume");
    channels.push_back(as_two_channel(vol));
    shapes.push_back(s);
    signal_norm2 += norm2(vol);
  }
  if (signal_norm2 == 0.0)
    throw std::invalid_argument("caol_pretrain: all training volumes are zero");

  const int K = cfg.n_filters;
  const double col_norm = 1.0 / std::sqrt(static_cast<double>(d));

  // Seeded start, projected onto the constraint set.
  Eigen::MatrixXd filters(d, K);
  {
    Rng rng(seed);
    for (int q = 0; q < d; ++q)
      for (int k = 0; k < K; ++k) filters(q, k) = rng.normal();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(filters,
                                          Eigen::ComputeThinU | Eigen::ComputeThinV);
    filters = col_norm * svd.matrixU() * svd.matrixV().transpose();
  }

  // The Gram matrix of the patch operator is shared by every round.
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t v = 0; v < channels.size(); ++v)
    for (int ch = 0; ch < 2; ++ch)
      accumulate_patch_gram(channels[v].channel(ch), shapes[v], cfg.side, gram);
  const double mu =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(gram).eigenvalues().maxCoeff();

  double alpha = cfg.sparsity_alpha;
  if (alpha < 0.0) {
    // Scale-aware default: a hundredth of the median absolute response.
    std::vector<double> mags;
    for (std::size_t v = 0; v < channels.size(); ++v)
      for (int ch = 0; ch < 2; ++ch)
        for (int k = 0; k < K; ++k) {
          std::vector<double> kernel(d);
          for (int q = 0; q < d; ++q) kernel[q] = filters(q, k);
          const std::vector<double> resp =
              conv3_circular(channels[v].channel(ch), shapes[v], kernel, cfg.side);
          for (double r : resp) mags.push_back(std::abs(r));
        }
    std::nth_element(mags.begin(), mags.begin() + mags.size() / 2, mags.end());
    alpha = 0.01 * mags[mags.size() / 2];
  }

  CaolResult result;
  result.sparsity_alpha_used = alpha;

  std::vector<double> kernel(d);
  for (int round = 0; round < cfg.outer_iters; ++round) {
    // (a) sparse coding, and the data needed for the filter update:
    // cross matrix B(:, k) = sum X^T s_k plus the code norms for the objective.
    Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(d, K);
    double codes_norm2 = 0.0;
    double codes_l1 = 0.0;
    for (std::size_t v = 0; v < channels.size(); ++v)
      for (int ch = 0; ch < 2; ++ch) {
        const auto u = channels[v].channel(ch);
        for (int k = 0; k < K; ++k) {
          for (int q = 0; q < d; ++q) kernel[q] = filters(q, k);
          std::vector<double> codes =
              conv3_circular(u, shapes[v], kernel, cfg.side);
          for (auto& c : codes) c = soft_threshold(c, alpha);
          for (double c : codes) {
            codes_norm2 += c * c;
            codes_l1 += std::abs(c);
          }
          const std::vector<double> b =
              conv3_kernel_grad(codes, u, shapes[v], cfg.side);
          for (int q = 0; q < d; ++q) cross(q, k) += b[q];
        }
      }

    // (b) constrained filter update by majorize-minimize: each step solves
    // max tr(H^T Btilde) over the constraint set, so the quadratic objective
    // never increases.
    for (int inner = 0; inner < 100; ++inner) {
      const Eigen::MatrixXd target = cross - gram * filters + mu * filters;
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(target,
                                            Eigen::ComputeThinU | Eigen::ComputeThinV);
      const Eigen::MatrixXd updated = col_norm * svd.matrixU() * svd.matrixV().transpose();
      const double change = (updated - filters).norm();
      filters = updated;
      if (change <= 1e-13 * filters.norm()) break;
    }

    // Objective at (H, s): 0.5 h^T G h - h^T b + 0.5|s|^2 + alpha|s|_1 per filter.
    double objective = 0.5 * codes_norm2 + alpha * codes_l1;
    for (int k = 0; k < K; ++k) {
      const Eigen::VectorXd h = filters.col(k);
      objective += 0.5 * h.dot(gram * h) - h.dot(cross.col(k));
    }
    result.objective.push_back(objective);
  }

  result.filters = FilterBank(K, cfg.side);
  for (int k = 0; k < K; ++k)
    for (int q = 0; q < d; ++q) result.filters.coeffs[static_cast<std::size_t>(k) * d + q] =
        filters(q, k);
  return result;
}

AltMinResult alternating_min_reconstruct(const MeasuredData& y, const AcquisitionModel& m,
                                         const FilterBank& fb, int outer_iters,
                                         int inner_cg) {
  fb.validate();
  if (outer_iters < 1)
    throw std::invalid_argument("alternating_min_reconstruct: need >= 1 iteration");
  if (inner_cg < 1)
    throw std::invalid_argument("alternating_min_reconstruct: need >= 1 CG iteration");
  const Shape3 shape = m.image_shape();
  if (fb.side > shape.nx || fb.side > shape.ny || fb.side > shape.nt)
    throw std::invalid_argument("alternating_min_reconstruct: kernel larger than image");

  const double lambda = fb.lambda();
  const double t = fb.threshold();
  const int n_tasks = fb.n_filters * 2;

  // sum_k h_k^T * h_k * v per channel, as one complex-linear operator.
  auto filter_gram = [&](const ComplexVolume& v) {
    const RealVolume ch = as_two_channel(v);
    std::vector<std::vector<double>> parts(n_tasks);
    parallel_for(n_tasks, [&](int task) {
      const int k = task / 2;
      const std::vector<double> w =
          conv3_circular(ch.channel(task % 2), shape, fb.kernel(k), fb.side);
      parts[task] = conv3_circular_transpose(w, shape, fb.kernel(k), fb.side);
    });
    RealVolume out(2, shape);
    for (int task = 0; task < n_tasks; ++task) {
      auto dst = out.channel(task % 2);
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += parts[task][i];
    }
    return from_two_channel(out);
  };

  const LinearOp system = [&](const ComplexVolume& v) {
    ComplexVolume out = m.pseudo_inverse(m.forward(v));
    out.add_scaled(filter_gram(v), lambda);
    return out;
  };

  const ComplexVolume a_sharp_y = m.pseudo_inverse(y);
  ComplexVolume x = a_sharp_y;

  AltMinResult result;
  result.objective.push_back(relaxed_objective(x, y, m, fb));

  for (int it = 0; it < outer_iters; ++it) {
    // Codes: exact soft-threshold of the filter responses, per channel.
    const RealVolume ch = as_two_channel(x);
    std::vector<std::vector<double>> code_maps(n_tasks);
    parallel_for(n_tasks, [&](int task) {
      const int k = task / 2;
      std::vector<double> w =
          conv3_circular(ch.channel(task % 2), shape, fb.kernel(k), fb.side);
      for (auto& v : w) v = soft_threshold(v, t);
      code_maps[task] = conv3_circular_transpose(w, shape, fb.kernel(k), fb.side);
    });
    RealVolume back(2, shape);
    for (int task = 0; task < n_tasks; ++task) {
      auto dst = back.channel(task % 2);
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += code_maps[task][i];
    }

    ComplexVolume b = a_sharp_y;
    b.add_scaled(from_two_channel(back), lambda);
    x = cg_solve(system, b, inner_cg, 1e-12).x;
    result.objective.push_back(relaxed_objective(x, y, m, fb));
  }
  result.x = std::move(x);
  return result;
}

}  // namespace spr
