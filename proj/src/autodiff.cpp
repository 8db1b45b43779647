#include "spr/autodiff.hpp"

#include <cmath>
#include <stdexcept>

#include "spr/errors.hpp"
#include "spr/threading.hpp"

namespace spr {

double loss_l2(const ComplexVolume& x_out, const ComplexVolume& x_ref) {
  if (x_out.shape() != x_ref.shape())
    throw std::invalid_argument("loss_l2: shape mismatch");
  double acc = 0.0;
  auto a = x_out.flat();
  auto b = x_ref.flat();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double dr = a[i].real() - b[i].real();
    const double di = a[i].imag() - b[i].imag();
    acc += dr * dr + di * di;
  }
  return acc;
}

namespace {

// Reverse sweep through one recorded CG solve. Returns the gradient with
// respect to b and accumulates the lambda contribution of each H application.
ComplexVolume cg_backward(const CgTape& tape, const ComplexVolume& grad_x,
                          const AcquisitionModel& m, double lambda, double* g_lambda) {
  const int n = tape.iters;
  const Shape3 shape = tape.b.shape();
  ComplexVolume g_r = ComplexVolume::zeros(shape);
  ComplexVolume g_p = ComplexVolume::zeros(shape);
  std::vector<double> g_rho(static_cast<std::size_t>(n) + 1, 0.0);

  for (int i = n - 1; i >= 0; --i) {
    if (i < n - 1) {
      // p_{i+1} = r_{i+1} + beta_i p_i
      g_r.add(g_p);
      const double g_beta = real_inner(g_p, tape.p[i]);
      g_p.scale(tape.beta[i]);
      // beta_i = rho_{i+1} / rho_i
      g_rho[i + 1] += g_beta / tape.rho[i];
      g_rho[i] -= g_beta * tape.rho[i + 1] / (tape.rho[i] * tape.rho[i]);
    } else {
      g_p.fill(cplx(0.0, 0.0));
    }
    // rho_{i+1} = <r_{i+1}, r_{i+1}>
    g_r.add_scaled(tape.r[i + 1], 2.0 * g_rho[i + 1]);
    // r_{i+1} = r_i - step_i q_i   (g_r passes through to r_i)
    double g_step = -real_inner(g_r, tape.q[i]);
    ComplexVolume g_q = g_r;
    g_q.scale(-tape.step[i]);
    // x_{i+1} = x_i + step_i p_i   (grad_x passes through to x_i)
    g_step += real_inner(grad_x, tape.p[i]);
    g_p.add_scaled(grad_x, tape.step[i]);
    // step_i = rho_i / pq_i
    g_rho[i] += g_step / tape.pq[i];
    const double g_pq = -g_step * tape.rho[i] / (tape.pq[i] * tape.pq[i]);
    // pq_i = Re<p_i, q_i>
    g_p.add_scaled(tape.q[i], g_pq);
    g_q.add_scaled(tape.p[i], g_pq);
    // q_i = H p_i with H = Ashp A + lambda I; H is self-adjoint.
    g_p.add(m.normal(g_q, lambda));
    *g_lambda += real_inner(g_q, tape.p[i]);
  }
  // r_0 = b, p_0 = b, rho_0 = <r_0, r_0>, x_0 = 0.
  g_r.add_scaled(tape.r[0], 2.0 * g_rho[0]);
  g_r.add(g_p);
  return g_r;  // gradient with respect to b
}

}  // namespace

Gradients network_backward(const ForwardTape& tape, const ComplexVolume& grad_out,
                           const AcquisitionModel& m, const FilterBank& fb,
                           const NetworkConfig& cfg, bool skip_filter_grads) {
  fb.validate();
  const Shape3 shape = m.image_shape();
  if (grad_out.shape() != shape)
    throw std::invalid_argument("network_backward: grad_out shape mismatch");
  if (tape.x_out.shape() != shape)
    throw std::invalid_argument("network_backward: tape image shape mismatch");
  const int n_tasks = fb.n_filters * 2;
  for (const auto& step : tape.steps) {
    if (static_cast<int>(step.coeff.size()) != n_tasks ||
        step.x_in.shape() != shape || step.z.shape() != shape)
      throw std::invalid_argument("network_backward: tape does not match the filter bank");
  }

  const double alpha = fb.alpha();
  const double lambda = fb.lambda();
  const double t = fb.threshold();
  const double b = fb.smooth_b;

  Gradients grads;
  grads.d_filters.assign(fb.coeffs.size(), 0.0);
  double g_lambda = 0.0;
  double g_threshold = 0.0;

  ComplexVolume g_x = grad_out;
  for (int j = static_cast<int>(tape.steps.size()) - 1; j >= 0; --j) {
    const StepTape& step = tape.steps[j];

    // Data consistency: x_{j+1} = cg(H, a_sharp_y + lambda z_j).
    ComplexVolume g_b = cg_backward(step.cg, g_x, m, lambda, &g_lambda);
    g_lambda += real_inner(g_b, step.z);
    ComplexVolume g_z = std::move(g_b);
    g_z.scale(lambda);

    // Denoiser: z = sum_k convT(S(conv(x, h_k)), h_k) per channel.
    const RealVolume g_z_ch = as_two_channel(g_z);
    const RealVolume x_ch = as_two_channel(step.x_in);
    std::vector<std::vector<double>> gx_parts(n_tasks);
    std::vector<std::vector<double>> gh_parts(n_tasks);
    std::vector<double> gt_parts(n_tasks, 0.0);
    parallel_for(n_tasks, [&](int task) {
      const int k = task / 2;
      const int ch = task % 2;
      const auto kernel = fb.kernel(k);
      const std::vector<double>& w = step.coeff[task];
      if (w.size() != shape.size())
        throw std::invalid_argument("network_backward: recorded coefficient map mismatch");

      // Adjoint of the transpose-convolution is the forward convolution.
      std::vector<double> g_s =
          conv3_circular(g_z_ch.channel(ch), shape, kernel, fb.side);

      std::vector<double> s_codes;
      if (!skip_filter_grads) {
        s_codes.resize(w.size());
        if (cfg.exact_threshold) {
          for (std::size_t i = 0; i < w.size(); ++i) s_codes[i] = soft_threshold(w[i], t);
        } else {
          for (std::size_t i = 0; i < w.size(); ++i)
            s_codes[i] = smooth_soft_threshold(w[i], t, b);
        }
        gh_parts[task] = conv3_kernel_grad(s_codes, g_z_ch.channel(ch), shape, fb.side);
      }

      // Threshold is applied elementwise; fold its local derivatives in.
      double gt = 0.0;
      std::vector<double> g_w(w.size());
      if (cfg.exact_threshold) {
        for (std::size_t i = 0; i < w.size(); ++i) {
          const bool live = std::abs(w[i]) > t;
          g_w[i] = live ? g_s[i] : 0.0;
          if (live) gt -= g_s[i] * (w[i] > 0.0 ? 1.0 : -1.0);
        }
      } else {
        for (std::size_t i = 0; i < w.size(); ++i) {
          g_w[i] = g_s[i] * smooth_soft_threshold_dz(w[i], t, b);
          gt += g_s[i] * smooth_soft_threshold_dt(w[i], t, b);
        }
      }
      gt_parts[task] = gt;

      gx_parts[task] = conv3_circular_transpose(g_w, shape, kernel, fb.side);
      if (!skip_filter_grads) {
        const std::vector<double> gh2 =
            conv3_kernel_grad(g_w, x_ch.channel(ch), shape, fb.side);
        auto& gh = gh_parts[task];
        for (std::size_t i = 0; i < gh.size(); ++i) gh[i] += gh2[i];
      }
    });

    // Deterministic fixed-order reductions.
    RealVolume g_x_ch(2, shape);
    for (int task = 0; task < n_tasks; ++task) {
      auto dst = g_x_ch.channel(task % 2);
      const auto& src = gx_parts[task];
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
      g_threshold += gt_parts[task];
      if (!skip_filter_grads) {
        const int k = task / 2;
        double* gh = grads.d_filters.data() + k * fb.kernel_size();
        const auto& src_h = gh_parts[task];
        for (std::size_t i = 0; i < src_h.size(); ++i) gh[i] += src_h[i];
      }
    }
    g_x = from_two_channel(g_x_ch);
  }
  // x0 is a constant with respect to the parameters; g_x stops here.

  // threshold = alpha / lambda, then the Soft-Plus transforms.
  const double g_alpha = g_threshold / lambda;
  g_lambda -= g_threshold * alpha / (lambda * lambda);
  grads.d_alpha_raw = g_alpha * softplus_deriv(fb.alpha_raw);
  grads.d_lambda_raw = g_lambda * softplus_deriv(fb.lambda_raw);
  return grads;
}

namespace {

double training_loss(const MeasuredData& y, const ComplexVolume& x_ref,
                     const AcquisitionModel& m, const FilterBank& fb,
                     const NetworkConfig& cfg) {
  const ComplexVolume x0 = m.pseudo_inverse(y);
  return loss_l2(network_forward(x0, y, m, fb, cfg, false).x, x_ref);
}

double block_rel_err(std::span<const double> analytic, std::span<const double> fd) {
  double diff2 = 0.0, ref2 = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double d = analytic[i] - fd[i];
    diff2 += d * d;
    ref2 += fd[i] * fd[i];
  }
  return std::sqrt(diff2) / std::max(std::sqrt(ref2), 1e-12);
}

}  // namespace

FiniteDiffReport finite_diff_check(const MeasuredData& y, const ComplexVolume& x_ref,
                                   const AcquisitionModel& m, const FilterBank& fb,
                                   const NetworkConfig& cfg, double rel_step) {
  if (fb.parameter_count() > 500)
    throw std::invalid_argument("finite_diff_check: instance too large");

  const ComplexVolume x0 = m.pseudo_inverse(y);
  NetworkResult fwd = network_forward(x0, y, m, fb, cfg, true);
  ComplexVolume g_out = fwd.x;
  g_out.sub(x_ref);
  g_out.scale(2.0);
  const Gradients analytic = network_backward(*fwd.tape, g_out, m, fb, cfg);

  auto probe = [&](FilterBank& theta, double* coord) {
    const double saved = *coord;
    const double h = rel_step * (1.0 + std::abs(saved));
    *coord = saved + h;
    const double up = training_loss(y, x_ref, m, theta, cfg);
    *coord = saved - h;
    const double down = training_loss(y, x_ref, m, theta, cfg);
    *coord = saved;
    if (!std::isfinite(up) || !std::isfinite(down))
      throw NumericalError("finite_diff_check: non-finite loss");
    return (up - down) / (2.0 * h);
  };

  FilterBank theta = fb;
  std::vector<double> fd_filters(theta.coeffs.size());
  for (std::size_t i = 0; i < theta.coeffs.size(); ++i)
    fd_filters[i] = probe(theta, &theta.coeffs[i]);
  const double fd_alpha = probe(theta, &theta.alpha_raw);
  const double fd_lambda = probe(theta, &theta.lambda_raw);

  FiniteDiffReport report;
  report.filters_rel_err = block_rel_err(analytic.d_filters, fd_filters);
  report.alpha_rel_err = block_rel_err({&analytic.d_alpha_raw, 1}, {&fd_alpha, 1});
  report.lambda_rel_err = block_rel_err({&analytic.d_lambda_raw, 1}, {&fd_lambda, 1});
  report.max_rel_err = std::max({report.filters_rel_err, report.alpha_rel_err,
                                 report.lambda_rel_err});
  return report;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const TrainConfig& cfg) {
  if (params.size() != grads.size())
    throw std::invalid_argument("adam_step: parameter/gradient size mismatch");
  for (double g : grads)
    if (!std::isfinite(g)) throw NumericalError("adam_step: non-finite gradient");
  if (state.t == 0) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  if (state.m.size() != params.size())
    throw std::invalid_argument("adam_step: state size mismatch");

  state.t += 1;
  const double b1 = cfg.adam_beta1;
  const double b2 = cfg.adam_beta2;
  const double corr1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double corr2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = b1 * state.m[i] + (1.0 - b1) * grads[i];
    state.v[i] = b2 * state.v[i] + (1.0 - b2) * grads[i] * grads[i];
    const double mhat = state.m[i] / corr1;
    const double vhat = state.v[i] / corr2;
    params[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_eps);
  }
}

TrainResult train(const std::vector<TrainSample>& train_set,
                  const std::vector<TrainSample>& val_set, FilterBank fb0,
                  const NetworkConfig& net_cfg, const TrainConfig& train_cfg,
                  bool freeze_filters) {
  if (train_set.empty()) throw std::invalid_argument("train: empty training set");
  if (train_cfg.learning_rate < 0.0)
    throw std::invalid_argument("train: learning rate must be >= 0");
  if (train_cfg.epochs < 0) throw std::invalid_argument("train: epochs must be >= 0");
  fb0.validate();

  // The network input is constant per sample; compute it once.
  auto cache_inputs = [](const std::vector<TrainSample>& set) {
    std::vector<ComplexVolume> x0s;
    x0s.reserve(set.size());
    for (const auto& s : set) {
      if (!s.model) throw std::invalid_argument("train: sample without a model");
      x0s.push_back(s.model->pseudo_inverse(s.y));
    }
    return x0s;
  };
  const std::vector<ComplexVolume> train_x0 = cache_inputs(train_set);
  const std::vector<ComplexVolume> val_x0 = cache_inputs(val_set);

  auto validation_loss = [&](const FilterBank& fb) {
    if (val_set.empty()) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < val_set.size(); ++i) {
      acc += loss_l2(
          network_forward(val_x0[i], val_set[i].y, *val_set[i].model, fb, net_cfg, false).x,
          val_set[i].x_ref);
    }
    return acc / static_cast<double>(val_set.size());
  };

  FilterBank fb = std::move(fb0);
  AdamState state;
  Rng shuffle_rng(train_cfg.seed);
  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainResult result;
  result.filters = fb;
  double best_val = validation_loss(fb);
  result.best_epoch = 0;

  const std::size_t n_scalars = 2;
  for (int epoch = 1; epoch <= train_cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t idx : order) {
      const TrainSample& sample = train_set[idx];
      const AcquisitionModel& model = *sample.model;
      NetworkResult fwd =
          network_forward(train_x0[idx], sample.y, model, fb, net_cfg, true);
      const double loss = loss_l2(fwd.x, sample.x_ref);
      if (!std::isfinite(loss)) {
        result.diverged = true;
        return result;
      }
      loss_sum += loss;

      ComplexVolume g_out = fwd.x;
      g_out.sub(sample.x_ref);
      g_out.scale(2.0);
      const Gradients grads =
          network_backward(*fwd.tape, g_out, model, fb, net_cfg, freeze_filters);

      if (freeze_filters) {
        double scalars[2] = {fb.alpha_raw, fb.lambda_raw};
        const double g[2] = {grads.d_alpha_raw, grads.d_lambda_raw};
        adam_step({scalars, n_scalars}, {g, n_scalars}, state, train_cfg);
        fb.alpha_raw = scalars[0];
        fb.lambda_raw = scalars[1];
      } else {
        std::vector<double> params(fb.coeffs);
        params.push_back(fb.alpha_raw);
        params.push_back(fb.lambda_raw);
        std::vector<double> g(grads.d_filters);
        g.push_back(grads.d_alpha_raw);
        g.push_back(grads.d_lambda_raw);
        adam_step(params, g, state, train_cfg);
        std::copy(params.begin(), params.end() - 2, fb.coeffs.begin());
        fb.alpha_raw = params[params.size() - 2];
        fb.lambda_raw = params[params.size() - 1];
      }
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = loss_sum / static_cast<double>(train_set.size());
    stats.val_loss = validation_loss(fb);
    stats.alpha = fb.alpha();
    stats.lambda = fb.lambda();
    result.history.push_back(stats);

    if (!std::isfinite(stats.val_loss)) {
      result.diverged = true;
      return result;
    }
    if (stats.val_loss < best_val || (val_set.empty() && epoch == train_cfg.epochs)) {
      best_val = stats.val_loss;
      result.filters = fb;
      result.best_epoch = epoch;
    }
  }
  return result;
}

}  // namespace spr
