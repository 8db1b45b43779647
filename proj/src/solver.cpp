#include "spr/solver.hpp"

#include <cmath>

#include "spr/errors.hpp"
#include "spr/threading.hpp"

namespace spr {

CgResult cg_solve(const LinearOp& apply_h, const ComplexVolume& b, int n_iter, double tol,
                  CgTape* tape) {
  if (n_iter < 1) throw std::invalid_argument("cg_solve: need at least one iteration");
  if (tol < 0.0) throw std::invalid_argument("cg_solve: tol must be >= 0");

  ComplexVolume x = ComplexVolume::zeros(b.shape());
  ComplexVolume r = b;
  ComplexVolume p = b;
  double rho = norm2(r);
  const double stop2 = tol * tol * rho;  // |r| <= tol*|b| with x0 = 0

  if (tape) {
    *tape = CgTape{};
    tape->b = b;
    tape->rho.push_back(rho);
    tape->r.push_back(r);
  }

  int done = 0;
  for (int i = 0; i < n_iter; ++i) {
    if (rho == 0.0) break;  // exact solution reached, nothing left to do
    ComplexVolume q = apply_h(p);
    const double pq = real_inner(p, q);
    if (!(pq > 0.0))
      throw CgBreakdown("cg_solve: non-positive curvature, operator is not positive definite");
    const double step = rho / pq;
    x.add_scaled(p, step);
    r.add_scaled(q, -step);
    const double rho_next = norm2(r);

    if (tape) {
      tape->p.push_back(p);
      tape->q.push_back(std::move(q));
      tape->pq.push_back(pq);
      tape->step.push_back(step);
      tape->r.push_back(r);
      tape->rho.push_back(rho_next);
    }
    ++done;

    const bool last = (i + 1 == n_iter) || (tol > 0.0 && rho_next <= stop2);
    if (last) {
      rho = rho_next;
      break;
    }
    const double beta = rho_next / rho;
    if (tape) tape->beta.push_back(beta);
    p.scale(beta);
    p.add(r);
    rho = rho_next;
  }

  CgResult res;
  res.x = std::move(x);
  res.final_residual = std::sqrt(rho);
  res.iters = done;
  if (tape) {
    tape->x_out = res.x;
    tape->iters = done;
  }
  return res;
}

ComplexVolume data_consistency_step(const ComplexVolume& z, const MeasuredData& y,
                                    const AcquisitionModel& m, double lambda,
                                    const NetworkConfig& cfg, CgTape* tape) {
  if (!(lambda > 0.0))
    throw std::invalid_argument("data_consistency_step: lambda must be > 0");
  ComplexVolume b = m.pseudo_inverse(y);
  b.add_scaled(z, lambda);
  const LinearOp h = [&](const ComplexVolume& v) { return m.normal(v, lambda); };
  return cg_solve(h, b, cfg.n_cg, cfg.cg_tol, tape).x;
}

namespace {

// Same update with the constant pseudo-inverse image precomputed, so the
// unrolled forward pass does not redo an adjoint per step.
ComplexVolume data_consistency_cached(const ComplexVolume& z, const ComplexVolume& a_sharp_y,
                                      const AcquisitionModel& m, double lambda,
                                      const NetworkConfig& cfg, CgTape* tape,
                                      double* residual) {
  ComplexVolume b = a_sharp_y;
  b.add_scaled(z, lambda);
  const LinearOp h = [&](const ComplexVolume& v) { return m.normal(v, lambda); };
  CgResult res = cg_solve(h, b, cfg.n_cg, cfg.cg_tol, tape);
  if (residual) *residual = res.final_residual;
  return std::move(res.x);
}

}  // namespace

NetworkResult network_forward(const ComplexVolume& x0, const MeasuredData& y,
                              const AcquisitionModel& m, const FilterBank& fb,
                              const NetworkConfig& cfg, bool record_tape,
                              bool log_objectives) {
  if (x0.shape() != m.image_shape())
    throw std::invalid_argument("network_forward: x0 shape mismatch");
  if (cfg.unroll_steps < 0)
    throw std::invalid_argument("network_forward: unroll depth must be >= 0");
  const double lambda = fb.lambda();

  NetworkResult result;
  if (record_tape) {
    result.tape = std::make_unique<ForwardTape>();
    result.tape->x0 = x0;
  }

  const ComplexVolume a_sharp_y =
      cfg.unroll_steps > 0 ? m.pseudo_inverse(y) : ComplexVolume();

  ComplexVolume x = x0;
  for (int j = 0; j < cfg.unroll_steps; ++j) {
    StepTape step;
    if (record_tape) step.x_in = x;
    ComplexVolume z = denoise_step(x, fb, cfg.exact_threshold,
                                   record_tape ? &step.coeff : nullptr);
    if (record_tape) step.z = z;
    double residual = 0.0;
    x = data_consistency_cached(z, a_sharp_y, m, lambda, cfg,
                                record_tape ? &step.cg : nullptr, &residual);
    if (record_tape) result.tape->steps.push_back(std::move(step));
    if (log_objectives) {
      StepObjective obj;
      obj.step = j + 1;
      obj.analysis_objective = analysis_l1_objective(x, y, m, fb);
      obj.relaxed_objective = relaxed_objective(x, y, m, fb);
      obj.cg_residual = residual;
      result.objectives.push_back(obj);
    }
  }
  if (record_tape) result.tape->x_out = x;
  result.x = std::move(x);
  return result;
}

double weighted_data_term(const ComplexVolume& x, const MeasuredData& y,
                          const AcquisitionModel& m) {
  MeasuredData r = m.forward(x);
  r.add_scaled(y, -1.0);
  return 0.5 * m.weighted_norm2(r);
}

namespace {

// Accumulates the L1 and penalty terms over filters and channels.
void sparsity_terms(const ComplexVolume& x, const FilterBank& fb, double* l1_of_responses,
                    double* penalty_at_prox, double* l1_of_codes) {
  const RealVolume channels = as_two_channel(x);
  const double t = fb.threshold();
  const int n_tasks = fb.n_filters * 2;
  std::vector<double> l1r(n_tasks, 0.0), pen(n_tasks, 0.0), l1c(n_tasks, 0.0);
  parallel_for(n_tasks, [&](int task) {
    const int k = task / 2;
    const int ch = task % 2;
    const std::vector<double> w =
        conv3_circular(channels.channel(ch), x.shape(), fb.kernel(k), fb.side);
    double a = 0.0, b = 0.0, c = 0.0;
    for (double v : w) {
      a += std::abs(v);
      const double s = soft_threshold(v, t);
      const double d = v - s;
      b += d * d;
      c += std::abs(s);
    }
    l1r[task] = a;
    pen[task] = b;
    l1c[task] = c;
  });
  *l1_of_responses = 0.0;
  *penalty_at_prox = 0.0;
  *l1_of_codes = 0.0;
  for (int i = 0; i < n_tasks; ++i) {
    *l1_of_responses += l1r[i];
    *penalty_at_prox += pen[i];
    *l1_of_codes += l1c[i];
  }
}

}  // namespace

double analysis_l1_objective(const ComplexVolume& x, const MeasuredData& y,
                             const AcquisitionModel& m, const FilterBank& fb) {
  double l1r, pen, l1c;
  sparsity_terms(x, fb, &l1r, &pen, &l1c);
  return weighted_data_term(x, y, m) + fb.alpha() * l1r;
}

double relaxed_objective(const ComplexVolume& x, const MeasuredData& y,
                         const AcquisitionModel& m, const FilterBank& fb) {
  double l1r, pen, l1c;
  sparsity_terms(x, fb, &l1r, &pen, &l1c);
  return weighted_data_term(x, y, m) + 0.5 * fb.lambda() * pen + fb.alpha() * l1c;
}

}  // namespace spr
