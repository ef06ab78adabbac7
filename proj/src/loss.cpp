#include "ambient/loss.hpp"

#include <cmath>
#include <stdexcept>

namespace ambient {

namespace {

using EvalFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&, double)>;
using AccumFn = std::function<void(const Eigen::VectorXd&, double, const Eigen::VectorXd&)>;

void check_batch(const Eigen::MatrixXd& batch) {
  if (batch.rows() == 0 || batch.cols() == 0)
    throw std::invalid_argument("loss: empty batch");
}

// Stratified time draw for element i of B: low-discrepancy grid + jitter.
double stratified(double lo, double hi, int i, int B, double u) {
  return lo + (hi - lo) * ((static_cast<double>(i) + u) / B);
}

double dsm_core(const EvalFn& h, const AccumFn& accum, const Eigen::MatrixXd& batch,
                const NoiseSchedule& sched, SplitRng& rng, std::vector<double>* times) {
  check_batch(batch);
  const int B = static_cast<int>(batch.rows());
  const Eigen::Index dim = batch.cols();
  double total = 0.0;
  for (int i = 0; i < B; ++i) {
    SplitRng s = rng.split(static_cast<std::uint64_t>(i));
    const Eigen::VectorXd z = s.normal_vec(dim);
    const double t = stratified(0.0, sched.T(), i, B, s.uniform());
    if (times) times->push_back(t);
    const Eigen::VectorXd x0 = batch.row(i).transpose();
    const Eigen::VectorXd xt = sched.forward_noise(x0, 0.0, t, z);
    const Eigen::VectorXd r = h(xt, t) - x0;
    total += r.squaredNorm();
    if (accum) accum(xt, t, (2.0 / B) * r);
  }
  return total / B;
}

double ambient_core(const EvalFn& h, const AccumFn& accum, const Eigen::MatrixXd& batch,
                    const NoiseSchedule& sched, SplitRng& rng, std::vector<double>* times) {
  check_batch(batch);
  const int B = static_cast<int>(batch.rows());
  const Eigen::Index dim = batch.cols();
  // Guard-violating t would be resampled; mapping the uniform draw onto the
  // admissible interval (t_lo, T] realizes the same conditional distribution.
  const double t_lo = sched.min_ambient_time();
  double total = 0.0;
  for (int i = 0; i < B; ++i) {
    SplitRng s = rng.split(static_cast<std::uint64_t>(i));
    const Eigen::VectorXd z = s.normal_vec(dim);
    const double t = stratified(t_lo, sched.T(), i, B, s.uniform());
    if (times) times->push_back(t);
    const Eigen::VectorXd xtn = batch.row(i).transpose();
    const Eigen::VectorXd xt = sched.forward_noise(xtn, sched.t_n(), t, z);
    const auto [c_h, c_x] = sched.denoiser_target_coeffs(t);
    const Eigen::VectorXd g = c_h * h(xt, t) + c_x * xt - xtn;
    total += g.squaredNorm();
    if (accum) accum(xt, t, (2.0 * c_h / B) * g);
  }
  return total / B;
}

double consistency_core(const EvalFn& h, const AccumFn& accum, const Eigen::MatrixXd& batch,
                        const NoiseSchedule& sched, const LossOptions& opts, SplitRng& rng,
                        std::vector<double>* times) {
  check_batch(batch);
  const int B = static_cast<int>(batch.rows());
  const Eigen::Index dim = batch.cols();
  const double T = sched.T(), tn = sched.t_n();
  const double eps = opts.eps < 0.0 ? T / 100.0 : opts.eps;
  if (!(eps > 0.0 && eps < T)) throw std::invalid_argument("consistency: eps outside (0, T)");
  if (opts.chain_steps < 1) throw std::invalid_argument("consistency: chain_steps must be >= 1");

  double total = 0.0;
  for (int i = 0; i < B; ++i) {
    SplitRng s = rng.split(static_cast<std::uint64_t>(i));
    const Eigen::VectorXd xtn = batch.row(i).transpose();
    const Eigen::VectorXd z0 = s.normal_vec(dim);

    // t ~ U(t_n, T], t' ~ U(eps, t); resample the pair when t <= eps.
    double t = 0.0, tp = 0.0;
    bool ok = false;
    for (int attempt = 0; attempt < 100; ++attempt) {
      t = attempt == 0 ? stratified(tn, T, i, B, s.uniform()) : tn + (T - tn) * s.uniform();
      if (t <= eps) continue;
      tp = eps + (t - eps) * s.uniform();
      ok = true;
      break;
    }
    if (!ok) throw std::runtime_error("consistency: no admissible t' above eps");
    if (times) times->push_back(t);

    // x_t' from the model chain started at x_t ~ p_t (forward-noised data),
    // or directly forward-noised when t' >= t_n and the switch is on.
    Eigen::VectorXd xtp;
    if (opts.forward_noise_above_tn && tp >= tn) {
      xtp = sched.forward_noise(xtn, tn, tp, z0);
    } else {
      Eigen::VectorXd x = sched.forward_noise(xtn, tn, t, z0);
      const auto grid = time_grid(sched, t, tp, opts.chain_steps);
      for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
        x = bridge_step(h, x, grid[k], grid[k + 1], sched, s);
        if (!x.allFinite())
          throw std::runtime_error("consistency: non-finite chain state at step " +
                                   std::to_string(k));
      }
      xtp = std::move(x);
    }

    const double lo = std::max(tp - eps, 0.0);
    const double tpp = lo + (tp - lo) * s.uniform();

    const Eigen::VectorXd x1 = bridge_step(h, xtp, tp, tpp, sched, s);
    const Eigen::VectorXd x2 = bridge_step(h, xtp, tp, tpp, sched, s);

    const Eigen::VectorXd hc = h(xtp, tp);
    const Eigen::VectorXd h1 = h(x1, tpp);
    const Eigen::VectorXd h2 = h(x2, tpp);
    total += (h1 - hc).dot(h2 - hc);
    if (accum) {
      accum(x1, tpp, (h2 - hc) / B);
      accum(x2, tpp, (h1 - hc) / B);
      accum(xtp, tp, (2.0 * hc - h1 - h2) / B);
    }
  }
  return total / B;
}

EvalFn net_eval(const DenoiserNet& net, const NoiseSchedule& sched) {
  return [&](const Eigen::VectorXd& x, double t) { return net.forward(x, t, sched); };
}

AccumFn net_accum(const DenoiserNet& net, const NoiseSchedule& sched, Eigen::VectorXd& grad) {
  return [&](const Eigen::VectorXd& x, double t, const Eigen::VectorXd& up) {
    net.backward(x, t, sched, up, grad);
  };
}

void check_report(const LossBatchReport& r) {
  if (!std::isfinite(r.loss) || !r.grad.allFinite())
    throw std::runtime_error("loss: non-finite loss or gradient");
}

}  // namespace

LossBatchReport dsm_loss(DenoiserNet& net, const Eigen::MatrixXd& batch_x0,
                         const NoiseSchedule& sched, SplitRng rng) {
  LossBatchReport r;
  r.grad.setZero(net.param_count());
  r.count = static_cast<int>(batch_x0.rows());
  r.loss = dsm_core(net_eval(net, sched), net_accum(net, sched, r.grad), batch_x0, sched, rng,
                    &r.times);
  r.ambient_term = r.loss;
  check_report(r);
  return r;
}

double dsm_loss_value(const DenoiserFn& h, const Eigen::MatrixXd& batch_x0,
                      const NoiseSchedule& sched, SplitRng rng) {
  return dsm_core(h, nullptr, batch_x0, sched, rng, nullptr);
}

LossBatchReport ambient_dsm_loss(DenoiserNet& net, const Eigen::MatrixXd& batch_xtn,
                                 const NoiseSchedule& sched, SplitRng rng) {
  LossBatchReport r;
  r.grad.setZero(net.param_count());
  r.count = static_cast<int>(batch_xtn.rows());
  r.loss = ambient_core(net_eval(net, sched), net_accum(net, sched, r.grad), batch_xtn, sched,
                        rng, &r.times);
  r.ambient_term = r.loss;
  check_report(r);
  return r;
}

double ambient_dsm_loss_value(const DenoiserFn& h, const Eigen::MatrixXd& batch_xtn,
                              const NoiseSchedule& sched, SplitRng rng) {
  return ambient_core(h, nullptr, batch_xtn, sched, rng, nullptr);
}

LossBatchReport consistency_loss(DenoiserNet& net, const Eigen::MatrixXd& batch_xtn,
                                 const NoiseSchedule& sched, const LossOptions& opts,
                                 SplitRng rng) {
  LossBatchReport r;
  r.grad.setZero(net.param_count());
  r.count = static_cast<int>(batch_xtn.rows());
  r.loss = consistency_core(net_eval(net, sched), net_accum(net, sched, r.grad), batch_xtn,
                            sched, opts, rng, &r.times);
  r.consistency_term = r.loss;
  check_report(r);
  return r;
}

double consistency_loss_value(const DenoiserFn& h, const Eigen::MatrixXd& batch_xtn,
                              const NoiseSchedule& sched, const LossOptions& opts, SplitRng rng) {
  return consistency_core(h, nullptr, batch_xtn, sched, opts, rng, nullptr);
}

LossBatchReport combined_loss(DenoiserNet& net, const Eigen::MatrixXd& batch_xtn,
                              const NoiseSchedule& sched, const LossOptions& opts, SplitRng rng) {
  if (opts.lambda < 0.0) throw std::invalid_argument("combined_loss: lambda must be >= 0");
  LossBatchReport amb = ambient_dsm_loss(net, batch_xtn, sched, rng.split(stream::kAmbient));
  if (opts.lambda == 0.0) return amb;
  LossBatchReport cons =
      consistency_loss(net, batch_xtn, sched, opts, rng.split(stream::kConsistency));
  LossBatchReport r;
  r.count = amb.count;
  r.ambient_term = amb.loss;
  r.consistency_term = cons.loss;
  r.loss = amb.loss + opts.lambda * cons.loss;
  r.grad = amb.grad + opts.lambda * cons.grad;
  r.times = std::move(amb.times);
  check_report(r);
  return r;
}

}  // namespace ambient
