#include "ambient/sampler.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ambient {

Eigen::VectorXd reverse_step_stochastic(const DenoiserFn& h, const Eigen::VectorXd& x, double t,
                                        double t_next, const NoiseSchedule& sched, SplitRng& rng) {
  if (t_next > t) throw std::domain_error("reverse_step: t_next > t");
  if (t_next == t) return x;
  const double s = sched.sigma(t), s2 = sched.sigma(t_next);
  const double dvar = s * s - s2 * s2;
  const Eigen::VectorXd hx = h(x, t);
  const Eigen::VectorXd z = rng.normal_vec(x.size());
  if (sched.kind() == ScheduleKind::VE) {
    return x + (2.0 * (s - s2) / s) * (hx - x) + std::sqrt(dvar) * z;
  }
  // VP: drift (alpha'/alpha) x - g^2 score with g^2 dt = d sigma^2 / (1 - sigma^2),
  // coefficients frozen at t; score from the generalized Tweedie identity.
  const double a = sched.alpha(t);
  const double c = dvar / (1.0 - s * s);
  const Eigen::VectorXd sc = (a * hx - x) / (s * s);
  return x + c * (0.5 * x + sc) + std::sqrt(c) * z;
}

Eigen::VectorXd reverse_step_deterministic(const DenoiserFn& h, const Eigen::VectorXd& x, double t,
                                           double t_next, const NoiseSchedule& sched) {
  if (t_next > t) throw std::domain_error("reverse_step: t_next > t");
  if (t_next == t) return x;
  const double s = sched.sigma(t), s2 = sched.sigma(t_next);
  const Eigen::VectorXd hx = h(x, t);
  if (sched.kind() == ScheduleKind::VE) return hx + (s2 / s) * (x - hx);
  const double a = sched.alpha(t), a2 = sched.alpha(t_next);
  return a2 * hx + (s2 / s) * (x - a * hx);
}

Eigen::VectorXd bridge_step(const DenoiserFn& h, const Eigen::VectorXd& x, double t, double t_next,
                            const NoiseSchedule& sched, SplitRng& rng) {
  if (t_next > t) throw std::domain_error("bridge_step: t_next > t");
  if (t_next == t) return x;
  const Eigen::VectorXd hx = h(x, t);
  const Eigen::VectorXd z = rng.normal_vec(x.size());
  // Work in the VE-rescaled coordinate y = x / alpha, rho = sigma / alpha,
  // where the forward process is a Brownian bridge in rho^2.
  const double a = sched.alpha(t), a2 = sched.alpha(t_next);
  const double rho = sched.sigma(t) / a, rho2 = sched.sigma(t_next) / a2;
  const double r = rho > 0.0 ? (rho2 * rho2) / (rho * rho) : 0.0;
  const Eigen::VectorXd y = x / a;
  const Eigen::VectorXd y2 =
      hx + r * (y - hx) + (rho2 * std::sqrt(std::max(1.0 - r, 0.0))) * z;
  return a2 * y2;
}

std::vector<double> time_grid(const NoiseSchedule& sched, double t_start, double t_stop,
                              int n_steps, SamplerKind kind) {
  if (n_steps < 1) throw std::invalid_argument("time_grid: n_steps must be >= 1");
  if (!(t_start > t_stop)) throw std::invalid_argument("time_grid: t_start must exceed t_stop");
  const double sa = sched.sigma(t_start), sb = sched.sigma(t_stop);
  std::vector<double> ts(n_steps + 1);
  ts.front() = t_start;
  ts.back() = t_stop;
  for (int k = 1; k < n_steps; ++k) {
    const double f = static_cast<double>(k) / n_steps;
    double s;
    if (sched.kind() == ScheduleKind::VE) {
      const double ca = std::cbrt(sa), cb = std::cbrt(sb);
      const double c = ca + f * (cb - ca);
      s = c * c * c;
    } else if (kind == SamplerKind::Stochastic) {
      const double la = -std::log1p(-sa * sa), lb = -std::log1p(-sb * sb);
      s = std::sqrt(-std::expm1(-(la + f * (lb - la))));
    } else {
      s = sa + f * (sb - sa);
    }
    ts[k] = sched.time_of_sigma(s);
  }
  return ts;
}

namespace {

Eigen::VectorXd run_chain(const DenoiserFn& h, Eigen::VectorXd x, const std::vector<double>& grid,
                          const NoiseSchedule& sched, const SamplerConfig& cfg, SplitRng& rng,
                          int traj_index) {
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    if (cfg.kind == SamplerKind::Stochastic)
      x = reverse_step_stochastic(h, x, grid[k], grid[k + 1], sched, rng);
    else
      x = reverse_step_deterministic(h, x, grid[k], grid[k + 1], sched);
    if (!x.allFinite())
      throw std::runtime_error("sampler: non-finite state in trajectory " +
                               std::to_string(traj_index) + " at step " + std::to_string(k));
  }
  if (cfg.final_denoise) x = h(x, grid.back());
  return x;
}

}  // namespace

Eigen::MatrixXd generate(const DenoiserFn& h, int dim, const NoiseSchedule& sched,
                         const SamplerConfig& cfg, int n, SplitRng rng) {
  if (n < 0) throw std::invalid_argument("generate: n must be >= 0");
  const double t_start = cfg.t_start < 0.0 ? sched.T() : cfg.t_start;
  if (!(t_start > cfg.t_stop && cfg.t_stop >= 0.0))
    throw std::invalid_argument("generate: need t_start > t_stop >= 0");
  Eigen::MatrixXd out(n, dim);
  if (n == 0) return out;
  const auto grid = time_grid(sched, t_start, cfg.t_stop, cfg.n_steps, cfg.kind);
  const double init_scale = sched.kind() == ScheduleKind::VE ? sched.sigma(t_start) : 1.0;
  for (int i = 0; i < n; ++i) {
    SplitRng traj = rng.split(static_cast<std::uint64_t>(i));
    Eigen::VectorXd x = init_scale * traj.normal_vec(dim);
    out.row(i) = run_chain(h, std::move(x), grid, sched, cfg, traj, i).transpose();
  }
  return out;
}

Eigen::VectorXd posterior_sample(const DenoiserFn& h, const Eigen::VectorXd& x_t, double t,
                                 const NoiseSchedule& sched, const SamplerConfig& cfg,
                                 SplitRng rng) {
  if (!(t > 0.0 && t <= sched.T())) throw std::domain_error("posterior_sample: t outside (0, T]");
  const auto grid = time_grid(sched, t, 0.0, cfg.n_steps, cfg.kind);
  SamplerConfig chain_cfg = cfg;
  chain_cfg.final_denoise = false;
  return run_chain(h, x_t, grid, sched, chain_cfg, rng, 0);
}

}  // namespace ambient
