#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <vector>

#include "ambient/rng.hpp"
#include "ambient/schedule.hpp"

namespace ambient {

/// Denoiser handle: a trained net or the oracle posterior mean.
using DenoiserFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&, double)>;

enum class SamplerKind { Stochastic, Deterministic };

struct SamplerConfig {
  int n_steps = 25;
  SamplerKind kind = SamplerKind::Stochastic;
  double t_start = -1.0;  // < 0 means schedule T
  double t_stop = 0.0;
  bool final_denoise = false;  // posterior-mean jump at t_stop (early-stop baseline)
  std::uint64_t seed = 0;
};

/// One Euler-Maruyama step of the reverse SDE from t down to t_next.
/// VE: x + 2 (s - s') (h - x) / s + sqrt(s^2 - s'^2) z.
/// VP uses the generalized-Tweedie score in the VP reverse drift, integrated
/// in sigma^2 increments. t_next == t is a no-op.
Eigen::VectorXd reverse_step_stochastic(const DenoiserFn& h, const Eigen::VectorXd& x, double t,
                                        double t_next, const NoiseSchedule& sched, SplitRng& rng);

/// DDIM step. VE: h + (s'/s)(x - h). VP: a' h + s' (x - a h) / s.
Eigen::VectorXd reverse_step_deterministic(const DenoiserFn& h, const Eigen::VectorXd& x, double t,
                                           double t_next, const NoiseSchedule& sched);

/// One stochastic transition t -> t_next of the model chain through the exact
/// forward bridge given the denoiser estimate (stable at any gap; used inside
/// the consistency loss).
Eigen::VectorXd bridge_step(const DenoiserFn& h, const Eigen::VectorXd& x, double t, double t_next,
                            const NoiseSchedule& sched, SplitRng& rng);

/// Integration grid in time between t_start and t_stop (n_steps + 1 points).
/// VE warps sigma by a cube law toward sigma = 0. VP spacing depends on the
/// integrator: uniform in -log(1 - sigma^2) for the stochastic step (keeps
/// the per-step noise factor bounded near sigma = 1) and uniform in sigma
/// for the deterministic one.
std::vector<double> time_grid(const NoiseSchedule& sched, double t_start, double t_stop,
                              int n_steps, SamplerKind kind = SamplerKind::Stochastic);

/// n reverse trajectories from x_T ~ N(0, sigma_T^2 I) (VE) or N(0, I) (VP);
/// rows of the result are terminal states.
Eigen::MatrixXd generate(const DenoiserFn& h, int dim, const NoiseSchedule& sched,
                         const SamplerConfig& cfg, int n, SplitRng rng);

/// One posterior draw of X_0 given X_t = x_t under the model chain.
Eigen::VectorXd posterior_sample(const DenoiserFn& h, const Eigen::VectorXd& x_t, double t,
                                 const NoiseSchedule& sched, const SamplerConfig& cfg,
                                 SplitRng rng);

}  // namespace ambient
