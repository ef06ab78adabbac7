#pragma once

#include <Eigen/Dense>

#include "ambient/rng.hpp"
#include "ambient/schedule.hpp"

namespace ambient {

/// Diagonal-covariance Gaussian mixture: the analytically tractable prior p0.
/// Rows of means/variances are components.
struct GaussianMixture {
  int dim = 1;
  Eigen::VectorXd weights;   // k, positive, sums to 1
  Eigen::MatrixXd means;     // k x dim
  Eigen::MatrixXd variances; // k x dim, entries > 0

  void validate() const;

  static GaussianMixture m1();     // 1-D standard Gaussian
  static GaussianMixture m2();     // 1-D two points at +-2, variance 1e-12
  static GaussianMixture ring8();  // 2-D 8-component ring, radius 4, variance 0.09
  static GaussianMixture preset(const std::string& name);
};

/// n independent draws from p0; rows are samples.
Eigen::MatrixXd sample_prior(const GaussianMixture& gm, int n, SplitRng rng);

/// Exact E[X0 | alpha X0 + sigma Z = x] for the scaled-noising pair (alpha, sigma).
Eigen::VectorXd posterior_mean_scaled(const GaussianMixture& gm, const Eigen::VectorXd& x,
                                      double alpha, double sigma);

/// Exact E[X0 | X_t = x_t] under the schedule's forward process. At t = 0
/// returns x_t.
Eigen::VectorXd posterior_mean(const GaussianMixture& gm, const Eigen::VectorXd& x_t, double t,
                               const NoiseSchedule& sched);

/// Score of p_t via the generalized Tweedie identity
/// (alpha_t E[X0|x_t] - x_t) / sigma_t^2. Errors at t = 0.
Eigen::VectorXd score(const GaussianMixture& gm, const Eigen::VectorXd& x_t, double t,
                      const NoiseSchedule& sched);

/// log p_t(x_t), log-sum-exp stabilized.
double log_density_t(const GaussianMixture& gm, const Eigen::VectorXd& x_t, double t,
                     const NoiseSchedule& sched);

/// Self-normalized importance estimate of posterior_mean with n prior draws.
Eigen::VectorXd mc_posterior_mean(const GaussianMixture& gm, const Eigen::VectorXd& x_t, double t,
                                  const NoiseSchedule& sched, int n, SplitRng rng);

/// Exact E[X_tn | X_t = x_t] for t >= t_n: posterior mean of the auxiliary
/// mixture whose clean variable is X_tn. Ground-truth side of the bridge.
Eigen::VectorXd posterior_mean_of_nature(const GaussianMixture& gm, const Eigen::VectorXd& x_t,
                                         double t, const NoiseSchedule& sched);

}  // namespace ambient
