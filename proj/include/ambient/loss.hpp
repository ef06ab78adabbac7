#pragma once

#include <Eigen/Dense>

#include <functional>
#include <vector>

#include "ambient/net.hpp"
#include "ambient/rng.hpp"
#include "ambient/sampler.hpp"
#include "ambient/schedule.hpp"

namespace ambient {

enum class LossKind { Dsm, Ambient, AmbientConsistency };

struct LossOptions {
  double lambda = 0.0;
  double eps = -1.0;  // < 0 means T / 100
  int chain_steps = 8;
  bool forward_noise_above_tn = false;
};

struct LossBatchReport {
  double loss = 0.0;
  Eigen::VectorXd grad;
  double ambient_term = 0.0;
  double consistency_term = 0.0;
  int count = 0;
  std::vector<double> times;  // primary t draws, for reproducibility
};

/// Clean-data DSM baseline: t ~ U[0, T] stratified across the batch,
/// x_t by forward noising from t = 0, mean ||h(x_t, t) - x_0||^2.
LossBatchReport dsm_loss(DenoiserNet& net, const Eigen::MatrixXd& batch_x0,
                         const NoiseSchedule& sched, SplitRng rng);
double dsm_loss_value(const DenoiserFn& h, const Eigen::MatrixXd& batch_x0,
                      const NoiseSchedule& sched, SplitRng rng);

/// Ambient DSM: t uniform over the guard-admissible part of (t_n, T],
/// x_t by forward noising from t_n, weighted residual
/// c_h h(x_t, t) + c_x x_t - x_tn.
LossBatchReport ambient_dsm_loss(DenoiserNet& net, const Eigen::MatrixXd& batch_xtn,
                                 const NoiseSchedule& sched, SplitRng rng);
double ambient_dsm_loss_value(const DenoiserFn& h, const Eigen::MatrixXd& batch_xtn,
                              const NoiseSchedule& sched, SplitRng rng);

/// Two-sample consistency estimator of
/// ||h(x_t', t') - E h(X_t'', t'')||^2 along the model chain, with gradients
/// through the three h evaluations of the estimator only.
LossBatchReport consistency_loss(DenoiserNet& net, const Eigen::MatrixXd& batch_xtn,
                                 const NoiseSchedule& sched, const LossOptions& opts,
                                 SplitRng rng);
double consistency_loss_value(const DenoiserFn& h, const Eigen::MatrixXd& batch_xtn,
                              const NoiseSchedule& sched, const LossOptions& opts, SplitRng rng);

/// ambient_dsm_loss + lambda * consistency_loss with the per-term breakdown.
LossBatchReport combined_loss(DenoiserNet& net, const Eigen::MatrixXd& batch_xtn,
                              const NoiseSchedule& sched, const LossOptions& opts, SplitRng rng);

}  // namespace ambient
