#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ambient/io.hpp"
#include "ambient/loss.hpp"
#include "ambient/mixture.hpp"
#include "ambient/net.hpp"
#include "ambient/schedule.hpp"

namespace ambient {

struct AdamParams {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;
};

/// Bias-corrected Adam with decoupled weight decay.
void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, OptimizerState& state,
               const AdamParams& hp);

struct TrainConfig {
  ScheduleSpec schedule;

  std::string dataset_path;  // when set, the dataset is loaded from disk
  int dataset_count = 50000;
  std::uint64_t dataset_seed = 1;

  std::vector<int> hidden = {64, 64};
  int embed_dim = 16;
  Activation activation = Activation::Silu;
  double sigma_data = 1.0;

  int batch_size = 256;
  int phase2_batch_size = 0;  // 0 means batch_size
  std::int64_t phase1_steps = 2000;
  std::int64_t phase2_steps = 0;
  AdamParams adam;
  std::uint64_t seed = 1;
  std::int64_t eval_every = 500;
  std::int64_t checkpoint_every = 0;
  LossKind loss_kind = LossKind::Ambient;
  LossOptions loss;  // lambda, eps, chain_steps, forward_noise_above_tn
  std::vector<double> eval_sigmas = {0.6, 1.0, 2.0, 3.0};
  int eval_points = 512;
  std::string out_dir;       // metrics + checkpoints land here when set
  std::string config_echo;   // provenance, stored in checkpoints
};

struct MetricsRow {
  std::int64_t step = 0;
  double loss = 0.0, ambient_term = 0.0, consistency_term = 0.0;
  std::vector<double> oracle_mse_by_sigma;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<MetricsRow> metrics;
};

struct TrainingDiverged : std::runtime_error {
  explicit TrainingDiverged(const std::string& what, Checkpoint last_good)
      : std::runtime_error(what), last_good(std::move(last_good)) {}
  Checkpoint last_good;
};

/// Draws X0 ~ p0, noises it to t_n and discards the clean draws; only the
/// noisy realizations are kept.
NoisyDataset make_dataset(const GaussianMixture& gm, const NoiseSchedule& sched, int n,
                          std::uint64_t seed);

/// Two-phase regimen: phase 1 minimizes the configured base loss, phase 2
/// continues from the phase-1 parameters with the consistency term added at
/// weight lambda. Fully deterministic given cfg.seed: every step derives its
/// streams from (seed, step), so resuming from a checkpoint reproduces the
/// uninterrupted run bitwise.
TrainResult train(const TrainConfig& cfg, const GaussianMixture* oracle_gm = nullptr,
                  const NoisyDataset* dataset = nullptr, const Checkpoint* resume_from = nullptr);

}  // namespace ambient
