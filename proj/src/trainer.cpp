#include "ambient/trainer.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "ambient/eval.hpp"

namespace ambient {

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, OptimizerState& state,
               const AdamParams& hp) {
  if (grads.size() != params.size() || state.m.size() != params.size() ||
      state.v.size() != params.size())
    throw std::invalid_argument("adam_step: buffer size mismatch");
  if (!grads.allFinite()) throw std::runtime_error("adam_step: non-finite gradients");
  if (!(hp.beta1 > 0.0 && hp.beta1 < 1.0 && hp.beta2 > 0.0 && hp.beta2 < 1.0))
    throw std::invalid_argument("adam_step: betas must lie in (0, 1)");
  ++state.step;
  const double bc1 = 1.0 - std::pow(hp.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(hp.beta2, static_cast<double>(state.step));
  state.m = hp.beta1 * state.m + (1.0 - hp.beta1) * grads;
  state.v = hp.beta2 * state.v.array().matrix() + (1.0 - hp.beta2) * grads.cwiseProduct(grads);
  params.array() -= hp.lr * ((state.m.array() / bc1) / ((state.v.array() / bc2).sqrt() + hp.epsilon) +
                             hp.weight_decay * params.array());
}

NoisyDataset make_dataset(const GaussianMixture& gm, const NoiseSchedule& sched, int n,
                          std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("make_dataset: n must be >= 1");
  SplitRng root(seed);
  Eigen::MatrixXd x0 = sample_prior(gm, n, root.split(stream::kData));
  SplitRng noise = root.split(stream::kData + 1);
  NoisyDataset ds;
  ds.schedule = sched.spec();
  ds.seed = seed;
  ds.samples.resize(n, gm.dim);
  for (int i = 0; i < n; ++i) {
    ds.samples.row(i) = sched
                            .forward_noise(x0.row(i).transpose(), 0.0, sched.t_n(),
                                           noise.split(i).normal_vec(gm.dim))
                            .transpose();
  }
  // x0 goes out of scope here; clean draws are never persisted.
  return ds;
}

namespace {

Eigen::MatrixXd draw_batch(const Eigen::MatrixXd& data, int batch, SplitRng rng) {
  Eigen::MatrixXd out(batch, data.cols());
  for (int i = 0; i < batch; ++i)
    out.row(i) = data.row(static_cast<Eigen::Index>(rng.below(data.rows())));
  return out;
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const GaussianMixture* oracle_gm,
                  const NoisyDataset* dataset, const Checkpoint* resume_from) {
  if (cfg.phase1_steps < 0 || cfg.phase2_steps < 0 ||
      (cfg.phase1_steps == 0 && cfg.phase2_steps == 0))
    throw std::invalid_argument("train: phase lengths must be >= 0 and not both 0");
  if (cfg.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  if (cfg.loss_kind == LossKind::Dsm && cfg.phase2_steps > 0 && cfg.loss.lambda > 0.0)
    throw std::invalid_argument("train: consistency fine-tuning needs the ambient objective");

  const NoiseSchedule sched(cfg.schedule);

  NoisyDataset local;
  const NoisyDataset* ds = dataset;
  if (!ds) {
    if (!cfg.dataset_path.empty()) {
      local = load_dataset(cfg.dataset_path);
    } else {
      if (!oracle_gm)
        throw std::invalid_argument("train: need a dataset path or a mixture to synthesize from");
      local = make_dataset(*oracle_gm, sched, cfg.dataset_count, cfg.dataset_seed);
    }
    ds = &local;
  }
  const int dim = ds->dim();

  DenoiserNet net(dim, cfg.hidden, cfg.embed_dim, cfg.seed, cfg.activation, cfg.sigma_data);
  OptimizerState opt;
  opt.m.setZero(net.param_count());
  opt.v.setZero(net.param_count());
  std::int64_t start_step = 0;
  if (resume_from) {
    if (resume_from->params.size() != net.param_count())
      throw std::invalid_argument("train: checkpoint architecture mismatch");
    net.params() = resume_from->params;
    opt = resume_from->opt;
    start_step = resume_from->step;
  }

  const std::int64_t total = cfg.phase1_steps + cfg.phase2_steps;
  const int phase2_batch = cfg.phase2_batch_size > 0 ? cfg.phase2_batch_size : cfg.batch_size;
  SplitRng root(cfg.seed);

  const bool have_out = !cfg.out_dir.empty();
  if (have_out) std::filesystem::create_directories(cfg.out_dir);
  std::ofstream metrics_out;
  if (have_out)
    metrics_out.open(cfg.out_dir + "/metrics.jsonl",
                     resume_from ? std::ios::app : std::ios::trunc);

  TrainResult result;
  Checkpoint last_good = Checkpoint::from_net(net);
  last_good.rng_seed = cfg.seed;
  last_good.step = start_step;
  last_good.config_echo = cfg.config_echo;

  auto snapshot = [&](std::int64_t step) {
    Checkpoint c = Checkpoint::from_net(net);
    c.opt = opt;
    c.rng_seed = cfg.seed;
    c.step = step;
    c.config_echo = cfg.config_echo;
    return c;
  };

  auto emit_metrics = [&](std::int64_t step, const LossBatchReport& rep) {
    MetricsRow row;
    row.step = step;
    row.loss = rep.loss;
    row.ambient_term = rep.ambient_term;
    row.consistency_term = rep.consistency_term;
    if (oracle_gm && !cfg.eval_sigmas.empty()) {
      const DenoiserFn h = [&](const Eigen::VectorXd& x, double t) {
        return net.forward(x, t, sched);
      };
      const auto mse = denoiser_mse_grid(h, *oracle_gm, sched, cfg.eval_sigmas, cfg.eval_points,
                                         root.split(stream::kEval));
      for (const auto& r : mse.rows) row.oracle_mse_by_sigma.push_back(r.relative_mse);
    }
    result.metrics.push_back(row);
    if (metrics_out) {
      nlohmann::json j{{"step", row.step},
                       {"loss", row.loss},
                       {"ambient_term", row.ambient_term},
                       {"consistency_term", row.consistency_term},
                       {"oracle_mse_by_sigma", row.oracle_mse_by_sigma}};
      metrics_out << j.dump() << '\n';
    }
  };

  for (std::int64_t step = start_step; step < total; ++step) {
    const bool phase2 = step >= cfg.phase1_steps;
    const int bsz = phase2 ? phase2_batch : cfg.batch_size;
    const Eigen::MatrixXd batch =
        draw_batch(ds->samples, bsz, root.split(stream::kBatch).split(step));
    SplitRng loss_rng = root.split(stream::kLoss).split(step);

    LossBatchReport rep;
    try {
      if (phase2 && cfg.loss.lambda > 0.0) {
        rep = combined_loss(net, batch, sched, cfg.loss, loss_rng);
      } else if (cfg.loss_kind == LossKind::Dsm) {
        rep = dsm_loss(net, batch, sched, loss_rng);
      } else {
        rep = ambient_dsm_loss(net, batch, sched, loss_rng);
      }
    } catch (const std::runtime_error& e) {
      if (have_out) save_checkpoint(last_good, cfg.out_dir + "/last_good.ckpt");
      throw TrainingDiverged("train: aborted at step " + std::to_string(step) + ": " + e.what(),
                             last_good);
    }

    if (!std::isfinite(rep.loss) || rep.loss > 1e6) {
      if (have_out) save_checkpoint(last_good, cfg.out_dir + "/last_good.ckpt");
      throw TrainingDiverged("train: loss diverged at step " + std::to_string(step), last_good);
    }

    adam_step(net.params(), rep.grad, opt, cfg.adam);

    const std::int64_t done = step + 1;
    if (cfg.eval_every > 0 && (done % cfg.eval_every == 0 || done == total))
      emit_metrics(done, rep);
    if (cfg.checkpoint_every > 0 && have_out && done % cfg.checkpoint_every == 0)
      save_checkpoint(snapshot(done), cfg.out_dir + "/step_" + std::to_string(done) + ".ckpt");
    last_good = snapshot(done);
  }

  result.checkpoint = snapshot(total);
  if (have_out) save_checkpoint(result.checkpoint, cfg.out_dir + "/final.ckpt");
  return result;
}

}  // namespace ambient
