#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <iostream>
#include <string>

#include "ambient/config.hpp"
#include "ambient/eval.hpp"
#include "ambient/io.hpp"
#include "ambient/loss.hpp"
#include "ambient/mixture.hpp"
#include "ambient/net.hpp"
#include "ambient/sampler.hpp"
#include "ambient/schedule.hpp"
#include "ambient/trainer.hpp"

using namespace ambient;

namespace {

RunConfig load_config(const std::string& path) {
  RunConfig cfg = path.empty() ? RunConfig() : RunConfig::load_file(path);
  cfg.apply_env();
  return cfg;
}

TrainConfig train_config_from(const RunConfig& cfg) {
  TrainConfig t;
  t.schedule = schedule_spec_from(cfg);
  t.dataset_path = cfg.get_string("train.dataset");
  t.dataset_count = static_cast<int>(cfg.get_int("dataset.count"));
  t.dataset_seed = static_cast<std::uint64_t>(cfg.get_int("dataset.seed"));
  t.hidden = cfg.get_int_list("net.hidden");
  t.embed_dim = static_cast<int>(cfg.get_int("net.embed_dim"));
  t.activation = cfg.get_string("net.activation") == "relu" ? Activation::Relu : Activation::Silu;
  t.sigma_data = cfg.get_double("net.sigma_data");
  t.batch_size = static_cast<int>(cfg.get_int("train.batch_size"));
  t.phase2_batch_size = static_cast<int>(cfg.get_int("train.phase2_batch_size"));
  t.phase1_steps = cfg.get_int("train.phase1_steps");
  t.phase2_steps = cfg.get_int("train.phase2_steps");
  t.adam.lr = cfg.get_double("train.learning_rate");
  t.adam.beta1 = cfg.get_double("train.adam_beta1");
  t.adam.beta2 = cfg.get_double("train.adam_beta2");
  t.adam.epsilon = cfg.get_double("train.adam_epsilon");
  t.adam.weight_decay = cfg.get_double("train.weight_decay");
  t.seed = static_cast<std::uint64_t>(cfg.get_int("train.seed"));
  t.eval_every = cfg.get_int("train.eval_every");
  t.checkpoint_every = cfg.get_int("train.checkpoint_every");
  const std::string lk = cfg.get_string("loss.kind");
  t.loss_kind = lk == "dsm" ? LossKind::Dsm
                            : (lk == "ambient" ? LossKind::Ambient : LossKind::AmbientConsistency);
  t.loss.lambda = lk == "ambient+consistency" ? cfg.get_double("loss.lambda") : 0.0;
  t.loss.eps = cfg.get_double("loss.eps");
  t.loss.chain_steps = static_cast<int>(cfg.get_int("loss.chain_steps"));
  t.loss.forward_noise_above_tn = cfg.get_bool("loss.forward_noise_above_tn");
  t.eval_sigmas = cfg.get_double_list("eval.sigma_grid");
  t.eval_points = static_cast<int>(cfg.get_int("eval.n_points"));
  t.out_dir = cfg.get_string("train.out_dir");
  t.config_echo = cfg.echo();
  return t;
}

SamplerConfig sampler_config_from(const RunConfig& cfg) {
  SamplerConfig s;
  s.n_steps = static_cast<int>(cfg.get_int("sampler.steps"));
  s.kind = cfg.get_string("sampler.kind") == "ddim" ? SamplerKind::Deterministic
                                                    : SamplerKind::Stochastic;
  s.t_start = cfg.get_double("sampler.t_start");
  s.t_stop = cfg.get_double("sampler.t_stop");
  s.final_denoise = cfg.get_bool("sampler.final_denoise");
  s.seed = static_cast<std::uint64_t>(cfg.get_int("sampler.seed"));
  return s;
}

DenoiserFn net_handle(const DenoiserNet& net, const NoiseSchedule& sched) {
  return [&net, &sched](const Eigen::VectorXd& x, double t) { return net.forward(x, t, sched); };
}

struct CheckRow {
  std::string name;
  bool pass;
  double value, threshold;
};

void print_rows(const std::vector<CheckRow>& rows) {
  for (const auto& r : rows)
    std::printf("%-52s %-5s value=%-12.4g threshold=%g\n", r.name.c_str(),
                r.pass ? "PASS" : "FAIL", r.value, r.threshold);
}

int run_oracle_check(const RunConfig&) {
  std::vector<CheckRow> rows;
  const std::vector<std::string> names = {"m1", "m2", "ring8"};
  for (const auto& name : names) {
    const GaussianMixture gm = GaussianMixture::preset(name);
    for (int vp = 0; vp < 2; ++vp) {
      const NoiseSchedule sched =
          vp ? NoiseSchedule::paper_vp(100.0) : NoiseSchedule::identity_ve(3.0, 0.5);
      SplitRng rng(2024 + vp);
      double worst_bridge = 0.0;
      for (int i = 0; i < 100; ++i) {
        SplitRng s = rng.split(i);
        const double t_lo = sched.min_ambient_time();
        const double t = t_lo + (sched.T() - t_lo) * (0.02 + 0.96 * s.uniform());
        const Eigen::VectorXd x0 = sample_prior(gm, 1, s.split(1)).row(0).transpose();
        const Eigen::VectorXd xt = sched.forward_noise(x0, 0.0, t, s.split(2).normal_vec(gm.dim));
        const auto [a, b] = sched.bridge_coefficients(t);
        const Eigen::VectorXd lhs = a * posterior_mean_of_nature(gm, xt, t, sched) + b * xt;
        const Eigen::VectorXd rhs = posterior_mean(gm, xt, t, sched);
        const double rel = (lhs - rhs).norm() / std::max(rhs.norm(), 1e-12);
        worst_bridge = std::max(worst_bridge, rel);
      }
      rows.push_back({"bridge identity " + name + (vp ? " (VP)" : " (VE)"),
                      worst_bridge < 1e-10, worst_bridge, 1e-10});

      double worst_tweedie = 0.0;
      for (int i = 0; i < 20; ++i) {
        SplitRng s = rng.split(1000 + i);
        const double t = 0.05 * sched.T() + 0.9 * sched.T() * s.uniform();
        const Eigen::VectorXd x0 = sample_prior(gm, 1, s.split(1)).row(0).transpose();
        const Eigen::VectorXd xt = sched.forward_noise(x0, 0.0, t, s.split(2).normal_vec(gm.dim));
        const Eigen::VectorXd sc = score(gm, xt, t, sched);
        Eigen::VectorXd fd(gm.dim);
        const double h = 1e-5;
        for (int j = 0; j < gm.dim; ++j) {
          Eigen::VectorXd xp = xt, xm = xt;
          xp[j] += h;
          xm[j] -= h;
          fd[j] = (log_density_t(gm, xp, t, sched) - log_density_t(gm, xm, t, sched)) / (2 * h);
        }
        const double rel = (sc - fd).norm() / std::max(sc.norm(), 1e-12);
        worst_tweedie = std::max(worst_tweedie, rel);
      }
      rows.push_back({"tweedie score vs finite differences " + name + (vp ? " (VP)" : " (VE)"),
                      worst_tweedie < 1e-6, worst_tweedie, 1e-6});
    }
    const NoiseSchedule sched = NoiseSchedule::identity_ve(3.0, 0.5);
    SplitRng rng(77);
    const Eigen::VectorXd x0 = sample_prior(gm, 1, rng.split(1)).row(0).transpose();
    const Eigen::VectorXd xt = sched.forward_noise(x0, 0.0, 1.0, rng.split(2).normal_vec(gm.dim));
    const Eigen::VectorXd mc = mc_posterior_mean(gm, xt, 1.0, sched, 100000, rng.split(3));
    const Eigen::VectorXd pm = posterior_mean(gm, xt, 1.0, sched);
    const double err = (mc - pm).lpNorm<Eigen::Infinity>();
    rows.push_back({"mc posterior mean agreement " + name, err < 0.02, err, 0.02});
  }
  print_rows(rows);
  for (const auto& r : rows)
    if (!r.pass) return 3;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ambient diffusion trainer and evaluation suite"};
  app.require_subcommand(1);

  std::string config_path, out_path, ckpt_path, a_path, b_path, resume_path, points_path;

  auto* cmd_make = app.add_subcommand("make-dataset", "draw a noisy training dataset");
  cmd_make->add_option("--config", config_path, "run config file");
  cmd_make->add_option("--out", out_path, "output dataset path")->required();

  auto* cmd_train = app.add_subcommand("train", "run the two-phase training regimen");
  cmd_train->add_option("--config", config_path, "run config file");
  cmd_train->add_option("--resume", resume_path, "checkpoint to resume from");

  auto* cmd_sample = app.add_subcommand("sample", "generate samples from a checkpoint");
  int sample_steps = -1, sample_n = -1;
  double stop_time = -1.0;
  std::string sampler_kind;
  long long sample_seed = -1;
  cmd_sample->add_option("--config", config_path, "run config file");
  cmd_sample->add_option("--checkpoint", ckpt_path, "trained checkpoint")->required();
  cmd_sample->add_option("--out", out_path, "output dataset path")->required();
  cmd_sample->add_option("--steps", sample_steps, "integration steps");
  cmd_sample->add_option("--sampler", sampler_kind, "sde or ddim");
  cmd_sample->add_option("--stop-time", stop_time, "early-stop time");
  cmd_sample->add_option("--n", sample_n, "number of samples");
  cmd_sample->add_option("--seed", sample_seed, "sampler seed");

  auto* cmd_evald = app.add_subcommand("eval-denoiser", "denoiser MSE grid vs the oracle");
  std::string json_path, csv_path;
  cmd_evald->add_option("--config", config_path, "run config file");
  cmd_evald->add_option("--checkpoint", ckpt_path, "trained checkpoint")->required();
  cmd_evald->add_option("--json", json_path, "JSON report path");
  cmd_evald->add_option("--csv", csv_path, "CSV report path");

  auto* cmd_dist = app.add_subcommand("eval-dist", "sliced Wasserstein-2 between two sample files");
  int projections = 128;
  long long dist_seed = 7;
  cmd_dist->add_option("--config", config_path, "run config file");
  cmd_dist->add_option("--a", a_path, "first dataset file")->required();
  cmd_dist->add_option("--b", b_path, "second dataset file")->required();
  cmd_dist->add_option("--projections", projections, "number of projections");
  cmd_dist->add_option("--seed", dist_seed, "projection seed");

  auto* cmd_attack = app.add_subcommand("attack", "memorization attack with similarity histogram");
  cmd_attack->add_option("--config", config_path, "run config file");
  cmd_attack->add_option("--checkpoint", ckpt_path, "trained checkpoint")->required();
  cmd_attack->add_option("--points", points_path, "dataset file with the attack targets")
      ->required();
  cmd_attack->add_option("--json", json_path, "JSON report path");
  cmd_attack->add_option("--csv", csv_path, "CSV report path");

  auto* cmd_oracle = app.add_subcommand("oracle-check", "run the oracle identity suite");
  cmd_oracle->add_option("--config", config_path, "run config file");

  auto* cmd_echo = app.add_subcommand("config-echo", "print the canonical config echo");
  cmd_echo->add_option("--config", config_path, "run config file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (cmd_make->parsed()) {
      const RunConfig cfg = load_config(config_path);
      const NoiseSchedule sched{schedule_spec_from(cfg)};
      const GaussianMixture gm = mixture_from(cfg);
      const NoisyDataset ds =
          make_dataset(gm, sched, static_cast<int>(cfg.get_int("dataset.count")),
                       static_cast<std::uint64_t>(cfg.get_int("dataset.seed")));
      save_dataset(ds, out_path);
      std::printf("wrote %lld samples of dim %d to %s\n", static_cast<long long>(ds.count()),
                  ds.dim(), out_path.c_str());
    } else if (cmd_train->parsed()) {
      const RunConfig cfg = load_config(config_path);
      TrainConfig tc = train_config_from(cfg);
      const GaussianMixture gm = has_mixture(cfg) ? mixture_from(cfg) : GaussianMixture{};
      const GaussianMixture* gmp = has_mixture(cfg) ? &gm : nullptr;
      Checkpoint resume;
      const Checkpoint* resume_p = nullptr;
      if (!resume_path.empty()) {
        resume = load_checkpoint(resume_path);
        resume_p = &resume;
      }
      const TrainResult res = train(tc, gmp, nullptr, resume_p);
      if (tc.out_dir.empty()) {
        save_checkpoint(res.checkpoint, "final.ckpt");
        std::printf("wrote final.ckpt (step %lld)\n", static_cast<long long>(res.checkpoint.step));
      } else {
        std::printf("wrote %s/final.ckpt (step %lld)\n", tc.out_dir.c_str(),
                    static_cast<long long>(res.checkpoint.step));
      }
    } else if (cmd_sample->parsed()) {
      const RunConfig cfg = load_config(config_path);
      const NoiseSchedule sched{schedule_spec_from(cfg)};
      const Checkpoint ckpt = load_checkpoint(ckpt_path);
      const DenoiserNet net = ckpt.make_net();
      SamplerConfig scfg = sampler_config_from(cfg);
      if (sample_steps > 0) scfg.n_steps = sample_steps;
      if (!sampler_kind.empty())
        scfg.kind = sampler_kind == "ddim" ? SamplerKind::Deterministic : SamplerKind::Stochastic;
      if (stop_time >= 0.0) scfg.t_stop = stop_time;
      if (sample_seed >= 0) scfg.seed = static_cast<std::uint64_t>(sample_seed);
      const int n = sample_n > 0 ? sample_n : static_cast<int>(cfg.get_int("sampler.n"));
      const Eigen::MatrixXd samples =
          generate(net_handle(net, sched), net.dim(), sched, scfg, n, SplitRng(scfg.seed));
      NoisyDataset out;
      out.schedule = sched.spec();
      out.samples = samples;
      out.seed = scfg.seed;
      save_dataset(out, out_path);
      std::printf("wrote %d samples to %s\n", n, out_path.c_str());
    } else if (cmd_evald->parsed()) {
      const RunConfig cfg = load_config(config_path);
      const NoiseSchedule sched{schedule_spec_from(cfg)};
      const GaussianMixture gm = mixture_from(cfg);
      const Checkpoint ckpt = load_checkpoint(ckpt_path);
      const DenoiserNet net = ckpt.make_net();
      const auto rep = denoiser_mse_grid(
          net_handle(net, sched), gm, sched, cfg.get_double_list("eval.sigma_grid"),
          static_cast<int>(cfg.get_int("eval.n_points")), SplitRng(2718));
      std::printf("%-12s %-14s %-14s %s\n", "sigma", "relative_mse", "absolute_mse", "n");
      for (const auto& r : rep.rows)
        std::printf("%-12g %-14.6g %-14.6g %d\n", r.sigma_eval, r.relative_mse, r.absolute_mse,
                    r.n_points);
      write_mse_report(rep, json_path, csv_path);
    } else if (cmd_dist->parsed()) {
      const NoisyDataset A = load_dataset(a_path), B = load_dataset(b_path);
      const double d = sliced_wasserstein2(A.samples, B.samples, projections,
                                           SplitRng(static_cast<std::uint64_t>(dist_seed)));
      std::printf("sliced_w2_squared = %.10g\n", d);
    } else if (cmd_attack->parsed()) {
      const RunConfig cfg = load_config(config_path);
      const NoiseSchedule sched{schedule_spec_from(cfg)};
      const Checkpoint ckpt = load_checkpoint(ckpt_path);
      const DenoiserNet net = ckpt.make_net();
      const NoisyDataset pts = load_dataset(points_path);
      SamplerConfig scfg = sampler_config_from(cfg);
      scfg.n_steps = static_cast<int>(cfg.get_int("eval.attack_steps"));
      const auto rep = memorization_attack(
          net_handle(net, sched), pts.samples, 0.0, sched, cfg.get_double("eval.attack_sigma"),
          static_cast<int>(cfg.get_int("eval.attack_draws")), scfg, SplitRng(scfg.seed));
      std::printf("n=%ld frac>0.90=%.4f frac>0.95=%.4f frac>0.99=%.4f\n", rep.n_samples,
                  rep.frac_above_090, rep.frac_above_095, rep.frac_above_099);
      write_similarity_report(rep, json_path, csv_path);
    } else if (cmd_oracle->parsed()) {
      return run_oracle_check(load_config(config_path));
    } else if (cmd_echo->parsed()) {
      std::fputs(load_config(config_path).echo().c_str(), stdout);
    }
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
