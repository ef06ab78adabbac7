#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "ambient/rng.hpp"
#include "ambient/schedule.hpp"

namespace ambient {

enum class Activation { Silu, Relu };

/// Fully-connected denoiser h(x, t) -> estimate of E[X0 | X_t = x].
///
/// The time enters through a sinusoidal embedding of log1p(sigma_t), and the
/// output is parameterized as x + c_out(sigma) * F([x; emb]) with
/// c_out = sigma * sigma_data / sqrt(sigma^2 + sigma_data^2), so the denoiser
/// is the identity at sigma = 0 and the trunk learns an O(1) residual.
/// Parameters live in one flat vector; gradients use the same index map.
class DenoiserNet {
 public:
  DenoiserNet(int dim, std::vector<int> hidden, int embed_dim, std::uint64_t seed,
              Activation act = Activation::Silu, double sigma_data = 1.0);

  int dim() const { return dim_; }
  int embed_dim() const { return embed_dim_; }
  const std::vector<int>& hidden() const { return hidden_; }
  Activation activation() const { return act_; }
  double sigma_data() const { return sigma_data_; }

  Eigen::Index param_count() const { return params_.size(); }
  Eigen::VectorXd& params() { return params_; }
  const Eigen::VectorXd& params() const { return params_; }

  static Eigen::Index param_count_for(int dim, const std::vector<int>& hidden, int embed_dim);

  Eigen::VectorXd forward(const Eigen::VectorXd& x, double t, const NoiseSchedule& sched) const;

  /// Accumulates d<upstream, forward(x,t)>/dparams into grad (same index map
  /// as params). Fixed accumulation order.
  void backward(const Eigen::VectorXd& x, double t, const NoiseSchedule& sched,
                const Eigen::VectorXd& upstream, Eigen::Ref<Eigen::VectorXd> grad) const;

  /// Directional derivative of forward with respect to x along dx.
  Eigen::VectorXd input_jvp(const Eigen::VectorXd& x, double t, const NoiseSchedule& sched,
                            const Eigen::VectorXd& dx) const;

  Eigen::VectorXd forward_sigma(const Eigen::VectorXd& x, double sigma) const;
  void backward_sigma(const Eigen::VectorXd& x, double sigma, const Eigen::VectorXd& upstream,
                      Eigen::Ref<Eigen::VectorXd> grad) const;

 private:
  struct Layer {
    Eigen::Index w_off, b_off;
    int in, out;
  };

  Eigen::VectorXd embed(double sigma) const;
  double out_scale(double sigma) const;
  double act(double z) const;
  double act_grad(double z) const;

  int dim_, embed_dim_;
  std::vector<int> hidden_;
  Activation act_;
  double sigma_data_;
  std::vector<Layer> layers_;
  Eigen::VectorXd params_;
};

}  // namespace ambient
