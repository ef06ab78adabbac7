#include "ambient/net.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ambient {

namespace {
using ConstMat = Eigen::Map<const Eigen::MatrixXd>;
using Mat = Eigen::Map<Eigen::MatrixXd>;
}  // namespace

DenoiserNet::DenoiserNet(int dim, std::vector<int> hidden, int embed_dim, std::uint64_t seed,
                         Activation act_kind, double sigma_data)
    : dim_(dim), embed_dim_(embed_dim), hidden_(std::move(hidden)), act_(act_kind),
      sigma_data_(sigma_data) {
  if (dim_ < 1) throw std::invalid_argument("net: dim must be >= 1");
  if (embed_dim_ < 2 || embed_dim_ % 2 != 0)
    throw std::invalid_argument("net: embed_dim must be even and >= 2");
  if (hidden_.empty()) throw std::invalid_argument("net: need at least one hidden layer");
  for (int h : hidden_)
    if (h < 1) throw std::invalid_argument("net: hidden sizes must be >= 1");
  if (!(sigma_data_ > 0.0)) throw std::invalid_argument("net: sigma_data must be > 0");

  std::vector<int> sizes;
  sizes.push_back(dim_ + embed_dim_);
  for (int h : hidden_) sizes.push_back(h);
  sizes.push_back(dim_);

  Eigen::Index off = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    Layer L;
    L.in = sizes[l];
    L.out = sizes[l + 1];
    L.w_off = off;
    off += static_cast<Eigen::Index>(L.in) * L.out;
    L.b_off = off;
    off += L.out;
    layers_.push_back(L);
  }
  params_.setZero(off);

  // Fan-in scaled uniform weights, zero biases.
  SplitRng rng = SplitRng(seed).split(stream::kNetInit);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& L = layers_[l];
    const double bound = 1.0 / std::sqrt(static_cast<double>(L.in));
    SplitRng s = rng.split(l);
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(L.in) * L.out; ++i)
      params_[L.w_off + i] = bound * (2.0 * s.uniform() - 1.0);
  }
}

Eigen::Index DenoiserNet::param_count_for(int dim, const std::vector<int>& hidden, int embed_dim) {
  Eigen::Index n = 0;
  int in = dim + embed_dim;
  for (int h : hidden) {
    n += static_cast<Eigen::Index>(in) * h + h;
    in = h;
  }
  n += static_cast<Eigen::Index>(in) * dim + dim;
  return n;
}

Eigen::VectorXd DenoiserNet::embed(double sigma) const {
  const int half = embed_dim_ / 2;
  const double u = std::log1p(sigma);
  Eigen::VectorXd e(embed_dim_);
  for (int k = 0; k < half; ++k) {
    const double w =
        half == 1 ? 1.0 : 0.5 * std::pow(32.0, static_cast<double>(k) / (half - 1));
    e[k] = std::sin(w * u);
    e[half + k] = std::cos(w * u);
  }
  return e;
}

double DenoiserNet::out_scale(double sigma) const {
  return sigma * sigma_data_ / std::sqrt(sigma * sigma + sigma_data_ * sigma_data_);
}

double DenoiserNet::act(double z) const {
  if (act_ == Activation::Relu) return z > 0.0 ? z : 0.0;
  return z / (1.0 + std::exp(-z));
}

double DenoiserNet::act_grad(double z) const {
  if (act_ == Activation::Relu) return z > 0.0 ? 1.0 : 0.0;
  const double s = 1.0 / (1.0 + std::exp(-z));
  return s * (1.0 + z * (1.0 - s));
}

Eigen::VectorXd DenoiserNet::forward_sigma(const Eigen::VectorXd& x, double sigma) const {
  if (x.size() != dim_) throw std::invalid_argument("net: input dimension mismatch");
  if (!x.allFinite() || !std::isfinite(sigma))
    throw std::invalid_argument("net: non-finite input");
  Eigen::VectorXd a(dim_ + embed_dim_);
  a.head(dim_) = x;
  a.tail(embed_dim_) = embed(sigma);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& L = layers_[l];
    ConstMat W(params_.data() + L.w_off, L.out, L.in);
    Eigen::VectorXd z = W * a + params_.segment(L.b_off, L.out);
    if (l + 1 < layers_.size())
      for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = act(z[i]);
    a = std::move(z);
  }
  return x + out_scale(sigma) * a;
}

Eigen::VectorXd DenoiserNet::forward(const Eigen::VectorXd& x, double t,
                                     const NoiseSchedule& sched) const {
  return forward_sigma(x, sched.sigma(t));
}

void DenoiserNet::backward_sigma(const Eigen::VectorXd& x, double sigma,
                                 const Eigen::VectorXd& upstream,
                                 Eigen::Ref<Eigen::VectorXd> grad) const {
  if (upstream.size() != dim_) throw std::invalid_argument("net: upstream dimension mismatch");
  if (grad.size() != params_.size()) throw std::invalid_argument("net: grad buffer size mismatch");

  const std::size_t nl = layers_.size();
  std::vector<Eigen::VectorXd> acts(nl + 1), pre(nl);
  acts[0].resize(dim_ + embed_dim_);
  acts[0].head(dim_) = x;
  acts[0].tail(embed_dim_) = embed(sigma);
  for (std::size_t l = 0; l < nl; ++l) {
    const Layer& L = layers_[l];
    ConstMat W(params_.data() + L.w_off, L.out, L.in);
    pre[l] = W * acts[l] + params_.segment(L.b_off, L.out);
    if (!pre[l].allFinite())
      throw std::runtime_error("net: non-finite pre-activation in layer " + std::to_string(l));
    acts[l + 1] = pre[l];
    if (l + 1 < nl)
      for (Eigen::Index i = 0; i < acts[l + 1].size(); ++i) acts[l + 1][i] = act(pre[l][i]);
  }

  Eigen::VectorXd gz = out_scale(sigma) * upstream;  // last layer is linear
  for (std::size_t li = nl; li-- > 0;) {
    const Layer& L = layers_[li];
    Mat gW(grad.data() + L.w_off, L.out, L.in);
    gW.noalias() += gz * acts[li].transpose();
    grad.segment(L.b_off, L.out) += gz;
    if (li > 0) {
      ConstMat W(params_.data() + L.w_off, L.out, L.in);
      Eigen::VectorXd ga = W.transpose() * gz;
      gz.resize(layers_[li - 1].out);
      for (Eigen::Index i = 0; i < gz.size(); ++i) gz[i] = ga[i] * act_grad(pre[li - 1][i]);
    }
  }
}

void DenoiserNet::backward(const Eigen::VectorXd& x, double t, const NoiseSchedule& sched,
                           const Eigen::VectorXd& upstream,
                           Eigen::Ref<Eigen::VectorXd> grad) const {
  backward_sigma(x, sched.sigma(t), upstream, grad);
}

Eigen::VectorXd DenoiserNet::input_jvp(const Eigen::VectorXd& x, double t,
                                       const NoiseSchedule& sched,
                                       const Eigen::VectorXd& dx) const {
  if (dx.size() != dim_) throw std::invalid_argument("net: dx dimension mismatch");
  const double sigma = sched.sigma(t);
  Eigen::VectorXd a(dim_ + embed_dim_), da(dim_ + embed_dim_);
  a.head(dim_) = x;
  a.tail(embed_dim_) = embed(sigma);
  da.setZero();
  da.head(dim_) = dx;
  const std::size_t nl = layers_.size();
  for (std::size_t l = 0; l < nl; ++l) {
    const Layer& L = layers_[l];
    ConstMat W(params_.data() + L.w_off, L.out, L.in);
    Eigen::VectorXd z = W * a + params_.segment(L.b_off, L.out);
    Eigen::VectorXd dz = W * da;
    if (l + 1 < nl) {
      for (Eigen::Index i = 0; i < z.size(); ++i) {
        dz[i] *= act_grad(z[i]);
        z[i] = act(z[i]);
      }
    }
    a = std::move(z);
    da = std::move(dz);
  }
  return dx + out_scale(sigma) * da;
}

}  // namespace ambient
