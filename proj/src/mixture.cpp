#include "ambient/mixture.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ambient {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;

// log N(x; m, diag(v)) summed over coordinates, v = a^2 V + s^2.
double log_gauss_diag(const Eigen::VectorXd& x, const Eigen::VectorXd& m,
                      const Eigen::VectorXd& v) {
  double acc = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double d = x[j] - m[j];
    acc += -0.5 * (kLog2Pi + std::log(v[j]) + d * d / v[j]);
  }
  return acc;
}
}  // namespace

void GaussianMixture::validate() const {
  const Eigen::Index k = weights.size();
  if (k < 1) throw std::invalid_argument("mixture: need at least one component");
  if (means.rows() != k || variances.rows() != k || means.cols() != dim ||
      variances.cols() != dim)
    throw std::invalid_argument("mixture: shape mismatch");
  if ((weights.array() <= 0.0).any()) throw std::invalid_argument("mixture: weights must be > 0");
  if (std::abs(weights.sum() - 1.0) > 1e-12)
    throw std::invalid_argument("mixture: weights must sum to 1");
  if ((variances.array() <= 0.0).any())
    throw std::invalid_argument("mixture: variances must be > 0");
}

GaussianMixture GaussianMixture::m1() {
  GaussianMixture g;
  g.dim = 1;
  g.weights = Eigen::VectorXd::Ones(1);
  g.means = Eigen::MatrixXd::Zero(1, 1);
  g.variances = Eigen::MatrixXd::Ones(1, 1);
  return g;
}

GaussianMixture GaussianMixture::m2() {
  GaussianMixture g;
  g.dim = 1;
  g.weights = Eigen::VectorXd::Constant(2, 0.5);
  g.means.resize(2, 1);
  g.means << -2.0, 2.0;
  g.variances = Eigen::MatrixXd::Constant(2, 1, 1e-12);
  return g;
}

GaussianMixture GaussianMixture::ring8() {
  GaussianMixture g;
  g.dim = 2;
  g.weights = Eigen::VectorXd::Constant(8, 0.125);
  g.means.resize(8, 2);
  for (int i = 0; i < 8; ++i) {
    const double a = 2.0 * std::numbers::pi * i / 8.0;
    g.means(i, 0) = 4.0 * std::cos(a);
    g.means(i, 1) = 4.0 * std::sin(a);
  }
  g.variances = Eigen::MatrixXd::Constant(8, 2, 0.09);
  return g;
}

GaussianMixture GaussianMixture::preset(const std::string& name) {
  if (name == "m1") return m1();
  if (name == "m2") return m2();
  if (name == "ring8") return ring8();
  throw std::invalid_argument("mixture: unknown preset '" + name + "'");
}

Eigen::MatrixXd sample_prior(const GaussianMixture& gm, int n, SplitRng rng) {
  if (n < 1) throw std::invalid_argument("sample_prior: n must be >= 1");
  gm.validate();
  const Eigen::Index k = gm.weights.size();
  Eigen::VectorXd cum(k);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) cum[i] = (acc += gm.weights[i]);
  Eigen::MatrixXd out(n, gm.dim);
  for (int i = 0; i < n; ++i) {
    SplitRng s = rng.split(static_cast<std::uint64_t>(i));
    const double u = s.uniform();
    Eigen::Index c = 0;
    while (c < k - 1 && u > cum[c]) ++c;
    for (int j = 0; j < gm.dim; ++j)
      out(i, j) = gm.means(c, j) + std::sqrt(gm.variances(c, j)) * s.normal();
  }
  return out;
}

Eigen::VectorXd posterior_mean_scaled(const GaussianMixture& gm, const Eigen::VectorXd& x,
                                      double alpha, double sigma) {
  if (x.size() != gm.dim) throw std::invalid_argument("posterior_mean: dimension mismatch");
  if (sigma == 0.0) return x / alpha;
  const Eigen::Index k = gm.weights.size();
  const double s2 = sigma * sigma;
  Eigen::VectorXd logw(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const Eigen::VectorXd m = alpha * gm.means.row(i).transpose();
    const Eigen::VectorXd v =
        (alpha * alpha) * gm.variances.row(i).transpose().array() + s2;
    logw[i] = std::log(gm.weights[i]) + log_gauss_diag(x, m, v);
  }
  const double mx = logw.maxCoeff();
  Eigen::VectorXd w = (logw.array() - mx).exp();
  w /= w.sum();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(gm.dim);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (int j = 0; j < gm.dim; ++j) {
      const double vj = gm.variances(i, j);
      const double gain = alpha * vj / (alpha * alpha * vj + s2);
      out[j] += w[i] * (gm.means(i, j) + gain * (x[j] - alpha * gm.means(i, j)));
    }
  }
  return out;
}

Eigen::VectorXd posterior_mean(const GaussianMixture& gm, const Eigen::VectorXd& x_t, double t,
                               const NoiseSchedule& sched) {
  const double s = sched.sigma(t);
  if (s == 0.0) return x_t;
  return posterior_mean_scaled(gm, x_t, sched.alpha(t), s);
}

Eigen::VectorXd score(const GaussianMixture& gm, const Eigen::VectorXd& x_t, double t,
                      const NoiseSchedule& sched) {
  const double s = sched.sigma(t);
  if (s == 0.0) throw std::domain_error("score: undefined at sigma = 0");
  return (sched.alpha(t) * posterior_mean(gm, x_t, t, sched) - x_t) / (s * s);
}

double log_density_t(const GaussianMixture& gm, const Eigen::VectorXd& x_t, double t,
                     const NoiseSchedule& sched) {
  if (x_t.size() != gm.dim) throw std::invalid_argument("log_density_t: dimension mismatch");
  const double s = sched.sigma(t), a = sched.alpha(t);
  const Eigen::Index k = gm.weights.size();
  Eigen::VectorXd logs(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const Eigen::VectorXd m = a * gm.means.row(i).transpose();
    const Eigen::VectorXd v = (a * a) * gm.variances.row(i).transpose().array() + s * s;
    logs[i] = std::log(gm.weights[i]) + log_gauss_diag(x_t, m, v);
  }
  const double mx = logs.maxCoeff();
  return mx + std::log((logs.array() - mx).exp().sum());
}

Eigen::VectorXd mc_posterior_mean(const GaussianMixture& gm, const Eigen::VectorXd& x_t, double t,
                                  const NoiseSchedule& sched, int n, SplitRng rng) {
  if (n < 1) throw std::invalid_argument("mc_posterior_mean: n must be >= 1");
  const double s = sched.sigma(t);
  if (!(s > 0.0)) throw std::domain_error("mc_posterior_mean: requires sigma_t > 0");
  const double a = sched.alpha(t);
  const Eigen::MatrixXd x0 = sample_prior(gm, n, rng.split(1));
  Eigen::VectorXd logw(n);
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int j = 0; j < gm.dim; ++j) {
      const double d = x_t[j] - a * x0(i, j);
      acc += -0.5 * d * d / (s * s);
    }
    logw[i] = acc;  // shared normalizer cancels in the ratio
  }
  const double mx = logw.maxCoeff();
  if (!std::isfinite(mx))
    throw std::runtime_error("mc_posterior_mean: all importance weights underflowed (max log-weight " +
                             std::to_string(mx) + ")");
  const Eigen::VectorXd w = (logw.array() - mx).exp();
  return (x0.transpose() * w) / w.sum();
}

Eigen::VectorXd posterior_mean_of_nature(const GaussianMixture& gm, const Eigen::VectorXd& x_t,
                                         double t, const NoiseSchedule& sched) {
  if (t < sched.t_n()) throw std::domain_error("posterior_mean_of_nature: t below t_n");
  const double sn = sched.sigma_n(), an = sched.alpha(sched.t_n());
  // Auxiliary mixture for X_tn = a_n X_0 + s_n Z.
  GaussianMixture aux = gm;
  aux.means = an * gm.means;
  aux.variances = (an * an * gm.variances.array() + sn * sn).matrix();
  // X_t = a' X_tn + s' Z with the residual pair (a', s').
  const double st = sched.sigma(t);
  double ap, sp;
  if (sched.kind() == ScheduleKind::VE) {
    ap = 1.0;
    sp = std::sqrt(std::max(st * st - sn * sn, 0.0));
  } else {
    ap = std::sqrt((1.0 - st * st) / (1.0 - sn * sn));
    sp = std::sqrt(std::max(st * st - sn * sn, 0.0) / (1.0 - sn * sn));
  }
  return posterior_mean_scaled(aux, x_t, ap, sp);
}

}  // namespace ambient
