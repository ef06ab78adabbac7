#include <doctest.h>

#include <cmath>

#include "ambient/mixture.hpp"

using namespace ambient;

TEST_CASE("mixture validation") {
  GaussianMixture g = GaussianMixture::m2();
  g.weights[0] = 0.6;  // no longer sums to 1
  CHECK_THROWS_AS(g.validate(), std::invalid_argument);
  g = GaussianMixture::m2();
  g.variances(0, 0) = 0.0;
  CHECK_THROWS_AS(g.validate(), std::invalid_argument);
  CHECK_THROWS_AS(GaussianMixture::preset("nope"), std::invalid_argument);
}

TEST_CASE("sample_prior moments and degenerate weights") {
  const GaussianMixture m1 = GaussianMixture::m1();
  const int n = 1000000;
  const Eigen::MatrixXd draws = sample_prior(m1, n, SplitRng(11));
  CHECK(std::abs(draws.col(0).mean()) < 4.0 / std::sqrt(double(n)));

  GaussianMixture two = GaussianMixture::m2();
  two.weights << 1.0 - 1e-13, 1e-13;  // effectively all mass on component 0
  const Eigen::MatrixXd d2 = sample_prior(two, 2000, SplitRng(12));
  CHECK((d2.col(0).array() < 0.0).all());

  const Eigen::MatrixXd d3 = sample_prior(GaussianMixture::m2(), 10000, SplitRng(13));
  const double frac0 = (d3.col(0).array() < 0.0).cast<double>().mean();
  CHECK(frac0 > 0.45);
  CHECK(frac0 < 0.55);
}

TEST_CASE("posterior_mean closed forms") {
  const NoiseSchedule ve = NoiseSchedule::identity_ve(3.0, 0.5);
  const GaussianMixture m1 = GaussianMixture::m1();
  Eigen::VectorXd x(1);
  x << 2.0;
  CHECK(posterior_mean(m1, x, 1.0, ve)[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(posterior_mean(m1, x, 0.0, ve)[0] == 2.0);  // identity at t = 0

  const GaussianMixture m2 = GaussianMixture::m2();
  Eigen::VectorXd zero(1);
  zero << 0.0;
  CHECK(posterior_mean(m2, zero, 1.0, ve)[0] == doctest::Approx(0.0).epsilon(1e-12));
  Eigen::VectorXd one(1);
  one << 1.0;
  CHECK(posterior_mean(m2, one, 1.0, ve)[0] ==
        doctest::Approx(1.9280551601504231).epsilon(1e-10));
}

TEST_CASE("score closed forms and the t = 0 error") {
  const NoiseSchedule ve = NoiseSchedule::identity_ve(3.0, 0.5);
  const GaussianMixture m1 = GaussianMixture::m1();
  Eigen::VectorXd x(1);
  x << 2.0;
  CHECK(score(m1, x, 1.0, ve)[0] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK_THROWS_AS(score(m1, x, 0.0, ve), std::domain_error);

  const GaussianMixture m2 = GaussianMixture::m2();
  Eigen::VectorXd one(1);
  one << 1.0;
  CHECK(score(m2, one, 1.0, ve)[0] == doctest::Approx(0.92805516015042311).epsilon(1e-9));
  Eigen::VectorXd zero(1);
  zero << 0.0;
  CHECK(std::abs(score(m2, zero, 1.0, ve)[0]) < 1e-12);  // symmetry
}

TEST_CASE("log_density_t value, lower bound, and gradient identity") {
  const NoiseSchedule ve = NoiseSchedule::identity_ve(3.0, 0.5);
  const GaussianMixture m1 = GaussianMixture::m1();
  Eigen::VectorXd zero(1);
  zero << 0.0;
  // sigma = sqrt(3) gives total variance 4.
  CHECK(log_density_t(m1, zero, std::sqrt(3.0), ve) ==
        doctest::Approx(-1.6120857137646181).epsilon(1e-12));

  const GaussianMixture ring = GaussianMixture::ring8();
  SplitRng rng(31);
  for (int i = 0; i < 10; ++i) {
    SplitRng s = rng.split(i);
    const Eigen::VectorXd xt = 5.0 * s.normal_vec(2);
    const double t = 0.2 + 2.5 * s.uniform();
    const double lp = log_density_t(ring, xt, t, ve);
    // Sum over components dominates every single term.
    for (int c = 0; c < 8; ++c) {
      const double tot = ring.variances(c, 0) + t * t;
      const double d2 = (xt - ring.means.row(c).transpose()).squaredNorm();
      const double term = std::log(ring.weights[c]) - 0.5 * (2.0 * std::log(2.0 * M_PI * tot)) -
                          0.5 * d2 / tot;
      CHECK(lp >= term - 1e-12);
    }
    // Tweedie: analytic score equals the density gradient.
    const Eigen::VectorXd sc = score(ring, xt, t, ve);
    for (int j = 0; j < 2; ++j) {
      Eigen::VectorXd xp = xt, xm = xt;
      xp[j] += 1e-5;
      xm[j] -= 1e-5;
      const double fd = (log_density_t(ring, xp, t, ve) - log_density_t(ring, xm, t, ve)) / 2e-5;
      CHECK(std::abs(fd - sc[j]) / std::max(sc.norm(), 1e-9) < 1e-6);
    }
  }
}

TEST_CASE("mc_posterior_mean agrees with the closed form") {
  const NoiseSchedule ve = NoiseSchedule::identity_ve(3.0, 0.5);
  const GaussianMixture m1 = GaussianMixture::m1();
  Eigen::VectorXd x(1);
  x << 2.0;
  const Eigen::VectorXd est = mc_posterior_mean(m1, x, 1.0, ve, 1000000, SplitRng(21));
  CHECK(std::abs(est[0] - 1.0) < 0.01);

  // n = 1 returns the single prior draw regardless of its weight.
  const Eigen::VectorXd single = mc_posterior_mean(m1, x, 1.0, ve, 1, SplitRng(22));
  const Eigen::MatrixXd draw = sample_prior(m1, 1, SplitRng(22).split(1));
  CHECK(single[0] == draw(0, 0));

  const GaussianMixture m2 = GaussianMixture::m2();
  Eigen::VectorXd one(1);
  one << 1.0;
  const Eigen::VectorXd est2 = mc_posterior_mean(m2, one, 1.0, ve, 1000000, SplitRng(23));
  CHECK(std::abs(est2[0] - 1.9280551601504231) < 0.02);
}

TEST_CASE("bridge realized on the oracle across mixtures and kinds") {
  SplitRng rng(41);
  for (const auto& name : {"m1", "m2", "ring8"}) {
    const GaussianMixture gm = GaussianMixture::preset(name);
    for (int vp = 0; vp < 2; ++vp) {
      const NoiseSchedule sched =
          vp ? NoiseSchedule::paper_vp(100.0) : NoiseSchedule::identity_ve(3.0, 0.5);
      for (int i = 0; i < 30; ++i) {
        SplitRng s = rng.split(i + 100 * vp);
        const double t_lo = sched.min_ambient_time();
        const double t = t_lo + (sched.T() - t_lo) * (0.02 + 0.96 * s.uniform());
        const Eigen::VectorXd x0 = sample_prior(gm, 1, s.split(1)).row(0).transpose();
        const Eigen::VectorXd xt = sched.forward_noise(x0, 0.0, t, s.split(2).normal_vec(gm.dim));
        const auto [a, b] = sched.bridge_coefficients(t);
        const Eigen::VectorXd lhs = a * posterior_mean_of_nature(gm, xt, t, sched) + b * xt;
        const Eigen::VectorXd rhs = posterior_mean(gm, xt, t, sched);
        CHECK((lhs - rhs).norm() / std::max(rhs.norm(), 1e-12) < 1e-10);
      }
    }
  }
}

TEST_CASE("posterior_mean limits") {
  // VE sigma -> large: the posterior mean approaches the prior mean.
  const NoiseSchedule wide = NoiseSchedule::identity_ve(200.0, 0.5);
  const GaussianMixture m2 = GaussianMixture::m2();
  Eigen::VectorXd x(1);
  x << 1.5;
  CHECK(std::abs(posterior_mean(m2, x, 150.0, wide)[0]) < 1e-3);
}
