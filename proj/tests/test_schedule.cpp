#include <doctest.h>

#include <cmath>

#include "ambient/rng.hpp"
#include "ambient/schedule.hpp"

using namespace ambient;

TEST_CASE("sigma_at on identity VE and paper VP anchors") {
  const NoiseSchedule ve = NoiseSchedule::identity_ve(3.0, 0.5);
  CHECK(ve.sigma(0.0) == 0.0);
  CHECK(ve.sigma(2.0) == 2.0);
  CHECK_THROWS_AS(ve.sigma(-0.1), std::domain_error);
  CHECK_THROWS_AS(ve.sigma(3.1), std::domain_error);

  const NoiseSchedule vp = NoiseSchedule::paper_vp(500.0);
  CHECK(vp.sigma(500.0) == doctest::Approx(0.850).epsilon(1e-15));
  CHECK(vp.sigma(100.0) == doctest::Approx(0.325).epsilon(1e-15));
  CHECK(vp.sigma(0.0) == 0.0);
  CHECK(vp.alpha(500.0) == doctest::Approx(std::sqrt(1.0 - 0.7225)));
}

TEST_CASE("sigma is strictly increasing and invertible") {
  for (const NoiseSchedule& sched :
       {NoiseSchedule::identity_ve(3.0, 0.5), NoiseSchedule::paper_vp(100.0)}) {
    double prev = -1.0;
    for (int k = 0; k <= 200; ++k) {
      const double t = sched.T() * k / 200.0;
      const double s = sched.sigma(t);
      CHECK(s > prev);
      prev = s;
      CHECK(sched.time_of_sigma(s) == doctest::Approx(t).epsilon(1e-9));
    }
  }
}

TEST_CASE("schedule construction rejects bad specs") {
  ScheduleSpec s;
  s.kind = ScheduleKind::VP;
  s.form = "identity";
  CHECK_THROWS_AS(NoiseSchedule{s}, std::invalid_argument);

  ScheduleSpec a;
  a.kind = ScheduleKind::VE;
  a.form = "anchors";
  a.T = 2.0;
  a.t_n = 0.5;
  a.anchors = {{0.0, 0.0}, {1.0, 0.5}, {2.0, 0.4}};  // non-monotone sigma
  CHECK_THROWS_AS(NoiseSchedule{a}, std::invalid_argument);

  ScheduleSpec b;
  b.t_n = 5.0;  // outside (0, T)
  CHECK_THROWS_AS(NoiseSchedule{b}, std::invalid_argument);
}

TEST_CASE("forward_noise closed forms") {
  const NoiseSchedule ve = NoiseSchedule::identity_ve(3.0, 0.5);
  Eigen::VectorXd x(1), z(1);
  x << 1.0;
  z << 1.0;

  CHECK(ve.forward_noise(x, 1.5, 1.5, z) == x);  // zero added variance
  CHECK(ve.forward_noise(x, 1.0, 2.0, z)[0] == doctest::Approx(1.0 + std::sqrt(3.0)).epsilon(1e-12));
  CHECK_THROWS_AS(ve.forward_noise(x, 2.0, 1.0, z), std::domain_error);

  // VP coefficients at the named anchor levels: x coefficient sqrt(0.2775/0.894375).
  const NoiseSchedule vp = NoiseSchedule::paper_vp(100.0);
  Eigen::VectorXd z0 = Eigen::VectorXd::Zero(1);
  const double got = vp.forward_noise(x, 100.0, 500.0, z0)[0];
  CHECK(got == doctest::Approx(0.55702112768514537).epsilon(1e-12));
}

TEST_CASE("two-step noising matches one-step in distribution") {
  for (const NoiseSchedule& sched :
       {NoiseSchedule::identity_ve(3.0, 0.5), NoiseSchedule::paper_vp(100.0)}) {
    const double t = sched.kind() == ScheduleKind::VE ? 2.0 : 500.0;
    const double x0 = 0.7;
    const int n = 100000;
    SplitRng rng(99);
    double s1 = 0.0, q1 = 0.0, s2 = 0.0, q2 = 0.0;
    Eigen::VectorXd x(1);
    x << x0;
    for (int i = 0; i < n; ++i) {
      SplitRng s = rng.split(i);
      const double a = sched.forward_noise(x, 0.0, t, s.normal_vec(1))[0];
      const Eigen::VectorXd mid = sched.forward_noise(x, 0.0, sched.t_n(), s.normal_vec(1));
      const double b = sched.forward_noise(mid, sched.t_n(), t, s.normal_vec(1))[0];
      s1 += a;
      q1 += a * a;
      s2 += b;
      q2 += b * b;
    }
    const double m1 = s1 / n, v1 = q1 / n - m1 * m1;
    const double m2 = s2 / n, v2 = q2 / n - m2 * m2;
    const double se = std::sqrt(v1 / n);
    CHECK(std::abs(m1 - m2) < 3.0 * se * std::sqrt(2.0));
    CHECK(std::abs(v1 - v2) / v1 < 0.01);
  }
}

TEST_CASE("bridge coefficients: closed-form values") {
  // VE with sigma_t = 2, sigma_tn = 1.
  const NoiseSchedule ve = NoiseSchedule::identity_ve(3.0, 1.0);
  {
    const auto [a, b] = ve.bridge_coefficients(2.0);
    CHECK(a == doctest::Approx(4.0 / 3.0).epsilon(1e-14));
    CHECK(b == doctest::Approx(-1.0 / 3.0).epsilon(1e-14));
    const auto [ch, cx] = ve.denoiser_target_coeffs(2.0);
    CHECK(ch == doctest::Approx(0.75).epsilon(1e-14));
    CHECK(cx == doctest::Approx(0.25).epsilon(1e-14));
  }
  // Near-clean limit: sigma_tn = 1e-8.
  const NoiseSchedule lim = NoiseSchedule::identity_ve(3.0, 1e-8, 1e-30);
  {
    const auto [a, b] = lim.bridge_coefficients(2.0);
    CHECK(a == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(b) < 1e-14);
  }
  // VP at the named anchor levels.
  const NoiseSchedule vp = NoiseSchedule::paper_vp(100.0);
  {
    const auto [a, b] = vp.bridge_coefficients(500.0);
    CHECK(a == doctest::Approx(1.1076447846606213).epsilon(1e-12));
    CHECK(b == doctest::Approx(-0.090198859383592344).epsilon(1e-12));
    const auto [ch, cx] = vp.denoiser_target_coeffs(500.0);
    CHECK(ch == doctest::Approx(0.9028165110770568).epsilon(1e-12));
    CHECK(cx == doctest::Approx(0.081433019531824886).epsilon(1e-12));
  }
}

TEST_CASE("bridge domain errors and the near-singular guard") {
  const NoiseSchedule ve = NoiseSchedule::identity_ve(3.0, 1.0);
  CHECK_THROWS_AS(ve.bridge_coefficients(1.0), std::domain_error);
  CHECK_THROWS_AS(ve.bridge_coefficients(0.5), std::domain_error);
  CHECK_THROWS_AS(ve.denoiser_target_coeffs(1.0), std::domain_error);
  // Just above t_n but under the guard.
  CHECK_THROWS_AS(ve.bridge_coefficients(1.0 + 1e-14), std::domain_error);
  const double t_lo = ve.min_ambient_time();
  CHECK(ve.sigma(t_lo) * ve.sigma(t_lo) - 1.0 == doctest::Approx(ve.guard()).epsilon(1e-3));
  CHECK_NOTHROW(ve.bridge_coefficients(t_lo * 1.0000001));
}

TEST_CASE("duality of bridge and target coefficients") {
  SplitRng rng(17);
  for (const NoiseSchedule& sched :
       {NoiseSchedule::identity_ve(3.0, 0.5), NoiseSchedule::paper_vp(100.0)}) {
    const double t_lo = sched.min_ambient_time();
    for (int i = 0; i < 50; ++i) {
      const double t = t_lo + (sched.T() - t_lo) * rng.uniform();
      const auto [a, b] = sched.bridge_coefficients(t);
      const auto [ch, cx] = sched.denoiser_target_coeffs(t);
      CHECK(ch == doctest::Approx(1.0 / a).epsilon(1e-12));
      CHECK(cx == doctest::Approx(-b / a).epsilon(1e-12));
      if (sched.kind() == ScheduleKind::VE)
        CHECK(ch + cx == doctest::Approx(1.0).epsilon(1e-13));
    }
  }
}

TEST_CASE("bridge consistency on the single standard Gaussian") {
  // Closed forms: VE E[X0|x] = x/(1+s^2), E[Xtn|x] = (1+sn^2)/(1+s^2) x;
  // VP with alpha^2 = 1 - s^2: E[X0|x] = a x / (a^2 + s^2) = a x,
  // E[Xtn|x] = (a/an) (an^2 + sn^2) x / (a^2/an^2 ... ), worked via the
  // rescaled coordinate below.
  SplitRng rng(3);
  const NoiseSchedule ve = NoiseSchedule::identity_ve(3.0, 0.5);
  for (int i = 0; i < 40; ++i) {
    const double t = ve.min_ambient_time() + (3.0 - ve.min_ambient_time()) * rng.uniform();
    const double x = 4.0 * (rng.uniform() - 0.5);
    const double s2 = t * t, sn2 = 0.25;
    const double e0 = x / (1.0 + s2);
    const double en = (1.0 + sn2) / (1.0 + s2) * x;
    const auto [a, b] = ve.bridge_coefficients(t);
    CHECK(a * en + b * x == doctest::Approx(e0).epsilon(1e-12));
  }
  const NoiseSchedule vp = NoiseSchedule::paper_vp(100.0);
  for (int i = 0; i < 40; ++i) {
    const double t = vp.min_ambient_time() + (1000.0 - vp.min_ambient_time()) * rng.uniform();
    const double x = 2.0 * (rng.uniform() - 0.5);
    const double s = vp.sigma(t), al = vp.alpha(t);
    const double sn = vp.sigma_n(), an = vp.alpha(vp.t_n());
    const double e0 = al * x;  // prior N(0,1): posterior mean = alpha x / (alpha^2 + s^2), and alpha^2 + s^2 = 1
    // Xtn = an X0 + sn Z; X_t = (al/an) Xtn + s' Z. Var(Xtn) = 1 => E[Xtn|x] by
    // linear-Gaussian regression: cov(Xtn, Xt)/var(Xt) * x = (al/an)*1 / 1 * ... with
    // var(Xt) = 1: E[Xtn|Xt=x] = cov * x = (al/an)(an^2 + sn^2) x = (al/an) x.
    const double en = (al / an) * x;
    const auto [a, b] = vp.bridge_coefficients(t);
    CHECK(a * en + b * x == doctest::Approx(e0).epsilon(1e-12));
  }
}
