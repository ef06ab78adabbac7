#pragma once

#include <Eigen/Dense>

#include <string>
#include <utility>
#include <vector>

namespace ambient {

enum class ScheduleKind { VE, VP };

/// Serializable description of a noise schedule; the run-config and the
/// dataset/checkpoint containers store this form.
struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::VE;
  std::string form = "identity";  // "identity", "paper-vp-anchors", "anchors"
  double T = 3.0;
  double t_n = 0.5;
  double guard = 1e-10;
  std::vector<std::pair<double, double>> anchors;  // (t, sigma), used when form == "anchors"
};

/// Diffusion noise schedule sigma(t) on [0, T] with the nature level t_n,
/// plus the closed-form algebra built on it: forward noising between levels,
/// the conditional-expectation bridge E[X0|Xt] = a E[Xtn|Xt] + b x_t, and the
/// inverted regression weights used by the ambient objective.
///
/// VE: X_t = X_0 + sigma_t Z.  VP: X_t = sqrt(1 - sigma_t^2) X_0 + sigma_t Z.
class NoiseSchedule {
 public:
  explicit NoiseSchedule(const ScheduleSpec& spec);

  static NoiseSchedule identity_ve(double T = 3.0, double t_n = 0.5, double guard = 1e-10);
  static NoiseSchedule paper_vp(double t_n = 500.0, double guard = 1e-10);

  ScheduleKind kind() const { return spec_.kind; }
  double T() const { return spec_.T; }
  double t_n() const { return spec_.t_n; }
  double guard() const { return spec_.guard; }
  const ScheduleSpec& spec() const { return spec_; }

  /// sigma(t). Errors if t is outside [0, T].
  double sigma(double t) const;

  /// Scale alpha(t): 1 for VE, sqrt(1 - sigma^2) for VP.
  double alpha(double t) const;

  double sigma_n() const { return sigma(spec_.t_n); }

  /// Inverse of sigma on [0, T].
  double time_of_sigma(double s) const;

  /// Noise x from level t_src up to t_dst >= t_src using the given standard
  /// normal draw. t_src = 0 is the direct forward process from X_0.
  Eigen::VectorXd forward_noise(const Eigen::VectorXd& x_src, double t_src, double t_dst,
                                const Eigen::VectorXd& noise) const;

  /// (a, b) with E[X0|Xt=x] = a E[Xtn|Xt=x] + b x. Requires t > t_n and
  /// sigma_t^2 - sigma_tn^2 >= guard.
  std::pair<double, double> bridge_coefficients(double t) const;

  /// (c_h, c_x): weights of the ambient regression target
  /// c_h h(x_t, t) + c_x x_t, the inversion of the bridge (c_h = 1/a,
  /// c_x = -b/a). Same domain restrictions as bridge_coefficients.
  std::pair<double, double> denoiser_target_coeffs(double t) const;

  /// Smallest t admissible for the ambient objective, i.e. with
  /// sigma(t)^2 >= sigma_tn^2 + guard. Errors if none exists below T.
  double min_ambient_time() const;

 private:
  void check_time(double t) const;
  double check_bridge_time(double t) const;  // returns sigma_t^2 - sigma_tn^2

  ScheduleSpec spec_;
  std::vector<double> anchor_t_, anchor_s_;
};

}  // namespace ambient
