#include "ambient/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ambient {

namespace {

std::vector<std::pair<double, double>> paper_vp_anchors() {
  return {{0.0, 0.0}, {100.0, 0.325}, {500.0, 0.850}, {800.0, 0.981}, {1000.0, 0.9999}};
}

}  // namespace

NoiseSchedule::NoiseSchedule(const ScheduleSpec& spec) : spec_(spec) {
  if (!(spec_.T > 0.0)) throw std::invalid_argument("schedule: T must be positive");
  if (spec_.guard < 0.0) throw std::invalid_argument("schedule: guard must be nonnegative");

  if (spec_.form == "identity") {
    if (spec_.kind != ScheduleKind::VE)
      throw std::invalid_argument("schedule: identity form is VE-only");
  } else {
    auto anchors = spec_.anchors;
    if (spec_.form == "paper-vp-anchors") {
      anchors = paper_vp_anchors();
      spec_.T = anchors.back().first;
      spec_.anchors = anchors;
    } else if (spec_.form != "anchors") {
      throw std::invalid_argument("schedule: unknown form '" + spec_.form + "'");
    }
    if (anchors.size() < 2) throw std::invalid_argument("schedule: need at least two anchors");
    if (anchors.front().first != 0.0 || anchors.front().second != 0.0)
      throw std::invalid_argument("schedule: anchors must start at (0, 0)");
    for (std::size_t i = 1; i < anchors.size(); ++i) {
      if (!(anchors[i].first > anchors[i - 1].first && anchors[i].second > anchors[i - 1].second))
        throw std::invalid_argument("schedule: anchors must be strictly increasing in t and sigma");
    }
    if (anchors.back().first != spec_.T)
      throw std::invalid_argument("schedule: last anchor must sit at t = T");
    if (spec_.kind == ScheduleKind::VP && anchors.back().second >= 1.0)
      throw std::invalid_argument("schedule: VP requires sigma(T) < 1");
    anchor_t_.reserve(anchors.size());
    anchor_s_.reserve(anchors.size());
    for (const auto& [t, s] : anchors) {
      anchor_t_.push_back(t);
      anchor_s_.push_back(s);
    }
  }
  if (!(spec_.t_n > 0.0 && spec_.t_n < spec_.T))
    throw std::invalid_argument("schedule: t_n must lie strictly inside (0, T)");
}

NoiseSchedule NoiseSchedule::identity_ve(double T, double t_n, double guard) {
  ScheduleSpec s;
  s.kind = ScheduleKind::VE;
  s.form = "identity";
  s.T = T;
  s.t_n = t_n;
  s.guard = guard;
  return NoiseSchedule(s);
}

NoiseSchedule NoiseSchedule::paper_vp(double t_n, double guard) {
  ScheduleSpec s;
  s.kind = ScheduleKind::VP;
  s.form = "paper-vp-anchors";
  s.T = 1000.0;
  s.t_n = t_n;
  s.guard = guard;
  return NoiseSchedule(s);
}

void NoiseSchedule::check_time(double t) const {
  if (!(t >= 0.0 && t <= spec_.T)) throw std::domain_error("schedule: t outside [0, T]");
}

double NoiseSchedule::sigma(double t) const {
  check_time(t);
  if (spec_.form == "identity") return t;
  const auto it = std::upper_bound(anchor_t_.begin(), anchor_t_.end(), t);
  if (it == anchor_t_.begin()) return anchor_s_.front();
  const std::size_t hi = std::min<std::size_t>(it - anchor_t_.begin(), anchor_t_.size() - 1);
  const std::size_t lo = hi - 1;
  const double w = (t - anchor_t_[lo]) / (anchor_t_[hi] - anchor_t_[lo]);
  return anchor_s_[lo] + w * (anchor_s_[hi] - anchor_s_[lo]);
}

double NoiseSchedule::alpha(double t) const {
  if (spec_.kind == ScheduleKind::VE) return 1.0;
  const double s = sigma(t);
  return std::sqrt(1.0 - s * s);
}

double NoiseSchedule::time_of_sigma(double s) const {
  if (spec_.form == "identity") {
    if (!(s >= 0.0 && s <= spec_.T)) throw std::domain_error("schedule: sigma out of range");
    return s;
  }
  if (!(s >= anchor_s_.front() && s <= anchor_s_.back()))
    throw std::domain_error("schedule: sigma out of range");
  const auto it = std::upper_bound(anchor_s_.begin(), anchor_s_.end(), s);
  if (it == anchor_s_.begin()) return anchor_t_.front();
  const std::size_t hi = std::min<std::size_t>(it - anchor_s_.begin(), anchor_s_.size() - 1);
  const std::size_t lo = hi - 1;
  const double w = (s - anchor_s_[lo]) / (anchor_s_[hi] - anchor_s_[lo]);
  return anchor_t_[lo] + w * (anchor_t_[hi] - anchor_t_[lo]);
}

Eigen::VectorXd NoiseSchedule::forward_noise(const Eigen::VectorXd& x_src, double t_src,
                                             double t_dst, const Eigen::VectorXd& noise) const {
  if (t_dst < t_src) throw std::domain_error("forward_noise: t_dst < t_src");
  if (noise.size() != x_src.size())
    throw std::invalid_argument("forward_noise: noise dimension mismatch");
  const double ss = sigma(t_src), sd = sigma(t_dst);
  const double dvar = sd * sd - ss * ss;
  if (spec_.kind == ScheduleKind::VE) {
    return x_src + std::sqrt(std::max(dvar, 0.0)) * noise;
  }
  const double denom = 1.0 - ss * ss;
  const double a = std::sqrt((1.0 - sd * sd) / denom);
  const double b = std::sqrt(std::max(dvar, 0.0) / denom);
  return a * x_src + b * noise;
}

double NoiseSchedule::check_bridge_time(double t) const {
  if (!(t > spec_.t_n)) throw std::domain_error("schedule: bridge requires t > t_n");
  const double st = sigma(t), sn = sigma_n();
  const double d = st * st - sn * sn;
  if (d < spec_.guard)
    throw std::domain_error("schedule: sigma_t^2 - sigma_tn^2 below near-singular guard");
  return d;
}

std::pair<double, double> NoiseSchedule::bridge_coefficients(double t) const {
  const double d = check_bridge_time(t);
  const double st2 = sigma(t) * sigma(t);
  const double sn2 = sigma_n() * sigma_n();
  if (spec_.kind == ScheduleKind::VE) return {st2 / d, -sn2 / d};
  const double a = st2 * std::sqrt(1.0 - sn2) / d;
  const double b = -sn2 * std::sqrt(1.0 - st2) / d;
  return {a, b};
}

std::pair<double, double> NoiseSchedule::denoiser_target_coeffs(double t) const {
  const double d = check_bridge_time(t);
  const double st2 = sigma(t) * sigma(t);
  const double sn2 = sigma_n() * sigma_n();
  if (spec_.kind == ScheduleKind::VE) return {d / st2, sn2 / st2};
  const double c_h = d / (st2 * std::sqrt(1.0 - sn2));
  const double c_x = (sn2 / st2) * std::sqrt((1.0 - st2) / (1.0 - sn2));
  return {c_h, c_x};
}

double NoiseSchedule::min_ambient_time() const {
  const double sn = sigma_n();
  const double target = std::sqrt(sn * sn + spec_.guard);
  const double sT = sigma(spec_.T);
  if (target > sT) throw std::domain_error("schedule: no admissible t above the guard");
  double lo = spec_.t_n, hi = spec_.T;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (sigma(mid) < target)
      lo = mid;
    else
      hi = mid;
  }
  return hi;
}

}  // namespace ambient
