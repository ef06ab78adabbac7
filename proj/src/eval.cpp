#include "ambient/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace ambient {

DenoiserMseReport denoiser_mse_grid(const DenoiserFn& h, const GaussianMixture& gm,
                                    const NoiseSchedule& sched, std::vector<double> sigma_list,
                                    int n_points, SplitRng rng) {
  if (n_points < 1) throw std::invalid_argument("denoiser_mse_grid: n_points must be >= 1");
  std::sort(sigma_list.begin(), sigma_list.end());
  DenoiserMseReport rep;
  for (std::size_t si = 0; si < sigma_list.size(); ++si) {
    const double s = sigma_list[si];
    const double t = sched.time_of_sigma(s);
    SplitRng level = rng.split(si);
    const Eigen::MatrixXd x0 = sample_prior(gm, n_points, level.split(0));
    SplitRng noise = level.split(1);
    double err = 0.0, denom = 0.0;
    for (int i = 0; i < n_points; ++i) {
      const Eigen::VectorXd xt =
          sched.forward_noise(x0.row(i).transpose(), 0.0, t, noise.split(i).normal_vec(gm.dim));
      const Eigen::VectorXd pm = posterior_mean(gm, xt, t, sched);
      err += (h(xt, t) - pm).squaredNorm();
      denom += pm.squaredNorm();
    }
    MseRow row;
    row.sigma_eval = s;
    row.absolute_mse = err / n_points;
    row.relative_mse = denom > 0.0 ? err / denom : 0.0;
    row.n_points = n_points;
    rep.rows.push_back(row);
  }
  return rep;
}

namespace {

// Exact integral over u in (0,1) of (Fa^-1(u) - Fb^-1(u))^2 for empirical
// distributions given as sorted vectors.
double w2sq_sorted(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t na = a.size(), nb = b.size();
  if (na == nb) {
    double acc = 0.0;
    for (std::size_t i = 0; i < na; ++i) {
      const double d = a[i] - b[i];
      acc += d * d;
    }
    return acc / static_cast<double>(na);
  }
  double acc = 0.0, u = 0.0;
  std::size_t i = 0, j = 0;
  while (i < na && j < nb) {
    const double ua = static_cast<double>(i + 1) / na;
    const double ub = static_cast<double>(j + 1) / nb;
    const double next = std::min(ua, ub);
    const double d = a[i] - b[j];
    acc += d * d * (next - u);
    u = next;
    if (ua <= ub) ++i;
    if (ub <= ua) ++j;
  }
  return acc;
}

}  // namespace

double sliced_wasserstein2(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, int n_projections,
                           SplitRng rng) {
  if (A.rows() == 0 || B.rows() == 0) throw std::invalid_argument("sliced_w2: empty sample set");
  if (A.cols() != B.cols()) throw std::invalid_argument("sliced_w2: dimension mismatch");
  if (n_projections < 1) throw std::invalid_argument("sliced_w2: need projections");
  const Eigen::Index d = A.cols();
  double acc = 0.0;
  std::vector<double> pa(A.rows()), pb(B.rows());
  for (int p = 0; p < n_projections; ++p) {
    SplitRng s = rng.split(p);
    Eigen::VectorXd dir = s.normal_vec(d);
    const double nrm = dir.norm();
    dir = nrm > 0.0 ? Eigen::VectorXd(dir / nrm) : Eigen::VectorXd::Unit(d, 0);
    Eigen::Map<Eigen::VectorXd>(pa.data(), A.rows()) = A * dir;
    Eigen::Map<Eigen::VectorXd>(pb.data(), B.rows()) = B * dir;
    std::sort(pa.begin(), pa.end());
    std::sort(pb.begin(), pb.end());
    acc += w2sq_sorted(pa, pb);
  }
  return acc / n_projections;
}

SimilarityReport memorization_attack(const DenoiserFn& h, const Eigen::MatrixXd& points,
                                     double t_src, const NoiseSchedule& sched, double sigma_attack,
                                     int n_per_point, const SamplerConfig& scfg, SplitRng rng) {
  if (points.rows() == 0) throw std::invalid_argument("attack: empty dataset");
  if (!(sigma_attack > sched.sigma(t_src)))
    throw std::invalid_argument("attack: sigma_attack must exceed the dataset noise level");
  const double t_att = sched.time_of_sigma(sigma_attack);
  const Eigen::Index dim = points.cols();

  SimilarityReport rep;
  rep.sigma_attack = sigma_attack;
  rep.bin_edges.resize(101);
  for (int i = 0; i <= 100; ++i) rep.bin_edges[i] = -1.0 + 0.02 * i;
  rep.counts.assign(100, 0);

  const Eigen::VectorXd point_norms = points.rowwise().norm();
  long above90 = 0, above95 = 0, above99 = 0;
  for (Eigen::Index p = 0; p < points.rows(); ++p) {
    SplitRng prng = rng.split(p);
    for (int k = 0; k < n_per_point; ++k) {
      SplitRng draw = prng.split(k);
      const Eigen::VectorXd x_att = sched.forward_noise(points.row(p).transpose(), t_src, t_att,
                                                        draw.normal_vec(dim));
      const Eigen::VectorXd rec = posterior_sample(h, x_att, t_att, sched, scfg, draw.split(1));
      const double rn = rec.norm();
      double best = -1.0;
      for (Eigen::Index q = 0; q < points.rows(); ++q) {
        const double denom = rn * point_norms[q];
        const double cs = denom > 0.0 ? rec.dot(points.row(q).transpose()) / denom : 0.0;
        best = std::max(best, cs);
      }
      int bin = static_cast<int>((best + 1.0) / 0.02);
      bin = std::clamp(bin, 0, 99);
      ++rep.counts[bin];
      if (best > 0.90) ++above90;
      if (best > 0.95) ++above95;
      if (best > 0.99) ++above99;
      ++rep.n_samples;
    }
  }
  rep.frac_above_090 = static_cast<double>(above90) / rep.n_samples;
  rep.frac_above_095 = static_cast<double>(above95) / rep.n_samples;
  rep.frac_above_099 = static_cast<double>(above99) / rep.n_samples;
  return rep;
}

double conservativeness_diagnostic(const DiffDenoiser& h, const NoiseSchedule& sched, double t,
                                   int n_probes, SplitRng rng) {
  if (n_probes < 1) throw std::invalid_argument("conservativeness: n_probes must be >= 1");
  const double s = sched.sigma(t);
  if (!(s > 0.0)) throw std::domain_error("conservativeness: requires sigma_t > 0");
  const double spread = std::sqrt(1.0 + s * s);
  double acc = 0.0;
  bool dim_checked = false;
  for (int i = 0; i < n_probes; ++i) {
    SplitRng probe = rng.split(i);
    const Eigen::VectorXd x = spread * probe.normal_vec(2);
    const Eigen::VectorXd j0 = h.jvp(x, t, Eigen::Vector2d(1.0, 0.0));
    const Eigen::VectorXd j1 = h.jvp(x, t, Eigen::Vector2d(0.0, 1.0));
    if (!dim_checked) {
      if (j0.size() != 2) throw std::invalid_argument("conservativeness: dim must be 2");
      dim_checked = true;
    }
    // Antisymmetric part of the Jacobian of (h - x) / sigma^2; the identity
    // part of h cancels in the off-diagonal difference.
    acc += std::abs(0.5 * (j0[1] - j1[0])) / (s * s);
  }
  return acc / n_probes;
}

void write_mse_report(const DenoiserMseReport& rep, const std::string& json_path,
                      const std::string& csv_path) {
  if (!json_path.empty()) {
    nlohmann::json j;
    j["model_id"] = rep.model_id;
    j["oracle_id"] = rep.oracle_id;
    j["rows"] = nlohmann::json::array();
    for (const auto& r : rep.rows)
      j["rows"].push_back({{"sigma_eval", r.sigma_eval},
                           {"relative_mse", r.relative_mse},
                           {"absolute_mse", r.absolute_mse},
                           {"n_points", r.n_points}});
    std::ofstream(json_path) << j.dump(2) << '\n';
  }
  if (!csv_path.empty()) {
    std::ofstream out(csv_path);
    out << "sigma_eval,relative_mse,absolute_mse,n_points\n";
    for (const auto& r : rep.rows)
      out << r.sigma_eval << ',' << r.relative_mse << ',' << r.absolute_mse << ',' << r.n_points
          << '\n';
  }
}

void write_similarity_report(const SimilarityReport& rep, const std::string& json_path,
                             const std::string& csv_path) {
  if (!json_path.empty()) {
    nlohmann::json j;
    j["model_id"] = rep.model_id;
    j["sigma_attack"] = rep.sigma_attack;
    j["n_samples"] = rep.n_samples;
    j["frac_above_0.90"] = rep.frac_above_090;
    j["frac_above_0.95"] = rep.frac_above_095;
    j["frac_above_0.99"] = rep.frac_above_099;
    j["bin_edges"] = rep.bin_edges;
    j["counts"] = rep.counts;
    std::ofstream(json_path) << j.dump(2) << '\n';
  }
  if (!csv_path.empty()) {
    std::ofstream out(csv_path);
    out << "bin_lo,bin_hi,count\n";
    for (std::size_t i = 0; i < rep.counts.size(); ++i)
      out << rep.bin_edges[i] << ',' << rep.bin_edges[i + 1] << ',' << rep.counts[i] << '\n';
  }
}

}  // namespace ambient
