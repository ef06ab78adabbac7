#pragma once

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <vector>

#include "ambient/mixture.hpp"
#include "ambient/rng.hpp"
#include "ambient/sampler.hpp"
#include "ambient/schedule.hpp"

namespace ambient {

struct MseRow {
  double sigma_eval = 0.0;
  double relative_mse = 0.0;
  double absolute_mse = 0.0;
  int n_points = 0;
};

struct DenoiserMseReport {
  std::vector<MseRow> rows;  // sorted by sigma_eval
  std::string model_id, oracle_id;
};

/// Restoration error against the exact posterior mean, on points drawn from
/// p_t (forward-noised fresh prior samples). relative_mse is
/// mean ||h - pm||^2 / mean ||pm||^2 per noise level.
DenoiserMseReport denoiser_mse_grid(const DenoiserFn& h, const GaussianMixture& gm,
                                    const NoiseSchedule& sched, std::vector<double> sigma_list,
                                    int n_points, SplitRng rng);

/// Mean over random unit projections of the squared 1-D Wasserstein-2
/// distance between the projected empirical distributions (sorted-quantile
/// form; exact for unequal sample counts). The square root of the returned
/// value is a pseudometric.
double sliced_wasserstein2(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, int n_projections,
                           SplitRng rng);

struct SimilarityReport {
  double sigma_attack = 0.0;
  std::vector<double> bin_edges;  // 101 edges over [-1, 1]
  std::vector<long> counts;      // 100 bins
  double frac_above_090 = 0.0, frac_above_095 = 0.0, frac_above_099 = 0.0;
  long n_samples = 0;
  std::string model_id;
};

/// Forward-noise each dataset point from t_src to the attack level, draw
/// posterior samples with the model, and histogram each reconstruction's
/// maximum cosine similarity over the dataset.
SimilarityReport memorization_attack(const DenoiserFn& h, const Eigen::MatrixXd& points,
                                     double t_src, const NoiseSchedule& sched, double sigma_attack,
                                     int n_per_point, const SamplerConfig& scfg, SplitRng rng);

/// Denoiser with a directional input derivative, for Jacobian diagnostics.
struct DiffDenoiser {
  DenoiserFn value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, double, const Eigen::VectorXd&)> jvp;
};

/// Mean absolute antisymmetric part of the input Jacobian of the residual
/// field (h(x,t) - x) / sigma_t^2, probed along the axis directions.
/// Planar (dim = 2) only; 0 for conservative fields.
double conservativeness_diagnostic(const DiffDenoiser& h, const NoiseSchedule& sched, double t,
                                   int n_probes, SplitRng rng);

void write_mse_report(const DenoiserMseReport& rep, const std::string& json_path,
                      const std::string& csv_path);
void write_similarity_report(const SimilarityReport& rep, const std::string& json_path,
                             const std::string& csv_path);

}  // namespace ambient
