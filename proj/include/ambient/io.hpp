#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "ambient/net.hpp"
#include "ambient/schedule.hpp"

namespace ambient {

/// Realizations of X_tn together with the schedule that produced them.
struct NoisyDataset {
  ScheduleSpec schedule;
  Eigen::MatrixXd samples;  // count x dim
  std::uint64_t seed = 0;

  int dim() const { return static_cast<int>(samples.cols()); }
  std::int64_t count() const { return samples.rows(); }
};

struct CorruptFileError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Binary layout: magic "ATWD", u32 version, u32 dim, u64 count, u64 seed,
/// schedule descriptor block, then count*dim little-endian f64, row-major.
void save_dataset(const NoisyDataset& ds, const std::string& path);
NoisyDataset load_dataset(const std::string& path);

struct OptimizerState {
  Eigen::VectorXd m, v;
  std::int64_t step = 0;
};

struct Checkpoint {
  std::uint32_t version = 1;
  // architecture descriptor
  int dim = 1;
  std::vector<int> hidden;
  int embed_dim = 16;
  Activation activation = Activation::Silu;
  double sigma_data = 1.0;

  Eigen::VectorXd params;
  OptimizerState opt;
  std::uint64_t rng_seed = 0;
  std::int64_t step = 0;  // training step counter; doubles as the RNG stream position
  std::string config_echo;

  DenoiserNet make_net() const;
  static Checkpoint from_net(const DenoiserNet& net);
};

/// Binary container "ATWC" with an FNV-1a-64 content checksum; loaders verify
/// the checksum before constructing anything.
void save_checkpoint(const Checkpoint& c, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t seed = 0xcbf29ce484222325ull);

}  // namespace ambient
