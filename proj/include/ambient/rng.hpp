#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>

namespace ambient {

/// Counter-based generator with explicit stream splitting.
///
/// Output k of a stream is splitmix64(key + k * gamma); split(tag) derives
/// an independent child key. Every consumer owns its own stream, so results
/// do not depend on evaluation order across batch elements or workers.
class SplitRng {
 public:
  explicit SplitRng(std::uint64_t seed) : key_(mix(seed ^ 0x9e3779b97f4a7c15ull)) {}

  SplitRng split(std::uint64_t stream) const {
    return SplitRng(FromKey{}, mix(key_ ^ mix(stream + 0xbf58476d1ce4e5b9ull)));
  }

  std::uint64_t next_u64() { return mix(key_ + (++counter_) * 0x9e3779b97f4a7c15ull); }

  /// Uniform draw in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller; consumes exactly two counter values.
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  Eigen::VectorXd normal_vec(Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

  std::uint64_t key() const { return key_; }

 private:
  struct FromKey {};
  SplitRng(FromKey, std::uint64_t key) : key_(key) {}

  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ull;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebull;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Stream tags used by the trainer and losses to derive child streams.
namespace stream {
inline constexpr std::uint64_t kNetInit = 0x11;
inline constexpr std::uint64_t kBatch = 0x22;
inline constexpr std::uint64_t kLoss = 0x33;
inline constexpr std::uint64_t kEval = 0x44;
inline constexpr std::uint64_t kData = 0x55;
inline constexpr std::uint64_t kAmbient = 0x66;
inline constexpr std::uint64_t kConsistency = 0x77;
}  // namespace stream

}  // namespace ambient
