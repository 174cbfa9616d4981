#pragma once

#include <cstdint>
#include <string_view>

namespace gcp {

/// Splittable counter-based random stream.
///
/// A stream is a 64-bit key plus a draw counter; each output is a strong
/// 64-bit hash of (key, counter), so streams can be copied, forked with
/// split(), and replayed exactly. split() derives a child key from the
/// parent key and a label, which lets one user-facing seed drive every
/// stochastic component of a run without the components interfering.
class RngStream {
public:
  explicit RngStream(std::uint64_t seed);

  /// Independent child stream; deterministic in (parent key, label).
  RngStream split(std::uint64_t label) const;
  RngStream split(std::string_view label) const;

  std::uint64_t next_u64();

  /// Uniform on [0, 1) with 53 random bits.
  double next_double();

  /// Uniform on {0, 1, ..., n-1}; n must be positive. Unbiased (rejection).
  std::uint64_t next_below(std::uint64_t n);
  unsigned __int128 next_below_128(unsigned __int128 n);

  double next_normal(double mean, double stddev);

  /// Exponential with the given mean (Gamma with shape 1, scale mean).
  double next_exponential(double mean);

  /// Number of successes in n Bernoulli(p) trials.
  std::int64_t next_binomial(std::int64_t n, double p);

private:
  RngStream(std::uint64_t key, int) : key_(key) {}

  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  bool has_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

}  // namespace gcp
