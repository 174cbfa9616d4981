#include "gcp/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace gcp {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

// SplitMix64 finalizer (Steele, Lea, Flood / Stafford mix13).
std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// FNV-1a over a label string, used to turn labels into split keys.
std::uint64_t hash_label(std::string_view label) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace

RngStream::RngStream(std::uint64_t seed) : key_(mix64(seed + kGolden)) {}

RngStream RngStream::split(std::uint64_t label) const {
  return RngStream(mix64(key_ ^ mix64(label + kGolden)), 0);
}

RngStream RngStream::split(std::string_view label) const {
  return split(hash_label(label));
}

std::uint64_t RngStream::next_u64() {
  return mix64(key_ + kGolden * ++counter_);
}

double RngStream::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t RngStream::next_below(std::uint64_t n) {
  if (n == 0)
    throw std::invalid_argument("RngStream::next_below: n must be positive");
  // Rejection below the largest multiple of n to avoid modulo bias.
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const std::uint64_t r = next_u64();
    if (r >= threshold)
      return r % n;
  }
}

unsigned __int128 RngStream::next_below_128(unsigned __int128 n) {
  if (n == 0)
    throw std::invalid_argument("RngStream::next_below_128: n must be positive");
  if (n <= std::numeric_limits<std::uint64_t>::max())
    return next_below(static_cast<std::uint64_t>(n));
  const unsigned __int128 threshold = (0 - n) % n;
  for (;;) {
    unsigned __int128 r = (static_cast<unsigned __int128>(next_u64()) << 64) | next_u64();
    if (r >= threshold)
      return r % n;
  }
}

double RngStream::next_normal(double mean, double stddev) {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return mean + stddev * cached_normal_;
  }
  double u1;
  do {
    u1 = next_double();
  } while (u1 <= 0.0);
  const double u2 = next_double();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_normal_ = radius * std::sin(angle);
  has_cached_normal_ = true;
  return mean + stddev * radius * std::cos(angle);
}

double RngStream::next_exponential(double mean) {
  // Inversion; 1 - u is in (0, 1] so the log is finite.
  return -mean * std::log1p(-next_double());
}

std::int64_t RngStream::next_binomial(std::int64_t n, double p) {
  if (n < 0)
    throw std::invalid_argument("RngStream::next_binomial: n must be nonnegative");
  if (n == 0 || p <= 0.0)
    return 0;
  if (p >= 1.0)
    return n;
  if (p > 0.5)
    return n - next_binomial(n, 1.0 - p);
  // Exact sampling by geometric skips between successes; O(n*p) draws.
  // Fall back to a rounded normal approximation when the expected count
  // is too large for the skip loop (never hit at the scales we generate).
  const double expected = static_cast<double>(n) * p;
  if (expected > 5e7) {
    const double sd = std::sqrt(expected * (1.0 - p));
    double draw = std::round(next_normal(expected, sd));
    if (draw < 0.0) draw = 0.0;
    if (draw > static_cast<double>(n)) draw = static_cast<double>(n);
    return static_cast<std::int64_t>(draw);
  }
  const double log_q = std::log1p(-p);
  std::int64_t count = 0;
  double position = 0.0;
  for (;;) {
    double u;
    do {
      u = next_double();
    } while (u <= 0.0);
    position += std::floor(std::log(u) / log_q) + 1.0;
    if (position > static_cast<double>(n))
      return count;
    ++count;
  }
}

}  // namespace gcp
