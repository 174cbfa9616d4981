#pragma once

#include "gcp/kruskal.hpp"

namespace gcp {

/// Match quality of an estimated model against the generating one: the best
/// assignment of estimated columns to true columns, scoring each pair by the
/// product over modes of the column cosines, averaged over rank. Exhaustive
/// assignment search up to rank 8, greedy best-pair matching above that.
/// Zero-norm columns score 0 against everything.
double cosine_similarity_score(const KruskalModel& estimated, const KruskalModel& truth);

/// The conventional recovery cutoff for synthetic experiments.
inline constexpr double kRecoveryThreshold = 0.9;

inline bool recovered(const KruskalModel& estimated, const KruskalModel& truth) {
  return cosine_similarity_score(estimated, truth) >= kRecoveryThreshold;
}

}  // namespace gcp
