#include "gcp/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace gcp {

namespace {

double column_cosine(const Matrix& a, const Matrix& b, std::int64_t col_a, std::int64_t col_b) {
  const double na = a.col(col_a).norm();
  const double nb = b.col(col_b).norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.col(col_a).dot(b.col(col_b)) / (na * nb);
}

}  // namespace

double cosine_similarity_score(const KruskalModel& estimated, const KruskalModel& truth) {
  if (!(estimated.shape() == truth.shape())) {
    throw std::invalid_argument("similarity score: shape mismatch");
  }
  if (estimated.rank() != truth.rank()) {
    throw std::invalid_argument("similarity score: rank mismatch");
  }
  const std::int64_t r = truth.rank();
  const int d = truth.ndims();

  // pair(j, l): product over modes of cos(truth column j, estimated column l).
  Matrix pair = Matrix::Ones(r, r);
  for (int k = 0; k < d; ++k) {
    for (std::int64_t j = 0; j < r; ++j) {
      for (std::int64_t l = 0; l < r; ++l) {
        pair(j, l) *= column_cosine(truth.factor(k), estimated.factor(k), j, l);
      }
    }
  }

  double best = 0.0;
  if (r <= 8) {
    std::vector<std::int64_t> perm(static_cast<std::size_t>(r));
    std::iota(perm.begin(), perm.end(), 0);
    bool first = true;
    do {
      double sum = 0.0;
      for (std::int64_t j = 0; j < r; ++j) sum += pair(j, perm[static_cast<std::size_t>(j)]);
      if (first || sum > best) best = sum;
      first = false;
    } while (std::next_permutation(perm.begin(), perm.end()));
  } else {
    std::vector<bool> row_used(static_cast<std::size_t>(r), false);
    std::vector<bool> col_used(static_cast<std::size_t>(r), false);
    for (std::int64_t step = 0; step < r; ++step) {
      double top = -std::numeric_limits<double>::infinity();
      std::int64_t top_j = -1;
      std::int64_t top_l = -1;
      for (std::int64_t j = 0; j < r; ++j) {
        if (row_used[static_cast<std::size_t>(j)]) continue;
        for (std::int64_t l = 0; l < r; ++l) {
          if (col_used[static_cast<std::size_t>(l)]) continue;
          if (pair(j, l) > top) {
            top = pair(j, l);
            top_j = j;
            top_l = l;
          }
        }
      }
      row_used[static_cast<std::size_t>(top_j)] = true;
      col_used[static_cast<std::size_t>(top_l)] = true;
      best += top;
    }
  }
  return best / static_cast<double>(r);
}

}  // namespace gcp
