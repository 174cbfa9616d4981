#include "gcp/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "gcp/rng.hpp"

namespace gcp {

namespace {

struct Index128Hash {
  std::size_t operator()(Index128 v) const {
    const std::uint64_t lo = static_cast<std::uint64_t>(v);
    const std::uint64_t hi = static_cast<std::uint64_t>(v >> 64);
    return std::hash<std::uint64_t>{}(lo ^ (hi * 0x9e3779b97f4a7c15ULL));
  }
};

}  // namespace

std::pair<DenseTensor, KruskalModel> gen_gamma_problem(const Shape& shape, std::int64_t rank,
                                                       RngStream& rng) {
  KruskalModel truth = KruskalModel::random_uniform(shape, rank, rng);
  DenseTensor data(shape);  // constructor enforces the dense size guard
  const int d = shape.ndims();
  MultiIndex idx(std::vector<std::int64_t>(static_cast<std::size_t>(d), 0));
  const Index128 total = shape.total();
  for (Index128 lin = 0; lin < total; ++lin) {
    data[lin] = rng.next_exponential(truth.entry(idx.coords()));
    for (int k = 0; k < d; ++k) {
      if (++idx[k] < shape.dim(k)) break;
      idx[k] = 0;
    }
  }
  return {std::move(data), std::move(truth)};
}

void BinaryProblemSpec::validate() const {
  if (rank < 2) {
    throw std::invalid_argument("binary problem: rank must be >= 2 (last column is noise)");
  }
  if (!(delta > 0.0 && delta < 0.5)) {
    throw std::invalid_argument("binary problem: delta must be in (0, 0.5)");
  }
  if (!(p_low > 0.0 && p_low < p_high && p_high < 1.0)) {
    throw std::invalid_argument("binary problem: need 0 < p_low < p_high < 1");
  }
  if (shape.total() > (Index128{1} << 62)) {
    throw std::invalid_argument("binary problem: tensor too large");
  }
}

std::pair<SparseTensor, KruskalModel> gen_binary_problem(const BinaryProblemSpec& spec,
                                                         RngStream& rng) {
  spec.validate();
  const Shape& shape = spec.shape;
  const int d = shape.ndims();
  const std::int64_t r = spec.rank;

  const double inv_d = 1.0 / static_cast<double>(d);
  const double high_entry = std::pow(spec.p_high / (1.0 - spec.p_high), inv_d);
  const double low_entry = std::pow(spec.p_low / (1.0 - spec.p_low), inv_d);

  KruskalModel truth(shape, r);
  for (int k = 0; k < d; ++k) {
    Matrix& f = truth.factor(k);
    for (Eigen::Index i = 0; i < f.rows(); ++i) {
      for (std::int64_t j = 0; j < r - 1; ++j) {
        if (rng.next_double() < spec.delta) {
          f(i, j) = std::max(0.0, rng.next_normal(high_entry, 0.5));
        }
      }
      f(i, r - 1) = low_entry;
    }
  }

  // Candidate structural positions: for each sparse column, the cartesian
  // product of the modes' positive supports; union over columns.
  std::vector<std::vector<std::int64_t>> support(static_cast<std::size_t>(d));
  std::unordered_set<Index128, Index128Hash> candidate_set;
  std::vector<MultiIndex> indices;
  std::vector<double> values;
  for (std::int64_t j = 0; j < r - 1; ++j) {
    Index128 column_total = 1;
    bool empty = false;
    for (int k = 0; k < d; ++k) {
      auto& sup = support[static_cast<std::size_t>(k)];
      sup.clear();
      const Matrix& f = truth.factor(k);
      for (Eigen::Index i = 0; i < f.rows(); ++i) {
        if (f(i, j) > 0.0) sup.push_back(i);
      }
      if (sup.empty()) empty = true;
      column_total *= static_cast<Index128>(std::max<std::size_t>(sup.size(), 1));
    }
    if (empty) continue;
    if (column_total > 100'000'000) {
      throw std::invalid_argument("binary problem: structural candidate set too large");
    }
    std::vector<std::size_t> at(static_cast<std::size_t>(d), 0);
    std::int64_t idx[Shape::kMaxModes];
    for (Index128 c = 0; c < column_total; ++c) {
      for (int k = 0; k < d; ++k) {
        idx[k] = support[static_cast<std::size_t>(k)][at[static_cast<std::size_t>(k)]];
      }
      const std::span<const std::int64_t> span(idx, static_cast<std::size_t>(d));
      const Index128 key = linear_index(span, shape);
      if (candidate_set.insert(key).second) {
        const double m = truth.entry(span);
        if (rng.next_double() < m / (1.0 + m)) {
          indices.emplace_back(span);
          values.push_back(1.0);
        }
      }
      for (int k = 0; k < d; ++k) {
        if (++at[static_cast<std::size_t>(k)] < support[static_cast<std::size_t>(k)].size()) {
          break;
        }
        at[static_cast<std::size_t>(k)] = 0;
      }
    }
  }

  // Noise: at every non-candidate position only the constant column
  // contributes, so P(one) = p_low exactly. Draw the count in bulk, then
  // place uniformly without replacement outside the candidate set.
  const Index128 remaining = shape.total() - static_cast<Index128>(candidate_set.size());
  const std::int64_t noise_count =
      rng.next_binomial(static_cast<std::int64_t>(remaining), spec.p_low);
  std::unordered_set<Index128, Index128Hash> taken;
  std::int64_t placed = 0;
  while (placed < noise_count) {
    const Index128 key = rng.next_below_128(shape.total());
    if (candidate_set.contains(key) || !taken.insert(key).second) continue;
    indices.push_back(multi_index(key, shape));
    values.push_back(1.0);
    ++placed;
  }

  return {SparseTensor(shape, indices, values), std::move(truth)};
}

}  // namespace gcp
