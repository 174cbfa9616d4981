#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "doctest.h"
#include "gcp/kruskal.hpp"
#include "gcp/rng.hpp"
#include "gcp/shape.hpp"
#include "gcp/synthetic.hpp"
#include "gcp/tensor.hpp"
#include "oracles.hpp"

using gcp::BinaryProblemSpec;
using gcp::DenseTensor;
using gcp::Index128;
using gcp::KruskalModel;
using gcp::MultiIndex;
using gcp::RngStream;
using gcp::Shape;
using gcp::SparseTensor;

namespace {

// Structural candidate keys recomputed from the truth factors: union over
// sparse columns of the cartesian products of positive supports.
std::unordered_set<std::uint64_t> candidate_keys(const KruskalModel& truth) {
  const Shape& shape = truth.shape();
  const int d = shape.ndims();
  std::unordered_set<std::uint64_t> keys;
  for (std::int64_t j = 0; j + 1 < truth.rank(); ++j) {
    std::vector<std::vector<std::int64_t>> support(static_cast<std::size_t>(d));
    bool empty = false;
    for (int k = 0; k < d; ++k) {
      for (std::int64_t i = 0; i < shape.dim(k); ++i) {
        if (truth.factor(k)(i, j) > 0.0) support[static_cast<std::size_t>(k)].push_back(i);
      }
      if (support[static_cast<std::size_t>(k)].empty()) empty = true;
    }
    if (empty) continue;
    std::vector<std::size_t> at(static_cast<std::size_t>(d), 0);
    while (true) {
      MultiIndex idx(d);
      for (int k = 0; k < d; ++k) {
        idx[k] = support[static_cast<std::size_t>(k)][at[static_cast<std::size_t>(k)]];
      }
      keys.insert(static_cast<std::uint64_t>(gcp::linear_index(idx, shape)));
      int k = 0;
      for (; k < d; ++k) {
        if (++at[static_cast<std::size_t>(k)] < support[static_cast<std::size_t>(k)].size()) {
          break;
        }
        at[static_cast<std::size_t>(k)] = 0;
      }
      if (k == d) break;
    }
  }
  return keys;
}

}  // namespace

TEST_CASE("gamma problems produce nonnegative data of the right shape") {
  const Shape shape({6, 5, 4});
  RngStream rng(11);
  const auto [data, truth] = gcp::gen_gamma_problem(shape, 3, rng);
  CHECK(data.shape() == shape);
  CHECK(truth.rank() == 3);
  bool all_nonneg = true;
  oracles::for_each_index(shape, [&](const MultiIndex& idx) {
    if (data.at(idx) < 0.0) all_nonneg = false;
  });
  CHECK(all_nonneg);
  for (int k = 0; k < 3; ++k) {
    CHECK((truth.factor(k).array() >= 0.0).all());
    CHECK((truth.factor(k).array() < 1.0).all());
  }
}

TEST_CASE("gamma generation is seed reproducible") {
  const Shape shape({4, 3, 2});
  RngStream a(42);
  RngStream b(42);
  RngStream c(43);
  const auto [xa, ta] = gcp::gen_gamma_problem(shape, 2, a);
  const auto [xb, tb] = gcp::gen_gamma_problem(shape, 2, b);
  const auto [xc, tc] = gcp::gen_gamma_problem(shape, 2, c);
  double diff_ab = 0.0;
  double diff_ac = 0.0;
  oracles::for_each_index(shape, [&](const MultiIndex& idx) {
    diff_ab += std::abs(xa.at(idx) - xb.at(idx));
    diff_ac += std::abs(xa.at(idx) - xc.at(idx));
  });
  CHECK(diff_ab == 0.0);
  CHECK(diff_ac > 0.0);
  for (int k = 0; k < 3; ++k) {
    CHECK((ta.factor(k) - tb.factor(k)).norm() == 0.0);
  }
}

TEST_CASE("gamma data means track the truth model") {
  // Conditioned on the truth, each entry is exponential with mean m_i, so
  // the total mass concentrates around the model mass.
  const Shape shape({10, 10, 10});
  RngStream rng(17);
  const auto [data, truth] = gcp::gen_gamma_problem(shape, 2, rng);
  double sum_x = 0.0;
  double sum_m = 0.0;
  double sum_m2 = 0.0;
  oracles::for_each_index(shape, [&](const MultiIndex& idx) {
    const double m = truth.entry(idx);
    sum_x += data.at(idx);
    sum_m += m;
    sum_m2 += m * m;
  });
  CHECK(std::abs(sum_x - sum_m) <= 5.0 * std::sqrt(sum_m2));
}

TEST_CASE("binary problem specs are validated") {
  BinaryProblemSpec good;
  good.shape = Shape({6, 5, 4});
  CHECK_NOTHROW(good.validate());

  BinaryProblemSpec spec = good;
  spec.rank = 1;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = good;
  spec.delta = 0.0;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = good;
  spec.delta = 0.5;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = good;
  spec.p_low = 0.0;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = good;
  spec.p_low = 0.95;  // above p_high
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = good;
  spec.p_high = 1.0;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = good;
  spec.shape = Shape({std::int64_t{1} << 32, std::int64_t{1} << 31});
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
}

TEST_CASE("binary generation is seed reproducible and emits only ones") {
  BinaryProblemSpec spec;
  spec.shape = Shape({12, 10, 8});
  spec.rank = 2;
  spec.delta = 0.2;
  spec.p_low = 0.01;
  RngStream a(7);
  RngStream b(7);
  RngStream c(8);
  const auto [xa, ta] = gcp::gen_binary_problem(spec, a);
  const auto [xb, tb] = gcp::gen_binary_problem(spec, b);
  const auto [xc, tc] = gcp::gen_binary_problem(spec, c);

  REQUIRE(xa.nnz() > 0);
  CHECK(xa.nnz() == xb.nnz());
  bool same = xa.nnz() == xb.nnz();
  for (std::int64_t e = 0; same && e < xa.nnz(); ++e) {
    same = gcp::linear_index(xa.index(e), spec.shape) ==
           gcp::linear_index(xb.index(e), spec.shape);
  }
  CHECK(same);
  for (std::int64_t e = 0; e < xa.nnz(); ++e) CHECK(xa.value(e) == 1.0);
  for (int k = 0; k < 3; ++k) CHECK((ta.factor(k) - tb.factor(k)).norm() == 0.0);

  bool differs = xa.nnz() != xc.nnz();
  for (std::int64_t e = 0; !differs && e < xa.nnz(); ++e) {
    differs = gcp::linear_index(xa.index(e), spec.shape) !=
              gcp::linear_index(xc.index(e), spec.shape);
  }
  CHECK(differs);
}

TEST_CASE("binary truth factors carry a constant noise floor column") {
  BinaryProblemSpec spec;
  spec.shape = Shape({9, 8, 7});
  spec.rank = 3;
  RngStream rng(13);
  const auto [x, truth] = gcp::gen_binary_problem(spec, rng);
  const double low = std::pow(spec.p_low / (1.0 - spec.p_low), 1.0 / 3.0);
  for (int k = 0; k < 3; ++k) {
    const gcp::Matrix& f = truth.factor(k);
    for (Eigen::Index i = 0; i < f.rows(); ++i) {
      CHECK(f(i, 2) == low);
      CHECK(f(i, 0) >= 0.0);
      CHECK(f(i, 1) >= 0.0);
    }
  }
  // The model value at any all-zero-support position is exactly the noise
  // odds, giving P(one) = p_low.
  const double m_floor = low * low * low;
  CHECK(m_floor / (1.0 + m_floor) == doctest::Approx(spec.p_low).epsilon(1e-12));
}

TEST_CASE("structural positions light up near p_high, the rest near p_low") {
  BinaryProblemSpec spec;
  spec.shape = Shape({15, 15, 15});
  spec.rank = 2;
  spec.delta = 0.4;
  spec.p_high = 0.9;
  spec.p_low = 0.05;
  RngStream rng(19);
  const auto [x, truth] = gcp::gen_binary_problem(spec, rng);

  const auto candidates = candidate_keys(truth);
  REQUIRE(candidates.size() > 80);

  std::int64_t ones_structural = 0;
  std::int64_t ones_noise = 0;
  for (std::int64_t e = 0; e < x.nnz(); ++e) {
    const auto key = static_cast<std::uint64_t>(gcp::linear_index(x.index(e), spec.shape));
    if (candidates.contains(key)) {
      ++ones_structural;
    } else {
      ++ones_noise;
    }
  }
  const double structural_rate =
      static_cast<double>(ones_structural) / static_cast<double>(candidates.size());
  CHECK(structural_rate >= 0.70);
  CHECK(structural_rate <= 0.97);

  const double remaining = 15.0 * 15.0 * 15.0 - static_cast<double>(candidates.size());
  const double noise_rate = static_cast<double>(ones_noise) / remaining;
  const double sigma = std::sqrt(spec.p_low * (1.0 - spec.p_low) / remaining);
  CHECK(std::abs(noise_rate - spec.p_low) <= 4.0 * sigma);
}

TEST_CASE("a four-mode binary instance lands near its design density") {
  BinaryProblemSpec spec;
  spec.shape = Shape({20, 15, 10, 8});
  spec.rank = 2;
  spec.delta = 0.15;
  spec.p_high = 0.9;
  spec.p_low = 0.0025;
  RngStream rng(23);
  const auto [x, truth] = gcp::gen_binary_problem(spec, rng);
  const double density = static_cast<double>(x.nnz()) / spec.shape.total_as_double();
  CHECK(density > 0.001);
  CHECK(density < 0.02);
  for (std::int64_t e = 0; e < x.nnz(); ++e) CHECK(x.value(e) == 1.0);
}

TEST_CASE("oversized dense gamma problems are rejected") {
  RngStream rng(29);
  CHECK_THROWS_AS(gcp::gen_gamma_problem(Shape({100000, 100000, 100}), 2, rng),
                  std::invalid_argument);
}
