#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "gcp/shape.hpp"

using gcp::Index128;
using gcp::MultiIndex;
using gcp::Shape;

TEST_CASE("shape basics") {
  const Shape s({6, 5, 4});
  CHECK(s.ndims() == 3);
  CHECK(s.dim(0) == 6);
  CHECK(s.dim(2) == 4);
  CHECK(s.total() == 120);
  CHECK(s.total_as_double() == doctest::Approx(120.0));
  CHECK(s.dim_sum() == 15);
  CHECK(s == Shape({6, 5, 4}));
  CHECK_FALSE(s == Shape({6, 5, 5}));
  CHECK_FALSE(s == Shape({6, 5}));
}

TEST_CASE("shape validation") {
  CHECK_THROWS_AS(Shape(std::vector<std::int64_t>{}), std::invalid_argument);
  CHECK_THROWS_AS(Shape({3, 0, 2}), std::invalid_argument);
  CHECK_THROWS_AS(Shape({-1}), std::invalid_argument);
  CHECK_THROWS_AS(Shape(std::vector<std::int64_t>(17, 2)), std::invalid_argument);
}

TEST_CASE("total handles sizes beyond 64 bits") {
  // 2^16 in each of 9 modes = 2^144 overflows 128 bits and must be rejected;
  // 2^8 in 9 modes = 2^72 exceeds 64 bits and must work.
  CHECK_THROWS_AS(Shape(std::vector<std::int64_t>(9, 1 << 16)), std::invalid_argument);
  const Shape big(std::vector<std::int64_t>(9, 1 << 8));
  CHECK(big.total() == Index128{1} << 72);
  CHECK(gcp::to_string(big.total()) == "4722366482869645213696");
}

TEST_CASE("linear index is first-mode-fastest") {
  const Shape s({3, 4, 5});
  CHECK(gcp::linear_index(MultiIndex{0, 0, 0}, s) == 0);
  CHECK(gcp::linear_index(MultiIndex{1, 0, 0}, s) == 1);
  CHECK(gcp::linear_index(MultiIndex{0, 1, 0}, s) == 3);
  CHECK(gcp::linear_index(MultiIndex{0, 0, 1}, s) == 12);
  CHECK(gcp::linear_index(MultiIndex{2, 3, 4}, s) == 2 + 3 * 3 + 4 * 12);
}

TEST_CASE("linear and multi index are inverses") {
  const Shape s({3, 4, 5});
  for (Index128 lin = 0; lin < s.total(); ++lin) {
    const MultiIndex idx = gcp::multi_index(lin, s);
    CHECK(gcp::linear_index(idx, s) == lin);
  }
}

TEST_CASE("index bounds are enforced with the offending mode named") {
  const Shape s({3, 4});
  CHECK_THROWS_WITH_AS(gcp::check_index(MultiIndex{0, 4}.coords(), s),
                       doctest::Contains("mode 1"), std::out_of_range);
  CHECK_THROWS_AS(gcp::check_index(MultiIndex{-1, 0}.coords(), s), std::out_of_range);
  CHECK_THROWS_AS(gcp::check_index(MultiIndex{0}.coords(), s), std::out_of_range);
  CHECK_THROWS_AS(gcp::multi_index(s.total(), s), std::out_of_range);
}

TEST_CASE("multi index equality and coords") {
  const MultiIndex a{1, 2, 3};
  const MultiIndex b{1, 2, 3};
  const MultiIndex c{1, 2, 4};
  CHECK(a == b);
  CHECK_FALSE(a == c);
  CHECK(a.size() == 3);
  CHECK(a[1] == 2);
}
