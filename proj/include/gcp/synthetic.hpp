#pragma once

#include <cstdint>
#include <utility>

#include "gcp/kruskal.hpp"
#include "gcp/shape.hpp"
#include "gcp/tensor.hpp"

namespace gcp {

class RngStream;

/// Dense nonnegative test problem: uniform(0,1) factors, each data entry an
/// exponential draw with mean equal to the model entry.
std::pair<DenseTensor, KruskalModel> gen_gamma_problem(const Shape& shape, std::int64_t rank,
                                                       RngStream& rng);

/// Sparse binary test problem. Columns 0..r-2 of every factor are sparse
/// (per-entry keep probability delta) with positive entries sized so that a
/// position structurally covered in all modes has odds near
/// p_high/(1-p_high); the last column is a constant noise floor whose odds
/// give p_low. Ones are exact Bernoulli draws with probability m/(1+m).
struct BinaryProblemSpec {
  Shape shape;
  std::int64_t rank = 2;
  double delta = 0.15;   // sparse-column keep probability, in (0, 0.5)
  double p_high = 0.9;   // target one-probability at structural positions
  double p_low = 0.0025; // noise one-probability elsewhere

  void validate() const;
};

std::pair<SparseTensor, KruskalModel> gen_binary_problem(const BinaryProblemSpec& spec,
                                                         RngStream& rng);

}  // namespace gcp
