#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "gcp/shape.hpp"
#include "gcp/tensor.hpp"

namespace gcp {

class RngStream;

/// Row-major so each factor row (needed per sampled entry) is contiguous.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Rank-r Kruskal model: a list of d factor matrices A_k of size n_k x r.
/// Model entry (i_1,...,i_d) = sum_j prod_k A_k(i_k, j).
class KruskalModel {
public:
  KruskalModel() = default;
  KruskalModel(Shape shape, std::int64_t rank);
  explicit KruskalModel(std::vector<Matrix> factors);

  /// Factors i.i.d. uniform on [0, 1).
  static KruskalModel random_uniform(const Shape& shape, std::int64_t rank, RngStream& rng);

  const Shape& shape() const { return shape_; }
  int ndims() const { return shape_.ndims(); }
  std::int64_t rank() const { return rank_; }

  const Matrix& factor(int mode) const { return factors_[static_cast<std::size_t>(mode)]; }
  Matrix& factor(int mode) { return factors_[static_cast<std::size_t>(mode)]; }
  const std::vector<Matrix>& factors() const { return factors_; }

  double entry(std::span<const std::int64_t> index) const;
  double entry(const MultiIndex& index) const { return entry(index.coords()); }

  /// Materializes every model entry; guarded by DenseTensor's size cap.
  DenseTensor full() const;

  /// Frobenius norm of the full tensor, computed from factor Gram matrices
  /// without materializing it.
  double norm() const;

  /// Rescales all factors by a common ratio so norm() == target.
  void scale_norm_to(double target);

private:
  Shape shape_;
  std::int64_t rank_ = 0;
  std::vector<Matrix> factors_;
};

}  // namespace gcp
