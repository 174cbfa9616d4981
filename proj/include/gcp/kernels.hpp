#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "gcp/kruskal.hpp"
#include "gcp/loss.hpp"
#include "gcp/shape.hpp"
#include "gcp/tensor.hpp"

namespace gcp {

/// Sparse collection of weighted derivative samples: entry e contributes
/// value(e) at index(e). Indices may repeat; contributions accumulate when
/// the multi-mode product is formed, so duplicates need no merging here.
class GradientSamples {
public:
  GradientSamples() = default;
  explicit GradientSamples(Shape shape) : shape_(std::move(shape)) {}

  const Shape& shape() const { return shape_; }
  int ndims() const { return shape_.ndims(); }
  std::int64_t size() const { return static_cast<std::int64_t>(values_.size()); }

  void reserve(std::int64_t n) {
    coords_.reserve(static_cast<std::size_t>(n * ndims()));
    values_.reserve(static_cast<std::size_t>(n));
  }
  void append(std::span<const std::int64_t> index, double value) {
    coords_.insert(coords_.end(), index.begin(), index.end());
    values_.push_back(value);
  }

  std::span<const std::int64_t> index(std::int64_t entry) const {
    return {coords_.data() + entry * ndims(), static_cast<std::size_t>(ndims())};
  }
  double value(std::int64_t entry) const { return values_[static_cast<std::size_t>(entry)]; }

private:
  Shape shape_;
  std::vector<std::int64_t> coords_;
  std::vector<double> values_;
};

/// One gradient matrix per mode, same shapes as the model factors.
struct GradientSet {
  std::vector<Matrix> modes;

  static GradientSet zeros_like(const KruskalModel& model);

  void add(const GradientSet& other);

  /// All matrices concatenated (mode order, row-major within a mode), for
  /// norm computations across the whole gradient.
  Eigen::VectorXd flatten() const;
};

/// Mode-k product of a dense tensor with the other factors:
/// out(i_k, j) += y_i * prod_{k' != k} A_{k'}(i_{k'}, j) over every entry.
/// The Khatri-Rao matrix this implies is never formed.
Matrix mttkrp_dense(const DenseTensor& y, const KruskalModel& model, int mode);

/// Multi-mode product of the samples against all factors but factor k:
/// out(i_k, j) += y * prod_{k' != k} A_{k'}(i_{k'}, j) per sample.
Matrix mttkrp_sampled(const GradientSamples& samples, const KruskalModel& model, int mode);

/// All d mode products in one pass over the samples, sharing the
/// leave-one-out row products. With threads > 1 the sample range is split
/// into fixed chunks reduced in chunk order, so results are deterministic
/// for a given thread count.
GradientSet mttkrp_sampled_all(const GradientSamples& samples, const KruskalModel& model,
                               int threads = 1);

/// Exact gradient: derivative tensor y_i = df/dm(x_i, m_i) formed over every
/// entry of x. Walks the full index space, so the tensor's total size is
/// subject to the dense materialization cap.
GradientSet gradient_full(const TensorView& x, const KruskalModel& model,
                          const LossFunction& loss);

/// Exact Poisson gradient without touching zero entries: the derivative
/// tensor 1 - x/(m+eps) splits into an all-ones tensor, whose mode products
/// have identical rows built from factor column sums, minus a sparse part
/// supported on the nonzeros of x.
GradientSet gradient_poisson_implicit(const SparseTensor& x, const KruskalModel& model,
                                      const LossFunction& loss);

}  // namespace gcp
