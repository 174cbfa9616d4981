#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gcp/shape.hpp"

namespace gcp {

/// Coordinate-format sparse tensor. Construction normalizes the input:
/// duplicate coordinates are summed, exact zeros dropped, and entries
/// sorted by linear index, so lookups can binary-search the key list.
class SparseTensor {
public:
  SparseTensor() = default;
  SparseTensor(Shape shape, const std::vector<MultiIndex>& indices,
               const std::vector<double>& values);

  const Shape& shape() const { return shape_; }
  int ndims() const { return shape_.ndims(); }

  std::int64_t nnz() const { return static_cast<std::int64_t>(values_.size()); }
  Index128 zero_count() const { return shape_.total() - static_cast<Index128>(nnz()); }

  std::span<const std::int64_t> index(std::int64_t entry) const {
    return {coords_.data() + entry * ndims(), static_cast<std::size_t>(ndims())};
  }
  MultiIndex multi_index_at(std::int64_t entry) const { return MultiIndex(index(entry)); }
  double value(std::int64_t entry) const { return values_[static_cast<std::size_t>(entry)]; }
  const std::vector<double>& values() const { return values_; }
  const std::vector<Index128>& linear_keys() const { return linear_keys_; }

  /// Stored value at the given index, or 0 when absent.
  double lookup(std::span<const std::int64_t> index) const;
  double lookup(const MultiIndex& index) const { return lookup(index.coords()); }

  bool contains_linear(Index128 key) const;

  /// Frobenius norm.
  double norm() const;

private:
  Shape shape_;
  std::vector<std::int64_t> coords_;  // nnz * d, entry e at [e*d, (e+1)*d)
  std::vector<double> values_;
  std::vector<Index128> linear_keys_;  // strictly increasing
};

/// Dense tensor with first-mode-fastest linearized storage. Materialization
/// is guarded so desk-scale oracles cannot accidentally allocate huge arrays.
class DenseTensor {
public:
  static constexpr Index128 kMaxTotal = 100'000'000;

  DenseTensor() = default;
  explicit DenseTensor(Shape shape, double fill = 0.0);

  const Shape& shape() const { return shape_; }
  int ndims() const { return shape_.ndims(); }

  double operator[](Index128 linear) const { return values_[static_cast<std::size_t>(linear)]; }
  double& operator[](Index128 linear) { return values_[static_cast<std::size_t>(linear)]; }

  double at(std::span<const std::int64_t> index) const {
    return values_[static_cast<std::size_t>(linear_index(index, shape_))];
  }
  double at(const MultiIndex& index) const { return at(index.coords()); }
  double& at(const MultiIndex& index) {
    return values_[static_cast<std::size_t>(linear_index(index.coords(), shape_))];
  }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  double norm() const;

private:
  Shape shape_;
  std::vector<double> values_;
};

/// Non-owning view over either tensor kind, for operations that only need
/// shape, per-entry lookup, and the norm (uniform sampling, estimators,
/// exact-gradient oracles).
class TensorView {
public:
  TensorView(const SparseTensor& x) : sparse_(&x) {}  // NOLINT(google-explicit-constructor)
  TensorView(const DenseTensor& x) : dense_(&x) {}    // NOLINT(google-explicit-constructor)

  const Shape& shape() const { return sparse_ ? sparse_->shape() : dense_->shape(); }
  bool is_sparse() const { return sparse_ != nullptr; }
  const SparseTensor* as_sparse() const { return sparse_; }

  double value_at(std::span<const std::int64_t> index) const {
    return sparse_ ? sparse_->lookup(index) : dense_->at(index);
  }
  double value_at(const MultiIndex& index) const { return value_at(index.coords()); }

  double norm() const { return sparse_ ? sparse_->norm() : dense_->norm(); }

private:
  const SparseTensor* sparse_ = nullptr;
  const DenseTensor* dense_ = nullptr;
};

}  // namespace gcp
