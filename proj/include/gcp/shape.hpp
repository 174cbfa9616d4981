#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace gcp {

/// Linear indices are 128-bit so tensors with more than 2^64 entries
/// linearize without overflow.
using Index128 = unsigned __int128;

std::string to_string(Index128 value);

/// Extents (n_1, ..., n_d) of a d-way tensor, d in [1, kMaxModes].
class Shape {
public:
  static constexpr int kMaxModes = 16;

  Shape() = default;
  Shape(std::initializer_list<std::int64_t> dims);
  explicit Shape(std::vector<std::int64_t> dims);

  int ndims() const { return static_cast<int>(dims_.size()); }
  std::int64_t dim(int mode) const { return dims_[static_cast<std::size_t>(mode)]; }
  const std::vector<std::int64_t>& dims() const { return dims_; }

  /// Product of all extents.
  Index128 total() const { return total_; }
  double total_as_double() const { return static_cast<double>(total_); }

  /// Sum of all extents (the default gradient sample budget).
  std::int64_t dim_sum() const;

  bool operator==(const Shape& other) const { return dims_ == other.dims_; }

private:
  void validate_and_finalize();

  std::vector<std::int64_t> dims_;
  Index128 total_ = 0;
};

/// Zero-based coordinates of one tensor entry. Fixed capacity, value type.
class MultiIndex {
public:
  MultiIndex() = default;
  explicit MultiIndex(int ndims) : size_(ndims) { coords_.fill(0); }
  MultiIndex(std::initializer_list<std::int64_t> coords);
  explicit MultiIndex(std::span<const std::int64_t> coords);

  int size() const { return size_; }
  std::int64_t operator[](int k) const { return coords_[static_cast<std::size_t>(k)]; }
  std::int64_t& operator[](int k) { return coords_[static_cast<std::size_t>(k)]; }

  std::span<const std::int64_t> coords() const { return {coords_.data(), static_cast<std::size_t>(size_)}; }

  bool operator==(const MultiIndex& other) const;

private:
  std::array<std::int64_t, Shape::kMaxModes> coords_{};
  int size_ = 0;
};

/// Throws std::out_of_range naming the offending mode if any coordinate
/// falls outside the shape.
void check_index(std::span<const std::int64_t> index, const Shape& shape);

/// First-mode-fastest linearization: sum_k i_k * prod_{k'<k} n_k'.
Index128 linear_index(std::span<const std::int64_t> index, const Shape& shape);
inline Index128 linear_index(const MultiIndex& index, const Shape& shape) {
  return linear_index(index.coords(), shape);
}

/// Inverse of linear_index.
MultiIndex multi_index(Index128 linear, const Shape& shape);

}  // namespace gcp
