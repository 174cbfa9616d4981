#include "gcp/shape.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace gcp {

std::string to_string(Index128 value) {
  if (value == 0)
    return "0";
  std::string digits;
  while (value > 0) {
    digits.push_back(static_cast<char>('0' + static_cast<int>(value % 10)));
    value /= 10;
  }
  std::reverse(digits.begin(), digits.end());
  return digits;
}

Shape::Shape(std::initializer_list<std::int64_t> dims) : dims_(dims) {
  validate_and_finalize();
}

Shape::Shape(std::vector<std::int64_t> dims) : dims_(std::move(dims)) {
  validate_and_finalize();
}

void Shape::validate_and_finalize() {
  if (dims_.empty())
    throw std::invalid_argument("Shape: need at least one mode");
  if (static_cast<int>(dims_.size()) > kMaxModes)
    throw std::invalid_argument("Shape: at most " + std::to_string(kMaxModes) +
                                " modes supported");
  constexpr Index128 kMaxTotal = ~Index128{0};
  total_ = 1;
  for (std::int64_t n : dims_) {
    if (n < 1)
      throw std::invalid_argument("Shape: every extent must be positive");
    if (total_ > kMaxTotal / static_cast<Index128>(n))
      throw std::invalid_argument("Shape: total entry count overflows 128 bits");
    total_ *= static_cast<Index128>(n);
  }
}

std::int64_t Shape::dim_sum() const {
  std::int64_t sum = 0;
  for (std::int64_t n : dims_)
    sum += n;
  return sum;
}

MultiIndex::MultiIndex(std::initializer_list<std::int64_t> coords)
    : size_(static_cast<int>(coords.size())) {
  if (size_ > Shape::kMaxModes)
    throw std::invalid_argument("MultiIndex: too many modes");
  std::copy(coords.begin(), coords.end(), coords_.begin());
}

MultiIndex::MultiIndex(std::span<const std::int64_t> coords)
    : size_(static_cast<int>(coords.size())) {
  if (size_ > Shape::kMaxModes)
    throw std::invalid_argument("MultiIndex: too many modes");
  std::copy(coords.begin(), coords.end(), coords_.begin());
}

bool MultiIndex::operator==(const MultiIndex& other) const {
  if (size_ != other.size_)
    return false;
  return std::equal(coords_.begin(), coords_.begin() + size_, other.coords_.begin());
}

void check_index(std::span<const std::int64_t> index, const Shape& shape) {
  if (static_cast<int>(index.size()) != shape.ndims())
    throw std::out_of_range("index has " + std::to_string(index.size()) +
                            " modes, shape has " + std::to_string(shape.ndims()));
  for (int k = 0; k < shape.ndims(); ++k) {
    if (index[static_cast<std::size_t>(k)] < 0 ||
        index[static_cast<std::size_t>(k)] >= shape.dim(k))
      throw std::out_of_range(
          "index " + std::to_string(index[static_cast<std::size_t>(k)]) +
          " out of range [0, " + std::to_string(shape.dim(k)) + ") in mode " +
          std::to_string(k));
  }
}

Index128 linear_index(std::span<const std::int64_t> index, const Shape& shape) {
  check_index(index, shape);
  Index128 linear = 0;
  Index128 stride = 1;
  for (int k = 0; k < shape.ndims(); ++k) {
    linear += static_cast<Index128>(index[static_cast<std::size_t>(k)]) * stride;
    stride *= static_cast<Index128>(shape.dim(k));
  }
  return linear;
}

MultiIndex multi_index(Index128 linear, const Shape& shape) {
  if (linear >= shape.total())
    throw std::out_of_range("linear index " + to_string(linear) +
                            " out of range [0, " + to_string(shape.total()) + ")");
  MultiIndex index(shape.ndims());
  for (int k = 0; k < shape.ndims(); ++k) {
    const auto n = static_cast<Index128>(shape.dim(k));
    index[k] = static_cast<std::int64_t>(linear % n);
    linear /= n;
  }
  return index;
}

}  // namespace gcp
