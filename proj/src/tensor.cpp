#include "gcp/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace gcp {

SparseTensor::SparseTensor(Shape shape, const std::vector<MultiIndex>& indices,
                           const std::vector<double>& values)
    : shape_(std::move(shape)) {
  if (indices.size() != values.size()) {
    throw std::invalid_argument("sparse tensor: index/value count mismatch");
  }
  const int d = shape_.ndims();

  std::vector<std::pair<Index128, double>> entries;
  entries.reserve(indices.size());
  for (std::size_t e = 0; e < indices.size(); ++e) {
    check_index(indices[e].coords(), shape_);
    entries.emplace_back(linear_index(indices[e].coords(), shape_), values[e]);
  }
  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  coords_.reserve(entries.size() * static_cast<std::size_t>(d));
  values_.reserve(entries.size());
  linear_keys_.reserve(entries.size());
  std::size_t e = 0;
  while (e < entries.size()) {
    const Index128 key = entries[e].first;
    double sum = 0.0;
    while (e < entries.size() && entries[e].first == key) sum += entries[e++].second;
    if (sum == 0.0) continue;
    const MultiIndex mi = multi_index(key, shape_);
    coords_.insert(coords_.end(), mi.coords().begin(), mi.coords().end());
    values_.push_back(sum);
    linear_keys_.push_back(key);
  }
}

double SparseTensor::lookup(std::span<const std::int64_t> index) const {
  check_index(index, shape_);
  const Index128 key = linear_index(index, shape_);
  const auto it = std::lower_bound(linear_keys_.begin(), linear_keys_.end(), key);
  if (it == linear_keys_.end() || *it != key) return 0.0;
  return values_[static_cast<std::size_t>(it - linear_keys_.begin())];
}

bool SparseTensor::contains_linear(Index128 key) const {
  return std::binary_search(linear_keys_.begin(), linear_keys_.end(), key);
}

double SparseTensor::norm() const {
  double ss = 0.0;
  for (double v : values_) ss += v * v;
  return std::sqrt(ss);
}

DenseTensor::DenseTensor(Shape shape, double fill) : shape_(std::move(shape)) {
  if (shape_.total() > kMaxTotal) {
    throw std::invalid_argument("dense tensor too large to materialize: " +
                                to_string(shape_.total()) + " entries");
  }
  values_.assign(static_cast<std::size_t>(shape_.total()), fill);
}

double DenseTensor::norm() const {
  double ss = 0.0;
  for (double v : values_) ss += v * v;
  return std::sqrt(ss);
}

}  // namespace gcp
