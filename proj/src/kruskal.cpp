#include "gcp/kruskal.hpp"

#include <cmath>
#include <stdexcept>

#include "gcp/rng.hpp"

namespace gcp {

KruskalModel::KruskalModel(Shape shape, std::int64_t rank)
    : shape_(std::move(shape)), rank_(rank) {
  if (rank_ < 1) throw std::invalid_argument("kruskal model: rank must be >= 1");
  factors_.reserve(static_cast<std::size_t>(shape_.ndims()));
  for (int k = 0; k < shape_.ndims(); ++k) {
    factors_.emplace_back(Matrix::Zero(shape_.dim(k), rank_));
  }
}

KruskalModel::KruskalModel(std::vector<Matrix> factors) {
  if (factors.empty()) throw std::invalid_argument("kruskal model: no factors");
  rank_ = factors[0].cols();
  if (rank_ < 1) throw std::invalid_argument("kruskal model: rank must be >= 1");
  std::vector<std::int64_t> dims;
  dims.reserve(factors.size());
  for (const Matrix& f : factors) {
    if (f.cols() != rank_) throw std::invalid_argument("kruskal model: inconsistent ranks");
    dims.push_back(f.rows());
  }
  shape_ = Shape(dims);
  factors_ = std::move(factors);
}

KruskalModel KruskalModel::random_uniform(const Shape& shape, std::int64_t rank,
                                          RngStream& rng) {
  KruskalModel model(shape, rank);
  for (int k = 0; k < shape.ndims(); ++k) {
    Matrix& f = model.factor(k);
    for (Eigen::Index i = 0; i < f.rows(); ++i) {
      for (Eigen::Index j = 0; j < f.cols(); ++j) {
        f(i, j) = rng.next_double();
      }
    }
  }
  return model;
}

double KruskalModel::entry(std::span<const std::int64_t> index) const {
  check_index(index, shape_);
  double sum = 0.0;
  for (std::int64_t j = 0; j < rank_; ++j) {
    double prod = 1.0;
    for (int k = 0; k < ndims(); ++k) {
      prod *= factors_[static_cast<std::size_t>(k)](index[static_cast<std::size_t>(k)], j);
    }
    sum += prod;
  }
  return sum;
}

DenseTensor KruskalModel::full() const {
  DenseTensor out(shape_);
  const Index128 total = shape_.total();
  MultiIndex idx(std::vector<std::int64_t>(static_cast<std::size_t>(ndims()), 0));
  for (Index128 lin = 0; lin < total; ++lin) {
    out[lin] = entry(idx.coords());
    // Odometer increment, first mode fastest, matching linear_index order.
    for (int k = 0; k < ndims(); ++k) {
      if (++idx[k] < shape_.dim(k)) break;
      idx[k] = 0;
    }
  }
  return out;
}

double KruskalModel::norm() const {
  // ||M||^2 = 1' (hadamard_k A_k' A_k) 1; clamp guards tiny negative rounding.
  Matrix gram = Matrix::Ones(rank_, rank_);
  for (const Matrix& f : factors_) {
    gram = gram.cwiseProduct((f.transpose() * f).eval());
  }
  const double ss = gram.sum();
  return std::sqrt(std::max(0.0, ss));
}

void KruskalModel::scale_norm_to(double target) {
  if (target < 0.0) throw std::invalid_argument("kruskal model: negative target norm");
  const double current = norm();
  if (current == 0.0) {
    throw std::invalid_argument("kruskal model: cannot rescale a zero model");
  }
  const double ratio = std::pow(target / current, 1.0 / ndims());
  for (Matrix& f : factors_) f *= ratio;
}

}  // namespace gcp
