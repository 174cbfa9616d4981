#include "gcp/kernels.hpp"

#include <stdexcept>
#include <thread>

namespace gcp {

namespace {

/// Leave-one-out row products for one sample: out[k] = elementwise product
/// of rows[k'] over k' != k, built from prefix and suffix running products.
class LeaveOneOut {
public:
  LeaveOneOut(int ndims, std::int64_t rank)
      : prefix_(static_cast<std::size_t>(ndims)), suffix_(static_cast<std::size_t>(ndims)) {
    for (auto& v : prefix_) v.resize(rank);
    for (auto& v : suffix_) v.resize(rank);
  }

  template <typename RowAt>
  void compute(int ndims, RowAt&& row_at) {
    prefix_[0].setOnes();
    for (int k = 1; k < ndims; ++k) {
      prefix_[static_cast<std::size_t>(k)] =
          prefix_[static_cast<std::size_t>(k - 1)].cwiseProduct(row_at(k - 1));
    }
    suffix_[static_cast<std::size_t>(ndims - 1)].setOnes();
    for (int k = ndims - 2; k >= 0; --k) {
      suffix_[static_cast<std::size_t>(k)] =
          suffix_[static_cast<std::size_t>(k + 1)].cwiseProduct(row_at(k + 1));
    }
  }

  Eigen::RowVectorXd product_excluding(int mode) const {
    return prefix_[static_cast<std::size_t>(mode)].cwiseProduct(
        suffix_[static_cast<std::size_t>(mode)]);
  }

private:
  std::vector<Eigen::RowVectorXd> prefix_;
  std::vector<Eigen::RowVectorXd> suffix_;
};

void accumulate_range(const GradientSamples& samples, const KruskalModel& model,
                      std::int64_t begin, std::int64_t end, GradientSet& out) {
  const int d = model.ndims();
  LeaveOneOut loo(d, model.rank());
  for (std::int64_t e = begin; e < end; ++e) {
    const auto idx = samples.index(e);
    const double y = samples.value(e);
    loo.compute(d, [&](int k) { return model.factor(k).row(idx[static_cast<std::size_t>(k)]); });
    for (int k = 0; k < d; ++k) {
      out.modes[static_cast<std::size_t>(k)].row(idx[static_cast<std::size_t>(k)]) +=
          y * loo.product_excluding(k);
    }
  }
}

}  // namespace

GradientSet GradientSet::zeros_like(const KruskalModel& model) {
  GradientSet out;
  out.modes.reserve(static_cast<std::size_t>(model.ndims()));
  for (int k = 0; k < model.ndims(); ++k) {
    out.modes.emplace_back(Matrix::Zero(model.shape().dim(k), model.rank()));
  }
  return out;
}

void GradientSet::add(const GradientSet& other) {
  for (std::size_t k = 0; k < modes.size(); ++k) modes[k] += other.modes[k];
}

Eigen::VectorXd GradientSet::flatten() const {
  Eigen::Index total = 0;
  for (const Matrix& m : modes) total += m.size();
  Eigen::VectorXd out(total);
  Eigen::Index at = 0;
  for (const Matrix& m : modes) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) out[at++] = m(i, j);
    }
  }
  return out;
}

Matrix mttkrp_dense(const DenseTensor& y, const KruskalModel& model, int mode) {
  if (mode < 0 || mode >= model.ndims()) {
    throw std::invalid_argument("mttkrp: mode out of range");
  }
  if (!(y.shape() == model.shape())) {
    throw std::invalid_argument("mttkrp: tensor/model shape mismatch");
  }
  const Shape& shape = y.shape();
  const int d = shape.ndims();
  Matrix out = Matrix::Zero(shape.dim(mode), model.rank());
  Eigen::RowVectorXd prod(model.rank());
  MultiIndex idx(d);
  const Index128 total = shape.total();
  for (Index128 lin = 0; lin < total; ++lin) {
    const double v = y[lin];
    if (v != 0.0) {
      prod.setOnes();
      for (int k = 0; k < d; ++k) {
        if (k == mode) continue;
        prod = prod.cwiseProduct(model.factor(k).row(idx[k]));
      }
      out.row(idx[mode]) += v * prod;
    }
    for (int k = 0; k < d; ++k) {
      if (++idx[k] < shape.dim(k)) break;
      idx[k] = 0;
    }
  }
  return out;
}

Matrix mttkrp_sampled(const GradientSamples& samples, const KruskalModel& model, int mode) {
  if (mode < 0 || mode >= model.ndims()) {
    throw std::invalid_argument("mttkrp: mode out of range");
  }
  const int d = model.ndims();
  Matrix out = Matrix::Zero(model.shape().dim(mode), model.rank());
  Eigen::RowVectorXd prod(model.rank());
  for (std::int64_t e = 0; e < samples.size(); ++e) {
    const auto idx = samples.index(e);
    prod.setOnes();
    for (int k = 0; k < d; ++k) {
      if (k == mode) continue;
      prod = prod.cwiseProduct(model.factor(k).row(idx[static_cast<std::size_t>(k)]));
    }
    out.row(idx[static_cast<std::size_t>(mode)]) += samples.value(e) * prod;
  }
  return out;
}

GradientSet mttkrp_sampled_all(const GradientSamples& samples, const KruskalModel& model,
                               int threads) {
  GradientSet out = GradientSet::zeros_like(model);
  const std::int64_t n = samples.size();
  if (n == 0) return out;

  if (threads <= 1 || n < 4096) {
    accumulate_range(samples, model, 0, n, out);
    return out;
  }

  const int workers = static_cast<int>(
      std::min<std::int64_t>(threads, (n + 4095) / 4096));
  std::vector<GradientSet> partials;
  partials.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) partials.push_back(GradientSet::zeros_like(model));

  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  const std::int64_t chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const std::int64_t begin = w * chunk;
    const std::int64_t end = std::min<std::int64_t>(begin + chunk, n);
    pool.emplace_back([&, w, begin, end] {
      accumulate_range(samples, model, begin, end, partials[static_cast<std::size_t>(w)]);
    });
  }
  for (std::thread& t : pool) t.join();
  // Reduce in chunk order so the result is stable for a fixed thread count.
  for (int w = 0; w < workers; ++w) out.add(partials[static_cast<std::size_t>(w)]);
  return out;
}

GradientSet gradient_full(const TensorView& x, const KruskalModel& model,
                          const LossFunction& loss) {
  const Shape& shape = x.shape();
  if (!(shape == model.shape())) {
    throw std::invalid_argument("gradient: tensor/model shape mismatch");
  }
  if (shape.total() > DenseTensor::kMaxTotal) {
    throw std::invalid_argument("gradient: tensor too large for the full-entry walk: " +
                                to_string(shape.total()) + " entries");
  }
  const int d = shape.ndims();
  GradientSet out = GradientSet::zeros_like(model);
  LeaveOneOut loo(d, model.rank());
  MultiIndex idx(std::vector<std::int64_t>(static_cast<std::size_t>(d), 0));
  const Index128 total = shape.total();
  for (Index128 lin = 0; lin < total; ++lin) {
    const double m = model.entry(idx.coords());
    const double y = loss.deriv(x.value_at(idx.coords()), m);
    loo.compute(d, [&](int k) { return model.factor(k).row(idx[k]); });
    for (int k = 0; k < d; ++k) {
      out.modes[static_cast<std::size_t>(k)].row(idx[k]) += y * loo.product_excluding(k);
    }
    for (int k = 0; k < d; ++k) {
      if (++idx[k] < shape.dim(k)) break;
      idx[k] = 0;
    }
  }
  return out;
}

GradientSet gradient_poisson_implicit(const SparseTensor& x, const KruskalModel& model,
                                      const LossFunction& loss) {
  if (loss.kind() != LossKind::kPoisson) {
    throw std::invalid_argument("implicit gradient requires the poisson loss, got " +
                                loss.name());
  }
  if (!(x.shape() == model.shape())) {
    throw std::invalid_argument("gradient: tensor/model shape mismatch");
  }
  const int d = model.ndims();
  GradientSet out = GradientSet::zeros_like(model);

  // All-ones part: every row of the mode-k product equals the elementwise
  // product of the other factors' column sums.
  std::vector<Eigen::RowVectorXd> colsums;
  colsums.reserve(static_cast<std::size_t>(d));
  for (int k = 0; k < d; ++k) colsums.push_back(model.factor(k).colwise().sum());
  LeaveOneOut loo(d, model.rank());
  loo.compute(d, [&](int k) -> const Eigen::RowVectorXd& { return colsums[static_cast<std::size_t>(k)]; });
  for (int k = 0; k < d; ++k) {
    out.modes[static_cast<std::size_t>(k)].rowwise() += loo.product_excluding(k);
  }

  // Sparse part: subtract v_i = x_i / (m_i + eps) at the nonzeros.
  for (std::int64_t e = 0; e < x.nnz(); ++e) {
    const auto idx = x.index(e);
    const double m = model.entry(idx);
    const double v = x.value(e) / (m + LossFunction::kEps);
    loo.compute(d, [&](int k) { return model.factor(k).row(idx[static_cast<std::size_t>(k)]); });
    for (int k = 0; k < d; ++k) {
      out.modes[static_cast<std::size_t>(k)].row(idx[static_cast<std::size_t>(k)]) -=
          v * loo.product_excluding(k);
    }
  }
  return out;
}

}  // namespace gcp
