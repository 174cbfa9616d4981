#pragma once

// Independent reference implementations used to check the library: brute
// force and intentionally naive, favoring obviousness over speed.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "gcp/kernels.hpp"
#include "gcp/kruskal.hpp"
#include "gcp/loss.hpp"
#include "gcp/rng.hpp"
#include "gcp/shape.hpp"
#include "gcp/tensor.hpp"

namespace oracles {

/// Deterministic stand-in for RngStream: next_below(n) replays a scripted
/// sequence (values are taken modulo n, so scripting the exact index works
/// whenever the script value is < n).
struct ScriptedRng {
  std::vector<std::uint64_t> script;
  std::size_t at = 0;

  std::uint64_t next_below(std::uint64_t n) {
    if (at >= script.size()) throw std::logic_error("ScriptedRng: script exhausted");
    return script[at++] % n;
  }
};

/// Walks every index of a shape in linear order, calling fn(MultiIndex).
template <typename Fn>
void for_each_index(const gcp::Shape& shape, Fn&& fn) {
  const int d = shape.ndims();
  gcp::MultiIndex idx(d);
  const gcp::Index128 total = shape.total();
  for (gcp::Index128 lin = 0; lin < total; ++lin) {
    fn(idx);
    for (int k = 0; k < d; ++k) {
      if (++idx[k] < shape.dim(k)) break;
      idx[k] = 0;
    }
  }
}

/// Model with factor entries uniform in [lo, hi).
inline gcp::KruskalModel random_model(const gcp::Shape& shape, std::int64_t rank,
                                      gcp::RngStream& rng, double lo = 0.0, double hi = 1.0) {
  gcp::KruskalModel model(shape, rank);
  for (int k = 0; k < shape.ndims(); ++k) {
    gcp::Matrix& f = model.factor(k);
    for (Eigen::Index i = 0; i < f.rows(); ++i) {
      for (Eigen::Index j = 0; j < f.cols(); ++j) {
        f(i, j) = lo + (hi - lo) * rng.next_double();
      }
    }
  }
  return model;
}

/// Sparse tensor with each entry present independently with the given
/// density; values produced by value_fn(rng).
template <typename ValueFn>
gcp::SparseTensor random_sparse(const gcp::Shape& shape, double density, ValueFn&& value_fn,
                                gcp::RngStream& rng) {
  std::vector<gcp::MultiIndex> indices;
  std::vector<double> values;
  for_each_index(shape, [&](const gcp::MultiIndex& idx) {
    if (rng.next_double() < density) {
      indices.push_back(idx);
      values.push_back(value_fn(rng));
    }
  });
  return gcp::SparseTensor(shape, indices, values);
}

/// Full objective F = sum over every entry of f(x_i, m_i).
inline double objective_brute(const gcp::TensorView& x, const gcp::KruskalModel& model,
                              const gcp::LossFunction& loss) {
  double sum = 0.0;
  for_each_index(x.shape(), [&](const gcp::MultiIndex& idx) {
    sum += loss.value(x.value_at(idx), model.entry(idx));
  });
  return sum;
}

/// Central finite differences of the full objective with respect to every
/// factor entry.
inline gcp::GradientSet fd_gradient(const gcp::TensorView& x, const gcp::KruskalModel& model,
                                    const gcp::LossFunction& loss, double h = 1e-6) {
  gcp::KruskalModel work = model;
  gcp::GradientSet out = gcp::GradientSet::zeros_like(model);
  for (int k = 0; k < model.ndims(); ++k) {
    gcp::Matrix& f = work.factor(k);
    for (Eigen::Index i = 0; i < f.rows(); ++i) {
      for (Eigen::Index j = 0; j < f.cols(); ++j) {
        const double saved = f(i, j);
        const double step = h * std::max(1.0, std::abs(saved));
        f(i, j) = saved + step;
        const double plus = objective_brute(x, work, loss);
        f(i, j) = saved - step;
        const double minus = objective_brute(x, work, loss);
        f(i, j) = saved;
        out.modes[static_cast<std::size_t>(k)](i, j) = (plus - minus) / (2.0 * step);
      }
    }
  }
  return out;
}

/// Mode-k matricization of a dense tensor times the Khatri-Rao product of
/// the other factors, both fully materialized. Column c of the unfolding
/// enumerates the non-k modes in increasing order, earliest fastest,
/// matching row c of the Khatri-Rao matrix.
inline gcp::Matrix mttkrp_unfold_oracle(const gcp::DenseTensor& y,
                                        const gcp::KruskalModel& model, int mode) {
  const gcp::Shape& shape = y.shape();
  const int d = shape.ndims();
  const std::int64_t rank = model.rank();
  std::int64_t cols = 1;
  for (int k = 0; k < d; ++k) {
    if (k != mode) cols *= shape.dim(k);
  }

  gcp::Matrix unfold = gcp::Matrix::Zero(shape.dim(mode), cols);
  gcp::Matrix kr = gcp::Matrix::Zero(cols, rank);
  for_each_index(shape, [&](const gcp::MultiIndex& idx) {
    std::int64_t c = 0;
    std::int64_t stride = 1;
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Ones(rank);
    for (int k = 0; k < d; ++k) {
      if (k == mode) continue;
      c += idx[k] * stride;
      stride *= shape.dim(k);
      row = row.cwiseProduct(model.factor(k).row(idx[k]));
    }
    unfold(idx[mode], c) = y.at(idx);
    kr.row(c) = row;  // rewritten identically for every idx[mode]
  });
  return unfold * kr;
}

/// Oversampling rate via an lgamma-based negative-binomial pmf, summed
/// term by term to the quantile. Returns the rejected-draw quantile count.
inline std::int64_t negbin_quantile_oracle(double p0, std::int64_t s0, double quantile) {
  const double s0_d = static_cast<double>(s0);
  double cdf = 0.0;
  for (std::int64_t k = 0;; ++k) {
    const double kd = static_cast<double>(k);
    const double log_pmf = std::lgamma(kd + s0_d) - std::lgamma(kd + 1.0) - std::lgamma(s0_d) +
                           s0_d * std::log(p0) + kd * std::log1p(-p0);
    cdf += std::exp(log_pmf);
    if (cdf >= quantile) return k;
    if (k > 100000000) throw std::logic_error("negbin oracle: quantile unreachable");
  }
}

/// Exponential moving averages replayed directly over a recorded gradient
/// sequence: B_t = beta*B_{t-1} + (1-beta)*G_t.
inline std::vector<gcp::Matrix> ema_oracle(const std::vector<gcp::Matrix>& grads, double beta) {
  if (grads.empty()) return {};
  gcp::Matrix acc = gcp::Matrix::Zero(grads[0].rows(), grads[0].cols());
  std::vector<gcp::Matrix> out;
  out.reserve(grads.size());
  for (const gcp::Matrix& g : grads) {
    acc = beta * acc + (1.0 - beta) * g;
    out.push_back(acc);
  }
  return out;
}

inline double rel_error(const Eigen::VectorXd& got, const Eigen::VectorXd& want) {
  const double denom = want.norm();
  if (denom == 0.0) return got.norm();
  return (got - want).norm() / denom;
}

inline double rel_error(const gcp::GradientSet& got, const gcp::GradientSet& want) {
  return rel_error(got.flatten(), want.flatten());
}

}  // namespace oracles
