#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gcp/kernels.hpp"
#include "gcp/kruskal.hpp"
#include "gcp/loss.hpp"
#include "gcp/shape.hpp"
#include "gcp/tensor.hpp"

namespace gcp {

class RngStream;

/// Source of uniform draws. Satisfied by RngStream; tests substitute scripted
/// sequences to exercise degenerate coverage cases.
template <typename R>
concept UniformRng = requires(R& r, std::uint64_t n) {
  { r.next_below(n) } -> std::convertible_to<std::uint64_t>;
};

/// Which stochastic gradient sampler to run, with its sample budget.
struct SamplerKind {
  enum class Strategy { kUniform, kStratified, kSemiStratified };

  Strategy strategy = Strategy::kUniform;
  std::int64_t num_samples = 0;      // s, uniform only
  std::int64_t nonzero_samples = 0;  // p
  std::int64_t zero_samples = 0;     // q
  double oversample = 1.1;           // rho, stratified rejection batch factor

  static SamplerKind uniform(std::int64_t s);
  static SamplerKind stratified(std::int64_t p, std::int64_t q, double rho = 1.1);
  static SamplerKind semi_stratified(std::int64_t p, std::int64_t q);

  /// Token is `uniform`, `stratified`, or `semi-stratified`; total_samples is
  /// the overall budget s, split p = floor(s/2), q = ceil(s/2) for the
  /// stratified kinds.
  static SamplerKind from_token(const std::string& token, std::int64_t total_samples);

  std::string token() const;
  void validate() const;
};

struct RejectionStats {
  std::int64_t tested = 0;
  std::int64_t accepted = 0;
  std::int64_t rejected = 0;
};

namespace detail {

/// One index drawn uniformly over the whole index space, one draw per mode.
template <UniformRng R>
inline void draw_index(const Shape& shape, R& rng, std::int64_t* out) {
  for (int k = 0; k < shape.ndims(); ++k) {
    out[k] = static_cast<std::int64_t>(
        rng.next_below(static_cast<std::uint64_t>(shape.dim(k))));
  }
}

}  // namespace detail

/// Uniform sampling: s indices drawn uniformly with replacement over the
/// whole index space, each contributing (n^d/s) * g(x_i, m_i). On sparse
/// input every draw pays a membership lookup to fetch x_i.
template <UniformRng R>
GradientSamples sample_uniform(const TensorView& x, const KruskalModel& model,
                               const LossFunction& loss, std::int64_t s, R& rng) {
  if (s < 1) throw std::invalid_argument("sample_uniform: s must be >= 1");
  if (!(x.shape() == model.shape())) {
    throw std::invalid_argument("sample_uniform: tensor/model shape mismatch");
  }
  const Shape& shape = x.shape();
  const double weight = shape.total_as_double() / static_cast<double>(s);
  GradientSamples out(shape);
  out.reserve(s);
  std::int64_t idx[Shape::kMaxModes];
  for (std::int64_t t = 0; t < s; ++t) {
    detail::draw_index(shape, rng, idx);
    const std::span<const std::int64_t> span(idx, static_cast<std::size_t>(shape.ndims()));
    const double m = model.entry(span);
    out.append(span, weight * loss.deriv(x.value_at(span), m));
  }
  return out;
}

/// Exactly q indices drawn uniformly over the zero entries of x, by drawing
/// candidate batches of size ceil(rho * (n^d/zeta) * shortfall) and dropping
/// candidates that hit a stored nonzero. Whole batches are filtered, so
/// stats (when requested) count every candidate tested.
template <UniformRng R>
std::vector<MultiIndex> sample_zeros_rejection(const SparseTensor& x, std::int64_t q,
                                               double rho, R& rng,
                                               RejectionStats* stats = nullptr) {
  if (q < 0) throw std::invalid_argument("sample_zeros_rejection: q must be >= 0");
  if (!(rho > 1.0)) throw std::invalid_argument("sample_zeros_rejection: rho must be > 1");
  const Shape& shape = x.shape();
  const Index128 zeta = x.zero_count();
  if (zeta < static_cast<Index128>(q)) {
    throw std::invalid_argument("sample_zeros_rejection: requested " + std::to_string(q) +
                                " zeros but only " + to_string(zeta) + " exist");
  }
  std::vector<MultiIndex> out;
  out.reserve(static_cast<std::size_t>(q));
  const double total = shape.total_as_double();
  const double zeta_d = static_cast<double>(zeta);
  std::int64_t idx[Shape::kMaxModes];
  while (std::cmp_less(out.size(), q)) {
    const std::int64_t shortfall = q - static_cast<std::int64_t>(out.size());
    double batch_d = std::ceil(rho * (total / zeta_d) * static_cast<double>(shortfall));
    if (!(batch_d >= 1.0)) batch_d = 1.0;
    if (batch_d > 9e15) batch_d = 9e15;
    const std::int64_t batch = static_cast<std::int64_t>(batch_d);
    for (std::int64_t t = 0; t < batch; ++t) {
      detail::draw_index(shape, rng, idx);
      const std::span<const std::int64_t> span(idx, static_cast<std::size_t>(shape.ndims()));
      const bool hit = x.contains_linear(linear_index(span, shape));
      if (stats != nullptr) {
        ++stats->tested;
        if (hit) ++stats->rejected; else ++stats->accepted;
      }
      if (!hit && std::cmp_less(out.size(), q)) out.emplace_back(span);
    }
  }
  return out;
}

/// Stratified sampling: p nonzeros drawn from the nonzero list weighted
/// (eta/p) * g(x_i, m_i), plus q zeros via rejection weighted
/// (zeta/q) * g(0, m_i). An empty nonzero stratum forfeits its budget to
/// the zero stratum.
template <UniformRng R>
GradientSamples sample_stratified(const SparseTensor& x, const KruskalModel& model,
                                  const LossFunction& loss, std::int64_t p, std::int64_t q,
                                  double rho, R& rng, RejectionStats* stats = nullptr) {
  if (p < 0 || q < 0 || p + q < 1) {
    throw std::invalid_argument("sample_stratified: need p, q >= 0 and p + q >= 1");
  }
  if (!(x.shape() == model.shape())) {
    throw std::invalid_argument("sample_stratified: tensor/model shape mismatch");
  }
  const std::int64_t eta = x.nnz();
  if (eta == 0 && p > 0) {
    q += p;
    p = 0;
  }
  GradientSamples out(x.shape());
  out.reserve(p + q);
  const double eta_over_p = p > 0 ? static_cast<double>(eta) / static_cast<double>(p) : 0.0;
  for (std::int64_t t = 0; t < p; ++t) {
    const std::int64_t e =
        static_cast<std::int64_t>(rng.next_below(static_cast<std::uint64_t>(eta)));
    const auto idx = x.index(e);
    const double m = model.entry(idx);
    out.append(idx, eta_over_p * loss.deriv(x.value(e), m));
  }
  if (q > 0) {
    const double zeta_over_q = static_cast<double>(x.zero_count()) / static_cast<double>(q);
    const auto zeros = sample_zeros_rejection(x, q, rho, rng, stats);
    for (const MultiIndex& mi : zeros) {
      const double m = model.entry(mi.coords());
      out.append(mi.coords(), zeta_over_q * loss.deriv(0.0, m));
    }
  }
  return out;
}

/// Semi-stratified sampling: p nonzeros weighted
/// (eta/p) * [g(x_i, m_i) - g(0, m_i)], plus q unrestricted draws weighted
/// (n^d/q) * g(0, m_i). The unrestricted draws deliberately treat every
/// index as a zero; the nonzero stratum's correction term cancels the error
/// in expectation, so no rejection test is needed.
template <UniformRng R>
GradientSamples sample_semi_stratified(const SparseTensor& x, const KruskalModel& model,
                                       const LossFunction& loss, std::int64_t p,
                                       std::int64_t q, R& rng) {
  if (p < 0 || q < 0 || p + q < 1) {
    throw std::invalid_argument("sample_semi_stratified: need p, q >= 0 and p + q >= 1");
  }
  if (!(x.shape() == model.shape())) {
    throw std::invalid_argument("sample_semi_stratified: tensor/model shape mismatch");
  }
  const Shape& shape = x.shape();
  const std::int64_t eta = x.nnz();
  if (eta == 0 && p > 0) {
    q += p;
    p = 0;
  }
  GradientSamples out(shape);
  out.reserve(p + q);
  const double eta_over_p = p > 0 ? static_cast<double>(eta) / static_cast<double>(p) : 0.0;
  for (std::int64_t t = 0; t < p; ++t) {
    const std::int64_t e =
        static_cast<std::int64_t>(rng.next_below(static_cast<std::uint64_t>(eta)));
    const auto idx = x.index(e);
    const double m = model.entry(idx);
    out.append(idx, eta_over_p * (loss.deriv(x.value(e), m) - loss.deriv(0.0, m)));
  }
  if (q > 0) {
    const double weight = shape.total_as_double() / static_cast<double>(q);
    std::int64_t idx[Shape::kMaxModes];
    for (std::int64_t t = 0; t < q; ++t) {
      detail::draw_index(shape, rng, idx);
      const std::span<const std::int64_t> span(idx, static_cast<std::size_t>(shape.ndims()));
      const double m = model.entry(span);
      out.append(span, weight * loss.deriv(0.0, m));
    }
  }
  return out;
}

/// Dispatch on the configured strategy. The stratified kinds require sparse
/// input; passing a dense view is a usage error.
template <UniformRng R>
GradientSamples draw_gradient_samples(const TensorView& x, const KruskalModel& model,
                                      const LossFunction& loss, const SamplerKind& kind,
                                      R& rng, RejectionStats* stats = nullptr) {
  kind.validate();
  switch (kind.strategy) {
    case SamplerKind::Strategy::kUniform:
      return sample_uniform(x, model, loss, kind.num_samples, rng);
    case SamplerKind::Strategy::kStratified:
      if (!x.is_sparse()) {
        throw std::invalid_argument("stratified sampling requires a sparse tensor");
      }
      return sample_stratified(*x.as_sparse(), model, loss, kind.nonzero_samples,
                               kind.zero_samples, kind.oversample, rng, stats);
    case SamplerKind::Strategy::kSemiStratified:
      if (!x.is_sparse()) {
        throw std::invalid_argument("semi-stratified sampling requires a sparse tensor");
      }
      return sample_semi_stratified(*x.as_sparse(), model, loss, kind.nonzero_samples,
                                    kind.zero_samples, rng);
  }
  throw std::logic_error("unreachable sampler strategy");
}

/// Oversample rate guaranteeing, with the given confidence, that one batch
/// of candidate draws yields s0 zeros when each candidate is a zero with
/// probability p0. s_reject is the quantile of the negative binomial count
/// of rejected draws, found by summing the pmf via the recurrence
/// pmf(k+1) = pmf(k) * (k+s0)/(k+1) * (1-p0).
double oversample_rate(double p0, std::int64_t s0, double quantile = 0.999999);

/// Fixed entry sample for loss estimation: drawn once, then reused so the
/// estimate is a deterministic function of the model. Data values are
/// captured at draw time.
class EstimatorSamples {
public:
  enum class Kind { kUniform, kStratified };

  EstimatorSamples() = default;

  template <UniformRng R>
  static EstimatorSamples draw_uniform(const TensorView& x, std::int64_t count, R& rng) {
    if (count < 0) throw std::invalid_argument("estimator: count must be >= 0");
    EstimatorSamples est;
    est.kind_ = Kind::kUniform;
    est.shape_ = x.shape();
    est.reserve(count);
    const double weight = x.shape().total_as_double() / static_cast<double>(count);
    std::int64_t idx[Shape::kMaxModes];
    for (std::int64_t t = 0; t < count; ++t) {
      detail::draw_index(est.shape_, rng, idx);
      const std::span<const std::int64_t> span(idx,
                                               static_cast<std::size_t>(est.shape_.ndims()));
      est.push(span, x.value_at(span), weight);
    }
    return est;
  }

  /// Budget split floor(count/2) nonzeros, ceil(count/2) zeros; an empty
  /// stratum forfeits its budget to the other.
  template <UniformRng R>
  static EstimatorSamples draw_stratified(const SparseTensor& x, std::int64_t count,
                                          double rho, R& rng) {
    if (count < 0) throw std::invalid_argument("estimator: count must be >= 0");
    EstimatorSamples est;
    est.kind_ = Kind::kStratified;
    est.shape_ = x.shape();
    est.reserve(count);
    std::int64_t p = count / 2;
    std::int64_t q = count - p;
    const std::int64_t eta = x.nnz();
    const Index128 zeta = x.zero_count();
    if (eta == 0) {
      q += p;
      p = 0;
    }
    if (zeta == 0) {
      p += q;
      q = 0;
    }
    const double eta_over_p = p > 0 ? static_cast<double>(eta) / static_cast<double>(p) : 0.0;
    for (std::int64_t t = 0; t < p; ++t) {
      const std::int64_t e =
          static_cast<std::int64_t>(rng.next_below(static_cast<std::uint64_t>(eta)));
      est.push(x.index(e), x.value(e), eta_over_p);
    }
    if (q > 0) {
      const double zeta_over_q = static_cast<double>(zeta) / static_cast<double>(q);
      const auto zeros = sample_zeros_rejection(x, q, rho, rng);
      for (const MultiIndex& mi : zeros) est.push(mi.coords(), 0.0, zeta_over_q);
    }
    return est;
  }

  Kind kind() const { return kind_; }
  const Shape& shape() const { return shape_; }
  std::int64_t size() const { return static_cast<std::int64_t>(weights_.size()); }

  std::span<const std::int64_t> index(std::int64_t entry) const {
    return {coords_.data() + entry * shape_.ndims(),
            static_cast<std::size_t>(shape_.ndims())};
  }
  double data_value(std::int64_t entry) const {
    return x_values_[static_cast<std::size_t>(entry)];
  }
  double weight(std::int64_t entry) const { return weights_[static_cast<std::size_t>(entry)]; }

  /// Weighted loss sum over the fixed draws. Bit-for-bit deterministic for a
  /// given estimator and model.
  double estimate(const KruskalModel& model, const LossFunction& loss) const;

private:
  void reserve(std::int64_t n) {
    coords_.reserve(static_cast<std::size_t>(n * shape_.ndims()));
    x_values_.reserve(static_cast<std::size_t>(n));
    weights_.reserve(static_cast<std::size_t>(n));
  }
  void push(std::span<const std::int64_t> index, double x_value, double weight) {
    coords_.insert(coords_.end(), index.begin(), index.end());
    x_values_.push_back(x_value);
    weights_.push_back(weight);
  }

  Kind kind_ = Kind::kUniform;
  Shape shape_;
  std::vector<std::int64_t> coords_;
  std::vector<double> x_values_;
  std::vector<double> weights_;
};

template <UniformRng R>
EstimatorSamples draw_estimator_samples(const TensorView& x, EstimatorSamples::Kind kind,
                                        std::int64_t count, R& rng, double rho = 1.1) {
  if (kind == EstimatorSamples::Kind::kUniform) {
    return EstimatorSamples::draw_uniform(x, count, rng);
  }
  if (!x.is_sparse()) {
    throw std::invalid_argument("stratified estimator requires a sparse tensor");
  }
  return EstimatorSamples::draw_stratified(*x.as_sparse(), count, rho, rng);
}

double estimate_loss(const TensorView& x, const KruskalModel& model, const LossFunction& loss,
                     const EstimatorSamples& est);

struct BiasVariance {
  double bias = 0.0;
  double variance = 0.0;
};

/// Empirical bias and variance of a stochastic gradient over `trials`
/// independent draws: bias = ||mean - exact||_2, variance is the mean
/// squared distance of the draws from their own mean. Each trial runs on a
/// child stream split from `rng`.
BiasVariance empirical_bias_variance(const std::function<GradientSet(RngStream&)>& draw,
                                     const GradientSet& exact, std::int64_t trials,
                                     RngStream& rng);

BiasVariance empirical_bias_variance(const SamplerKind& kind, const TensorView& x,
                                     const KruskalModel& model, const LossFunction& loss,
                                     std::int64_t trials, RngStream& rng);

}  // namespace gcp
