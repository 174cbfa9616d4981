#include "gcp/samplers.hpp"

#include <cmath>
#include <limits>

#include "gcp/rng.hpp"

namespace gcp {

SamplerKind SamplerKind::uniform(std::int64_t s) {
  SamplerKind kind;
  kind.strategy = Strategy::kUniform;
  kind.num_samples = s;
  kind.validate();
  return kind;
}

SamplerKind SamplerKind::stratified(std::int64_t p, std::int64_t q, double rho) {
  SamplerKind kind;
  kind.strategy = Strategy::kStratified;
  kind.nonzero_samples = p;
  kind.zero_samples = q;
  kind.oversample = rho;
  kind.validate();
  return kind;
}

SamplerKind SamplerKind::semi_stratified(std::int64_t p, std::int64_t q) {
  SamplerKind kind;
  kind.strategy = Strategy::kSemiStratified;
  kind.nonzero_samples = p;
  kind.zero_samples = q;
  kind.validate();
  return kind;
}

SamplerKind SamplerKind::from_token(const std::string& token, std::int64_t total_samples) {
  if (token == "uniform") return uniform(total_samples);
  if (token == "stratified") return stratified(total_samples / 2, total_samples - total_samples / 2);
  if (token == "semi-stratified") {
    return semi_stratified(total_samples / 2, total_samples - total_samples / 2);
  }
  throw std::invalid_argument("unknown sampler '" + token +
                              "' (expected uniform, stratified, or semi-stratified)");
}

std::string SamplerKind::token() const {
  switch (strategy) {
    case Strategy::kUniform: return "uniform";
    case Strategy::kStratified: return "stratified";
    case Strategy::kSemiStratified: return "semi-stratified";
  }
  return "?";
}

void SamplerKind::validate() const {
  if (strategy == Strategy::kUniform) {
    if (num_samples < 1) throw std::invalid_argument("uniform sampler: s must be >= 1");
    return;
  }
  if (nonzero_samples < 0 || zero_samples < 0 || nonzero_samples + zero_samples < 1) {
    throw std::invalid_argument("sampler: need p, q >= 0 and p + q >= 1");
  }
  if (strategy == Strategy::kStratified && !(oversample > 1.0)) {
    throw std::invalid_argument("stratified sampler: oversample rate must be > 1");
  }
}

double oversample_rate(double p0, std::int64_t s0, double quantile) {
  if (!(p0 > 0.0 && p0 < 1.0)) {
    throw std::invalid_argument("oversample_rate: zero fraction must satisfy 0 < p0 < 1");
  }
  if (s0 < 1) throw std::invalid_argument("oversample_rate: s0 must be >= 1");
  if (!(quantile > 0.0 && quantile < 1.0)) {
    throw std::invalid_argument("oversample_rate: quantile must be in (0, 1)");
  }

  // Count of rejected draws before the s0-th accepted one is negative
  // binomial; walk its CDF to the quantile. Linear-space pmf unless the
  // start value underflows, then log space with incremental log-sum-exp.
  const double s0_d = static_cast<double>(s0);
  const std::int64_t max_iter = static_cast<std::int64_t>(1e9);
  std::int64_t s_reject = 0;

  double pmf = std::exp(s0_d * std::log(p0));
  if (pmf > 0.0) {
    double cdf = pmf;
    std::int64_t k = 0;
    while (cdf < quantile && pmf > 0.0 && k < max_iter) {
      pmf *= (static_cast<double>(k) + s0_d) / (static_cast<double>(k) + 1.0) * (1.0 - p0);
      cdf += pmf;
      ++k;
    }
    s_reject = k;
  } else {
    double log_pmf = s0_d * std::log(p0);
    double log_cdf = log_pmf;
    const double log_quantile = std::log(quantile);
    std::int64_t k = 0;
    while (log_cdf < log_quantile && k < max_iter) {
      log_pmf += std::log((static_cast<double>(k) + s0_d) / (static_cast<double>(k) + 1.0)) +
                 std::log1p(-p0);
      const double hi = std::max(log_cdf, log_pmf);
      log_cdf = hi + std::log(std::exp(log_cdf - hi) + std::exp(log_pmf - hi));
      ++k;
    }
    s_reject = k;
  }

  const double rho = (s0_d + static_cast<double>(s_reject)) * p0 / s0_d;
  return std::max(rho, 1.0 + 1e-6);
}

double EstimatorSamples::estimate(const KruskalModel& model, const LossFunction& loss) const {
  if (!(model.shape() == shape_)) {
    throw std::invalid_argument("estimate_loss: estimator/model shape mismatch");
  }
  double sum = 0.0;
  for (std::int64_t e = 0; e < size(); ++e) {
    const double m = model.entry(index(e));
    sum += weight(e) * loss.value(data_value(e), m);
  }
  return sum;
}

double estimate_loss(const TensorView& x, const KruskalModel& model, const LossFunction& loss,
                     const EstimatorSamples& est) {
  if (!(x.shape() == est.shape())) {
    throw std::invalid_argument("estimate_loss: tensor/estimator shape mismatch");
  }
  return est.estimate(model, loss);
}

BiasVariance empirical_bias_variance(const std::function<GradientSet(RngStream&)>& draw,
                                     const GradientSet& exact, std::int64_t trials,
                                     RngStream& rng) {
  if (trials < 2) throw std::invalid_argument("empirical_bias_variance: need >= 2 trials");

  std::vector<Eigen::VectorXd> draws;
  draws.reserve(static_cast<std::size_t>(trials));
  for (std::int64_t t = 0; t < trials; ++t) {
    RngStream trial_rng = rng.split(static_cast<std::uint64_t>(t));
    draws.push_back(draw(trial_rng).flatten());
  }

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(draws[0].size());
  for (const auto& g : draws) mean += g;
  mean /= static_cast<double>(trials);

  double sq = 0.0;
  for (const auto& g : draws) sq += (g - mean).squaredNorm();

  BiasVariance out;
  out.bias = (mean - exact.flatten()).norm();
  out.variance = sq / static_cast<double>(trials);
  return out;
}

BiasVariance empirical_bias_variance(const SamplerKind& kind, const TensorView& x,
                                     const KruskalModel& model, const LossFunction& loss,
                                     std::int64_t trials, RngStream& rng) {
  const GradientSet exact = gradient_full(x, model, loss);
  return empirical_bias_variance(
      [&](RngStream& r) {
        return mttkrp_sampled_all(draw_gradient_samples(x, model, loss, kind, r), model);
      },
      exact, trials, rng);
}

}  // namespace gcp
