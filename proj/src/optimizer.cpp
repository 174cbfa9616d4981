#include "gcp/optimizer.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "gcp/rng.hpp"

namespace gcp {

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

AdamState AdamState::init(const KruskalModel& model, double alpha0) {
  AdamState state;
  state.learning_rate = alpha0;
  state.first_moment.reserve(static_cast<std::size_t>(model.ndims()));
  state.second_moment.reserve(static_cast<std::size_t>(model.ndims()));
  for (int k = 0; k < model.ndims(); ++k) {
    state.first_moment.emplace_back(Matrix::Zero(model.shape().dim(k), model.rank()));
    state.second_moment.emplace_back(Matrix::Zero(model.shape().dim(k), model.rank()));
  }
  return state;
}

void FitConfig::validate() const {
  if (rank < 1) throw std::invalid_argument("fit: rank must be >= 1");
  sampler.validate();
  if (!(learning_rate > 0.0)) throw std::invalid_argument("fit: learning rate must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("fit: moment decays must satisfy 0 <= beta < 1");
  }
  if (!(epsilon > 0.0)) throw std::invalid_argument("fit: epsilon must be > 0");
  if (epoch_iters < 1) throw std::invalid_argument("fit: iterations per epoch must be >= 1");
  if (max_bad_epochs < 0) throw std::invalid_argument("fit: max bad epochs must be >= 0");
  if (!(decay > 0.0 && decay < 1.0)) throw std::invalid_argument("fit: decay must be in (0, 1)");
  if (estimator_samples < 0) throw std::invalid_argument("fit: estimator count must be >= 0");
  if (max_epochs < 0) throw std::invalid_argument("fit: max epochs must be >= 0");
  if (threads < 1) throw std::invalid_argument("fit: threads must be >= 1");
}

void adam_step(KruskalModel& model, AdamState& state, const GradientSet& grads,
               const FitConfig& cfg) {
  const std::int64_t t_eff = state.iterations + 1;
  const double corr1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t_eff));
  const double corr2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t_eff));
  const std::optional<double> bound = cfg.lower_bound;
  for (int k = 0; k < model.ndims(); ++k) {
    const std::size_t ki = static_cast<std::size_t>(k);
    const Matrix& g = grads.modes[ki];
    Matrix& b = state.first_moment[ki];
    Matrix& c = state.second_moment[ki];
    b = cfg.beta1 * b + (1.0 - cfg.beta1) * g;
    c = cfg.beta2 * c + (1.0 - cfg.beta2) * g.cwiseProduct(g);
    Matrix& a = model.factor(k);
    a.array() -= state.learning_rate * (b.array() / corr1) /
                 ((c.array() / corr2) + cfg.epsilon).sqrt();
    if (bound.has_value()) a = a.cwiseMax(*bound);
  }
  ++state.iterations;
}

FitResult fit_gcp_adam(const TensorView& x, const LossFunction& loss, const FitConfig& cfg,
                       RngStream& rng) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();

  FitConfig effective = cfg;
  if (!effective.lower_bound.has_value()) effective.lower_bound = loss.default_lower_bound();

  RngStream init_rng = rng.split("init");
  RngStream estimator_rng = rng.split("estimator");
  RngStream gradient_rng = rng.split("gradients");

  KruskalModel model = KruskalModel::random_uniform(x.shape(), cfg.rank, init_rng);
  const double data_norm = x.norm();
  if (data_norm > 0.0) model.scale_norm_to(data_norm);

  std::function<double(const KruskalModel&)> estimate = cfg.estimate_override;
  EstimatorSamples est;
  if (!estimate) {
    const EstimatorSamples::Kind kind = cfg.estimator_kind.value_or(
        x.is_sparse() ? EstimatorSamples::Kind::kStratified : EstimatorSamples::Kind::kUniform);
    est = draw_estimator_samples(x, kind, cfg.estimator_samples, estimator_rng);
    estimate = [&est, &loss](const KruskalModel& m) { return est.estimate(m, loss); };
  }

  AdamState state = AdamState::init(model, cfg.learning_rate);

  double best_estimate = estimate(model);
  if (!std::isfinite(best_estimate)) {
    throw std::runtime_error("fit: initial loss estimate is not finite (" +
                             std::to_string(best_estimate) + ")");
  }

  // Snapshot for rollback: factors, moments, iteration counter, estimate.
  KruskalModel saved_model = model;
  std::vector<Matrix> saved_first = state.first_moment;
  std::vector<Matrix> saved_second = state.second_moment;
  std::int64_t saved_iterations = state.iterations;

  FitResult result;
  result.trace.records.push_back(
      {0, best_estimate, state.learning_rate, seconds_since(start), true});
  if (cfg.on_epoch) cfg.on_epoch(result.trace.records.back());

  for (std::int64_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto epoch_start = std::chrono::steady_clock::now();
    const double alpha_used = state.learning_rate;
    for (std::int64_t it = 0; it < cfg.epoch_iters; ++it) {
      const GradientSamples samples =
          draw_gradient_samples(x, model, loss, cfg.sampler, gradient_rng);
      const GradientSet grads = mttkrp_sampled_all(samples, model, cfg.threads);
      adam_step(model, state, grads, effective);
    }
    const double new_estimate = estimate(model);
    if (!std::isfinite(new_estimate)) {
      throw std::runtime_error("fit: loss estimate became non-finite at epoch " +
                               std::to_string(epoch));
    }
    const double secs = seconds_since(epoch_start);

    if (new_estimate <= best_estimate) {
      best_estimate = new_estimate;
      saved_model = model;
      saved_first = state.first_moment;
      saved_second = state.second_moment;
      saved_iterations = state.iterations;
      result.trace.records.push_back({epoch, new_estimate, alpha_used, secs, true});
      if (cfg.on_epoch) cfg.on_epoch(result.trace.records.back());
    } else {
      model = saved_model;
      state.first_moment = saved_first;
      state.second_moment = saved_second;
      state.iterations = saved_iterations;
      state.learning_rate *= cfg.decay;
      ++state.bad_epochs;
      result.trace.records.push_back({epoch, new_estimate, alpha_used, secs, false});
      if (cfg.on_epoch) cfg.on_epoch(result.trace.records.back());
      if (state.bad_epochs > cfg.max_bad_epochs) break;
    }
  }

  result.model = std::move(model);
  result.final_loss_estimate = best_estimate;
  result.final_state = std::move(state);
  return result;
}

FitResult fit_gcp_adam(const TensorView& x, const LossFunction& loss, const FitConfig& cfg) {
  RngStream rng(cfg.seed);
  return fit_gcp_adam(x, loss, cfg, rng);
}

}  // namespace gcp
