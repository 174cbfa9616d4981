#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "gcp/kernels.hpp"
#include "gcp/kruskal.hpp"
#include "gcp/loss.hpp"
#include "gcp/samplers.hpp"
#include "gcp/tensor.hpp"

namespace gcp {

class RngStream;

/// Adam bookkeeping across iterations: per-mode moment matrices, the
/// iteration counter, the current learning rate, and the failed-epoch count.
struct AdamState {
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
  std::int64_t iterations = 0;
  double learning_rate = 0.0;
  std::int64_t bad_epochs = 0;

  static AdamState init(const KruskalModel& model, double alpha0);
};

struct FitTraceRecord {
  std::int64_t epoch = 0;
  double loss_estimate = 0.0;
  double learning_rate = 0.0;
  double seconds = 0.0;
  bool accepted = true;
};

struct FitTrace {
  std::vector<FitTraceRecord> records;
};

struct FitConfig {
  std::int64_t rank = 2;
  SamplerKind sampler;
  double learning_rate = 0.01;       // alpha_0
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::int64_t epoch_iters = 1000;   // iterations per epoch
  std::int64_t max_bad_epochs = 1;   // failures tolerated before stopping
  double decay = 0.1;                // learning-rate multiplier on failure
  std::optional<double> lower_bound; // empty: use the loss's default bound
  std::int64_t estimator_samples = 100000;
  std::optional<EstimatorSamples::Kind> estimator_kind;  // empty: by tensor kind
  std::int64_t max_epochs = 100;
  std::uint64_t seed = 0;
  int threads = 1;

  /// Replaces the sampled loss estimator when set (diagnostics and tests).
  std::function<double(const KruskalModel&)> estimate_override;
  /// Called after each trace record is appended, including epoch 0.
  std::function<void(const FitTraceRecord&)> on_epoch;

  void validate() const;
};

struct FitResult {
  KruskalModel model;
  FitTrace trace;
  double final_loss_estimate = 0.0;
  AdamState final_state;
};

/// One Adam iteration over every mode: moment updates, bias-corrected step
/// with epsilon inside the square root, then projection onto the lower
/// bound. Bias corrections divide by (1 - beta^(t+1)) so the first
/// iteration is well defined; the counter increments once per call, after
/// all modes.
void adam_step(KruskalModel& model, AdamState& state, const GradientSet& grads,
               const FitConfig& cfg);

/// Epoch-based stochastic fit. Factors start uniform(0,1), rescaled so the
/// model norm matches the data norm; the loss estimate runs on one fixed
/// sample set drawn up front. Each epoch runs cfg.epoch_iters iterations;
/// an epoch that raises the estimate is rolled back (factors, moments,
/// iteration counter, and estimate restored from the pre-epoch snapshot),
/// the learning rate decays, and the failure count increments. Stops after
/// cfg.max_epochs epochs or once failures exceed cfg.max_bad_epochs.
FitResult fit_gcp_adam(const TensorView& x, const LossFunction& loss, const FitConfig& cfg,
                       RngStream& rng);

/// Seeds a fresh root stream from cfg.seed.
FitResult fit_gcp_adam(const TensorView& x, const LossFunction& loss, const FitConfig& cfg);

}  // namespace gcp
