#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "gcp/io.hpp"
#include "gcp/kernels.hpp"
#include "gcp/kruskal.hpp"
#include "gcp/loss.hpp"
#include "gcp/optimizer.hpp"
#include "gcp/rng.hpp"
#include "gcp/samplers.hpp"
#include "gcp/scoring.hpp"
#include "gcp/synthetic.hpp"
#include "gcp/tensor.hpp"

namespace {

using nlohmann::json;

/// Flag-level misuse detected after CLI11 parsing (exit code 2, like parse
/// errors), as opposed to runtime failures (exit code 1).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

struct LoadedTensor {
  std::optional<gcp::SparseTensor> sparse;
  std::optional<gcp::DenseTensor> dense;

  bool is_sparse() const { return sparse.has_value(); }
  gcp::TensorView view() const {
    return sparse ? gcp::TensorView(*sparse) : gcp::TensorView(*dense);
  }
};

LoadedTensor load_tensor(const std::string& path) {
  LoadedTensor out;
  if (ends_with(path, ".tns")) {
    out.sparse = gcp::read_tns(path);
  } else {
    out.dense = gcp::read_dense(path);
  }
  return out;
}

void check_data_domain(const LoadedTensor& x, const gcp::LossFunction& loss) {
  if (x.is_sparse()) {
    for (std::int64_t e = 0; e < x.sparse->nnz(); ++e) loss.check_domain(x.sparse->value(e));
    if (x.sparse->zero_count() > 0) loss.check_domain(0.0);
  } else {
    for (double v : x.dense->values()) loss.check_domain(v);
  }
}

gcp::Shape parse_shape(const std::string& text) {
  std::vector<std::int64_t> dims;
  std::string token;
  for (char c : text + "x") {
    if (c == 'x' || c == 'X' || c == ',') {
      if (!token.empty()) {
        try {
          dims.push_back(std::stoll(token));
        } catch (const std::exception&) {
          throw UsageError("bad shape component '" + token + "'");
        }
        token.clear();
      }
    } else {
      token += c;
    }
  }
  if (dims.empty()) throw UsageError("empty shape '" + text + "'");
  return gcp::Shape(dims);
}

int resolve_threads(int threads, bool deterministic) {
  if (deterministic) return 1;
  if (threads > 0) return threads;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

gcp::KruskalModel initial_model(const gcp::TensorView& x, std::int64_t rank,
                                std::uint64_t seed) {
  gcp::RngStream root(seed);
  gcp::RngStream init = root.split("init");
  gcp::KruskalModel model = gcp::KruskalModel::random_uniform(x.shape(), rank, init);
  const double norm = x.norm();
  if (norm > 0.0) model.scale_norm_to(norm);
  return model;
}

struct FitArgs {
  std::string input;
  std::string loss;
  std::string sampler;
  std::string estimator;
  std::string output;
  std::string trace;
  std::string config;
  std::int64_t rank = 2;
  std::int64_t samples = 0;
  std::int64_t nonzero_samples = -1;
  std::int64_t zero_samples = -1;
  double oversample = 1.1;
  double alpha = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::int64_t epoch_iters = 1000;
  std::int64_t max_bad_epochs = 1;
  double decay = 0.1;
  double lower_bound = 0.0;
  bool lower_bound_set = false;
  std::int64_t estimator_samples = 100000;
  std::int64_t max_epochs = 100;
  std::uint64_t seed = 0;
  int threads = 0;
  bool deterministic = false;
  bool quiet = false;
};

/// Fills any option the command line left at its default from the JSON
/// config; keys are the long flag names without the leading dashes.
void apply_fit_config(CLI::App& cmd, FitArgs& args) {
  std::ifstream in(args.config);
  if (!in) throw UsageError("config: cannot open '" + args.config + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw UsageError("config: " + std::string(e.what()));
  }
  if (!doc.is_object()) throw UsageError("config: top level must be a JSON object");

  const auto unset = [&cmd](const std::string& flag) {
    return cmd.count("--" + flag) == 0;
  };
  for (const auto& [key, value] : doc.items()) {
    try {
      if (key == "input") { if (unset(key)) args.input = value.get<std::string>(); }
      else if (key == "loss") { if (unset(key)) args.loss = value.get<std::string>(); }
      else if (key == "sampler") { if (unset(key)) args.sampler = value.get<std::string>(); }
      else if (key == "estimator") { if (unset(key)) args.estimator = value.get<std::string>(); }
      else if (key == "output") { if (unset(key)) args.output = value.get<std::string>(); }
      else if (key == "trace") { if (unset(key)) args.trace = value.get<std::string>(); }
      else if (key == "rank") { if (unset(key)) args.rank = value.get<std::int64_t>(); }
      else if (key == "samples") { if (unset(key)) args.samples = value.get<std::int64_t>(); }
      else if (key == "nonzero-samples") { if (unset(key)) args.nonzero_samples = value.get<std::int64_t>(); }
      else if (key == "zero-samples") { if (unset(key)) args.zero_samples = value.get<std::int64_t>(); }
      else if (key == "oversample") { if (unset(key)) args.oversample = value.get<double>(); }
      else if (key == "alpha") { if (unset(key)) args.alpha = value.get<double>(); }
      else if (key == "beta1") { if (unset(key)) args.beta1 = value.get<double>(); }
      else if (key == "beta2") { if (unset(key)) args.beta2 = value.get<double>(); }
      else if (key == "adam-eps") { if (unset(key)) args.adam_eps = value.get<double>(); }
      else if (key == "epoch-iters") { if (unset(key)) args.epoch_iters = value.get<std::int64_t>(); }
      else if (key == "max-bad-epochs") { if (unset(key)) args.max_bad_epochs = value.get<std::int64_t>(); }
      else if (key == "decay") { if (unset(key)) args.decay = value.get<double>(); }
      else if (key == "lower-bound") {
        if (unset(key)) { args.lower_bound = value.get<double>(); args.lower_bound_set = true; }
      }
      else if (key == "estimator-samples") { if (unset(key)) args.estimator_samples = value.get<std::int64_t>(); }
      else if (key == "max-epochs") { if (unset(key)) args.max_epochs = value.get<std::int64_t>(); }
      else if (key == "seed") { if (unset(key)) args.seed = value.get<std::uint64_t>(); }
      else if (key == "threads") { if (unset(key)) args.threads = value.get<int>(); }
      else if (key == "deterministic") { if (unset(key)) args.deterministic = value.get<bool>(); }
      else if (key == "quiet") { if (unset(key)) args.quiet = value.get<bool>(); }
      else {
        throw UsageError("config: unknown key '" + key + "'");
      }
    } catch (const json::exception& e) {
      throw UsageError("config: bad value for '" + key + "': " + e.what());
    }
  }
}

gcp::SamplerKind build_sampler(const CLI::App& cmd, const FitArgs& args, bool sparse_input,
                               std::int64_t default_total) {
  std::string token = args.sampler;
  if (token.empty()) token = sparse_input ? "stratified" : "uniform";

  std::int64_t total = args.samples > 0 ? args.samples : default_total;
  gcp::SamplerKind kind = gcp::SamplerKind::from_token(token, total);

  const bool pq_given = args.nonzero_samples >= 0 || args.zero_samples >= 0;
  if (kind.strategy == gcp::SamplerKind::Strategy::kUniform) {
    if (pq_given) {
      throw UsageError("uniform sampler takes --samples; --nonzero-samples/--zero-samples "
                       "apply to the stratified kinds");
    }
  } else {
    if (!sparse_input) {
      throw UsageError(token + " sampling requires sparse (.tns) input");
    }
    if (args.nonzero_samples >= 0) kind.nonzero_samples = args.nonzero_samples;
    if (args.zero_samples >= 0) kind.zero_samples = args.zero_samples;
    kind.oversample = args.oversample;
  }
  (void)cmd;
  kind.validate();
  return kind;
}

int cmd_fit(CLI::App& cmd, FitArgs& args) {
  if (cmd.count("--lower-bound") > 0) args.lower_bound_set = true;
  if (!args.config.empty()) apply_fit_config(cmd, args);
  if (args.input.empty()) throw UsageError("fit: --input is required");
  if (args.loss.empty()) throw UsageError("fit: --loss is required");

  gcp::LossFunction loss = gcp::LossFunction::parse(args.loss);
  const LoadedTensor x = load_tensor(args.input);
  check_data_domain(x, loss);

  gcp::FitConfig cfg;
  cfg.rank = args.rank;
  cfg.sampler = build_sampler(cmd, args, x.is_sparse(), x.view().shape().dim_sum());
  cfg.learning_rate = args.alpha;
  cfg.beta1 = args.beta1;
  cfg.beta2 = args.beta2;
  cfg.epsilon = args.adam_eps;
  cfg.epoch_iters = args.epoch_iters;
  cfg.max_bad_epochs = args.max_bad_epochs;
  cfg.decay = args.decay;
  if (args.lower_bound_set) cfg.lower_bound = args.lower_bound;
  cfg.estimator_samples = args.estimator_samples;
  if (!args.estimator.empty()) {
    if (args.estimator == "uniform") {
      cfg.estimator_kind = gcp::EstimatorSamples::Kind::kUniform;
    } else if (args.estimator == "stratified") {
      if (!x.is_sparse()) throw UsageError("stratified estimator requires sparse (.tns) input");
      cfg.estimator_kind = gcp::EstimatorSamples::Kind::kStratified;
    } else {
      throw UsageError("unknown estimator '" + args.estimator +
                       "' (expected uniform or stratified)");
    }
  }
  cfg.max_epochs = args.max_epochs;
  cfg.seed = args.seed;
  cfg.threads = resolve_threads(args.threads, args.deterministic);
  if (!args.quiet) {
    cfg.on_epoch = [](const gcp::FitTraceRecord& rec) {
      std::fprintf(stderr, "epoch %lld: loss=%.6g alpha=%.3g (%.2fs)%s\n",
                   static_cast<long long>(rec.epoch), rec.loss_estimate, rec.learning_rate,
                   rec.seconds, rec.accepted ? "" : " [rolled back]");
    };
  }

  const gcp::FitResult result = gcp::fit_gcp_adam(x.view(), loss, cfg);

  if (!args.output.empty()) gcp::write_model(result.model, args.output);
  if (!args.trace.empty()) gcp::write_trace_csv(result.trace, args.trace);
  std::cout << "final_loss_estimate: " << fmt17(result.final_loss_estimate) << "\n";
  return 0;
}

struct GenerateArgs {
  std::string kind;
  std::string shape;
  std::string output;
  std::string truth;
  std::int64_t rank = 2;
  double delta = 0.15;
  double p_high = 0.9;
  double p_low = 0.0025;
  std::uint64_t seed = 0;
};

int cmd_generate(const GenerateArgs& args) {
  const gcp::Shape shape = parse_shape(args.shape);
  gcp::RngStream rng(args.seed);

  if (args.kind == "gamma") {
    if (!ends_with(args.output, ".tns")) {
      auto [data, truth] = gcp::gen_gamma_problem(shape, args.rank, rng);
      gcp::write_dense(data, args.output);
      if (!args.truth.empty()) gcp::write_model(truth, args.truth);
      std::fprintf(stderr, "wrote dense tensor (%s entries) to %s\n",
                   gcp::to_string(shape.total()).c_str(), args.output.c_str());
      return 0;
    }
    throw UsageError("gamma problems are dense; --output must not end in .tns");
  }
  if (args.kind == "binary") {
    if (!ends_with(args.output, ".tns")) {
      throw UsageError("binary problems are sparse; --output must end in .tns");
    }
    gcp::BinaryProblemSpec spec;
    spec.shape = shape;
    spec.rank = args.rank;
    spec.delta = args.delta;
    spec.p_high = args.p_high;
    spec.p_low = args.p_low;
    auto [data, truth] = gcp::gen_binary_problem(spec, rng);
    gcp::write_tns(data, args.output);
    if (!args.truth.empty()) gcp::write_model(truth, args.truth);
    const double density =
        static_cast<double>(data.nnz()) / shape.total_as_double();
    std::fprintf(stderr, "wrote sparse tensor (%lld nonzeros, density %.4g%%) to %s\n",
                 static_cast<long long>(data.nnz()), 100.0 * density, args.output.c_str());
    return 0;
  }
  throw UsageError("unknown problem kind '" + args.kind + "' (expected gamma or binary)");
}

struct ScoreArgs {
  std::string model;
  std::string truth;
};

int cmd_score(const ScoreArgs& args) {
  const gcp::KruskalModel estimated = gcp::read_model(args.model);
  const gcp::KruskalModel truth = gcp::read_model(args.truth);
  const double score = gcp::cosine_similarity_score(estimated, truth);
  std::cout << "similarity: " << fmt17(score) << "\n";
  std::cout << "recovered: " << (score >= gcp::kRecoveryThreshold ? "yes" : "no") << "\n";
  return 0;
}

struct GradcheckArgs {
  std::string input;
  std::string loss;
  std::string sampler;
  std::int64_t rank = 2;
  std::int64_t samples = 0;
  std::int64_t nonzero_samples = -1;
  std::int64_t zero_samples = -1;
  double oversample = 1.1;
  std::int64_t trials = 2000;
  std::uint64_t seed = 0;
};

int cmd_gradcheck(CLI::App& cmd, const GradcheckArgs& args) {
  gcp::LossFunction loss = gcp::LossFunction::parse(args.loss);
  const LoadedTensor x = load_tensor(args.input);
  check_data_domain(x, loss);

  FitArgs fit_like;
  fit_like.sampler = args.sampler;
  fit_like.samples = args.samples;
  fit_like.nonzero_samples = args.nonzero_samples;
  fit_like.zero_samples = args.zero_samples;
  fit_like.oversample = args.oversample;
  const gcp::SamplerKind kind =
      build_sampler(cmd, fit_like, x.is_sparse(), x.view().shape().dim_sum());

  const gcp::KruskalModel model = initial_model(x.view(), args.rank, args.seed);
  const gcp::GradientSet exact = gcp::gradient_full(x.view(), model, loss);
  gcp::RngStream root(args.seed);
  gcp::RngStream trial_rng = root.split("gradcheck");
  const gcp::BiasVariance bv =
      gcp::empirical_bias_variance(kind, x.view(), model, loss, args.trials, trial_rng);
  const double exact_norm = exact.flatten().norm();
  const double rel = exact_norm > 0.0 ? bv.bias / exact_norm : bv.bias;
  std::cout << "relative_error: " << fmt17(rel) << "\n";
  return 0;
}

struct VarianceArgs {
  std::string input;
  std::string loss;
  std::int64_t rank = 2;
  std::int64_t samples = 0;
  std::int64_t trials = 1000;
  std::uint64_t seed = 0;
};

int cmd_variance(const VarianceArgs& args) {
  gcp::LossFunction loss = gcp::LossFunction::parse(args.loss);
  const LoadedTensor x = load_tensor(args.input);
  check_data_domain(x, loss);

  const std::int64_t total =
      args.samples > 0 ? args.samples : x.view().shape().dim_sum();
  const gcp::KruskalModel model = initial_model(x.view(), args.rank, args.seed);
  gcp::RngStream root(args.seed);

  std::vector<std::string> tokens = {"uniform"};
  if (x.is_sparse()) {
    tokens.emplace_back("stratified");
    tokens.emplace_back("semi-stratified");
  }
  std::cout << "sampler,bias,variance\n";
  for (const std::string& token : tokens) {
    const gcp::SamplerKind kind = gcp::SamplerKind::from_token(token, total);
    gcp::RngStream rng = root.split(token);
    const gcp::BiasVariance bv =
        gcp::empirical_bias_variance(kind, x.view(), model, loss, args.trials, rng);
    std::cout << token << ',' << fmt17(bv.bias) << ',' << fmt17(bv.variance) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generalized CP tensor decomposition via stochastic gradient descent"};
  app.require_subcommand(1);

  FitArgs fit_args;
  CLI::App* fit = app.add_subcommand("fit", "Fit a low-rank model to a tensor");
  fit->add_option("--input", fit_args.input, "Input tensor (.tns sparse, else dense binary)");
  fit->add_option("--loss", fit_args.loss,
                  "Loss: gaussian|poisson|bernoulli-odds|gamma|beta-half|huber:<delta>");
  fit->add_option("--rank", fit_args.rank, "Decomposition rank");
  fit->add_option("--sampler", fit_args.sampler,
                  "uniform|stratified|semi-stratified (default: stratified for sparse, "
                  "uniform for dense)");
  fit->add_option("--samples", fit_args.samples,
                  "Gradient samples per iteration (default: sum of mode sizes)");
  fit->add_option("--nonzero-samples", fit_args.nonzero_samples,
                  "Nonzero-stratum samples (stratified kinds)");
  fit->add_option("--zero-samples", fit_args.zero_samples,
                  "Zero-stratum samples (stratified kinds)");
  fit->add_option("--oversample", fit_args.oversample,
                  "Rejection batch oversampling factor (> 1)");
  fit->add_option("--alpha", fit_args.alpha, "Initial learning rate");
  fit->add_option("--beta1", fit_args.beta1, "First-moment decay");
  fit->add_option("--beta2", fit_args.beta2, "Second-moment decay");
  fit->add_option("--adam-eps", fit_args.adam_eps, "Adam epsilon (inside the square root)");
  fit->add_option("--epoch-iters", fit_args.epoch_iters, "Iterations per epoch");
  fit->add_option("--max-bad-epochs", fit_args.max_bad_epochs,
                  "Failed epochs tolerated before stopping");
  fit->add_option("--decay", fit_args.decay, "Learning-rate decay on a failed epoch");
  fit->add_option("--lower-bound", fit_args.lower_bound,
                  "Factor lower bound (default: the loss's natural bound)");
  fit->add_option("--estimator", fit_args.estimator,
                  "Loss-estimator sampling: uniform|stratified (default: stratified for "
                  "sparse, uniform for dense)");
  fit->add_option("--estimator-samples", fit_args.estimator_samples,
                  "Fixed sample count for the loss estimate");
  fit->add_option("--max-epochs", fit_args.max_epochs, "Epoch cap");
  fit->add_option("--seed", fit_args.seed, "RNG seed (all randomness derives from it)");
  fit->add_option("--threads", fit_args.threads, "Gradient kernel threads (0 = hardware)");
  fit->add_flag("--deterministic", fit_args.deterministic, "Force single-threaded kernels");
  fit->add_flag("--quiet", fit_args.quiet, "Suppress per-epoch progress on stderr");
  fit->add_option("--output", fit_args.output, "Write the fitted model here");
  fit->add_option("--trace", fit_args.trace, "Write the per-epoch trace CSV here");
  fit->add_option("--config", fit_args.config,
                  "JSON object supplying any unset flags (keys = flag names)");

  GenerateArgs gen_args;
  CLI::App* gen = app.add_subcommand("generate", "Generate a synthetic problem");
  gen->add_option("--kind", gen_args.kind, "gamma (dense) or binary (sparse)")->required();
  gen->add_option("--shape", gen_args.shape, "Tensor shape, e.g. 20x15x10")->required();
  gen->add_option("--rank", gen_args.rank, "Ground-truth rank");
  gen->add_option("--delta", gen_args.delta, "Binary: sparse-column density in (0, 0.5)");
  gen->add_option("--p-high", gen_args.p_high, "Binary: one-probability at structure");
  gen->add_option("--p-low", gen_args.p_low, "Binary: background one-probability");
  gen->add_option("--seed", gen_args.seed, "RNG seed");
  gen->add_option("--output", gen_args.output, "Data path (.tns for binary)")->required();
  gen->add_option("--truth", gen_args.truth, "Also write the generating model here");

  ScoreArgs score_args;
  CLI::App* score = app.add_subcommand("score", "Score a fitted model against a truth model");
  score->add_option("--model", score_args.model, "Fitted model path")->required();
  score->add_option("--truth", score_args.truth, "Truth model path")->required();

  GradcheckArgs gc_args;
  CLI::App* gradcheck = app.add_subcommand(
      "gradcheck", "Compare a sampler's mean gradient against the exact gradient");
  gradcheck->add_option("--input", gc_args.input, "Input tensor")->required();
  gradcheck->add_option("--loss", gc_args.loss, "Loss token")->required();
  gradcheck->add_option("--rank", gc_args.rank, "Model rank");
  gradcheck->add_option("--sampler", gc_args.sampler, "Sampler token");
  gradcheck->add_option("--samples", gc_args.samples, "Samples per draw");
  gradcheck->add_option("--nonzero-samples", gc_args.nonzero_samples, "Nonzero-stratum samples");
  gradcheck->add_option("--zero-samples", gc_args.zero_samples, "Zero-stratum samples");
  gradcheck->add_option("--oversample", gc_args.oversample, "Rejection oversampling factor");
  gradcheck->add_option("--trials", gc_args.trials, "Number of independent draws");
  gradcheck->add_option("--seed", gc_args.seed, "RNG seed");

  VarianceArgs var_args;
  CLI::App* variance = app.add_subcommand(
      "variance", "Empirical bias/variance of each applicable sampler");
  variance->add_option("--input", var_args.input, "Input tensor")->required();
  variance->add_option("--loss", var_args.loss, "Loss token")->required();
  variance->add_option("--rank", var_args.rank, "Model rank");
  variance->add_option("--samples", var_args.samples,
                       "Total samples per draw (default: sum of mode sizes)");
  variance->add_option("--trials", var_args.trials, "Number of independent draws");
  variance->add_option("--seed", var_args.seed, "RNG seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (fit->parsed()) return cmd_fit(*fit, fit_args);
    if (gen->parsed()) return cmd_generate(gen_args);
    if (score->parsed()) return cmd_score(score_args);
    if (gradcheck->parsed()) return cmd_gradcheck(*gradcheck, gc_args);
    if (variance->parsed()) return cmd_variance(var_args);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    // Library preconditions (loss tokens, ranks, sample budgets) are flag
    // misuse; bad data or files surface as runtime/domain errors instead.
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
