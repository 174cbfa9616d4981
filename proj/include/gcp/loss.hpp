#pragma once

#include <optional>
#include <string>

namespace gcp {

enum class LossKind {
  kGaussian,
  kPoisson,
  kBernoulliOdds,
  kGamma,
  kBetaHalf,
  kHuber,
};

/// Elementwise loss f(x, m) and its partial derivative g = df/dm. Losses
/// whose natural domain is m > 0 shift m by a small eps inside logs and
/// denominators so m = 0 stays finite; the shift is applied identically in
/// value() and deriv(), keeping deriv() the exact derivative of value().
class LossFunction {
public:
  static constexpr double kEps = 1e-10;

  static LossFunction gaussian();
  static LossFunction poisson();
  static LossFunction bernoulli_odds();
  static LossFunction gamma();
  static LossFunction beta_half();
  static LossFunction huber(double delta);

  /// Accepts: gaussian, poisson, bernoulli-odds, gamma, beta-half,
  /// huber:<delta>. Throws std::invalid_argument otherwise.
  static LossFunction parse(const std::string& token);

  LossKind kind() const { return kind_; }
  const std::string& name() const { return name_; }

  double value(double x, double m) const;
  double deriv(double x, double m) const;

  /// Throws std::domain_error when a data value lies outside the loss's
  /// domain (also checked on every value/deriv evaluation).
  void check_domain(double x) const;

  /// Lower bound for factor entries (projection target), when the loss
  /// requires a nonnegative model.
  std::optional<double> default_lower_bound() const;

private:
  LossFunction(LossKind kind, std::string name, double delta = 0.0)
      : kind_(kind), name_(std::move(name)), delta_(delta) {}

  LossKind kind_;
  std::string name_;
  double delta_;  // huber transition half-width
};

}  // namespace gcp
