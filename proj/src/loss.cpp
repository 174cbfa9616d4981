#include "gcp/loss.hpp"

#include <cmath>
#include <stdexcept>

namespace gcp {

LossFunction LossFunction::gaussian() { return {LossKind::kGaussian, "gaussian"}; }
LossFunction LossFunction::poisson() { return {LossKind::kPoisson, "poisson"}; }
LossFunction LossFunction::bernoulli_odds() {
  return {LossKind::kBernoulliOdds, "bernoulli-odds"};
}
LossFunction LossFunction::gamma() { return {LossKind::kGamma, "gamma"}; }
LossFunction LossFunction::beta_half() { return {LossKind::kBetaHalf, "beta-half"}; }

LossFunction LossFunction::huber(double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("huber: delta must be > 0");
  return {LossKind::kHuber, "huber:" + std::to_string(delta), delta};
}

LossFunction LossFunction::parse(const std::string& token) {
  if (token == "gaussian") return gaussian();
  if (token == "poisson") return poisson();
  if (token == "bernoulli-odds") return bernoulli_odds();
  if (token == "gamma") return gamma();
  if (token == "beta-half") return beta_half();
  if (token.rfind("huber:", 0) == 0) {
    std::size_t pos = 0;
    double delta = 0.0;
    const std::string arg = token.substr(6);
    try {
      delta = std::stod(arg, &pos);
    } catch (const std::exception&) {
      throw std::invalid_argument("huber: bad delta '" + arg + "'");
    }
    if (pos != arg.size()) throw std::invalid_argument("huber: bad delta '" + arg + "'");
    return huber(delta);
  }
  throw std::invalid_argument("unknown loss '" + token + "'");
}

void LossFunction::check_domain(double x) const {
  switch (kind_) {
    case LossKind::kGaussian:
    case LossKind::kHuber:
      return;
    case LossKind::kPoisson:
    case LossKind::kGamma:
    case LossKind::kBetaHalf:
      if (!(x >= 0.0)) {
        throw std::domain_error(name_ + " loss: data value " + std::to_string(x) +
                                " out of domain (x >= 0 required)");
      }
      return;
    case LossKind::kBernoulliOdds:
      if (x != 0.0 && x != 1.0) {
        throw std::domain_error(name_ + " loss: data value " + std::to_string(x) +
                                " out of domain (x in {0,1} required)");
      }
      return;
  }
}

double LossFunction::value(double x, double m) const {
  check_domain(x);
  switch (kind_) {
    case LossKind::kGaussian:
      return (x - m) * (x - m);
    case LossKind::kPoisson:
      return m - x * std::log(m + kEps);
    case LossKind::kBernoulliOdds:
      return std::log(m + 1.0) - x * std::log(m + kEps);
    case LossKind::kGamma:
      return x / (m + kEps) + std::log(m + kEps);
    case LossKind::kBetaHalf: {
      const double s = std::sqrt(m + kEps);
      return 2.0 * s + 2.0 * x / s;
    }
    case LossKind::kHuber: {
      const double r = x - m;
      if (std::abs(r) <= delta_) return r * r;
      return 2.0 * delta_ * std::abs(r) - delta_ * delta_;
    }
  }
  return 0.0;
}

double LossFunction::deriv(double x, double m) const {
  check_domain(x);
  switch (kind_) {
    case LossKind::kGaussian:
      return 2.0 * (m - x);
    case LossKind::kPoisson:
      return 1.0 - x / (m + kEps);
    case LossKind::kBernoulliOdds:
      return 1.0 / (m + 1.0) - x / (m + kEps);
    case LossKind::kGamma:
      return 1.0 / (m + kEps) - x / ((m + kEps) * (m + kEps));
    case LossKind::kBetaHalf: {
      const double s = std::sqrt(m + kEps);
      return 1.0 / s - x / (s * s * s);
    }
    case LossKind::kHuber: {
      const double r = x - m;
      if (std::abs(r) <= delta_) return -2.0 * r;
      return r > 0.0 ? -2.0 * delta_ : 2.0 * delta_;
    }
  }
  return 0.0;
}

std::optional<double> LossFunction::default_lower_bound() const {
  switch (kind_) {
    case LossKind::kGaussian:
    case LossKind::kHuber:
      return std::nullopt;
    case LossKind::kPoisson:
    case LossKind::kBernoulliOdds:
    case LossKind::kGamma:
    case LossKind::kBetaHalf:
      return 0.0;
  }
  return std::nullopt;
}

}  // namespace gcp
