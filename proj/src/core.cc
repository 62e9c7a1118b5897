#include "varbandit/core.h"

#include <cmath>
#include <string>

#include "varbandit/errors.h"

namespace varbandit {
namespace {

void check_unit_interval(const std::vector<double>& values, const char* what) {
  for (double v : values) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ArgumentError(std::string(what) + " must lie in [0, 1], got " +
                          std::to_string(v));
    }
  }
}

std::size_t checked_count(std::size_t total, std::size_t n_contexts,
                          std::size_t n_actions, const char* what) {
  if (n_contexts == 0) throw ArgumentError("need at least one context");
  if (n_actions < 2) throw ArgumentError("need at least two actions");
  const std::size_t per = n_contexts * n_actions;
  if (total == 0 || total % per != 0) {
    throw ArgumentError(std::string(what) + " table size " +
                        std::to_string(total) + " is not a positive multiple of " +
                        std::to_string(per));
  }
  return total / per;
}

}  // namespace

std::size_t argmax_lowest(std::span<const double> values) {
  if (values.empty()) throw ArgumentError("argmax of an empty range");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

FiniteFunctionClass::FiniteFunctionClass(std::size_t n_contexts,
                                         std::size_t n_actions,
                                         std::vector<double> values,
                                         FunctionId star_index)
    : n_functions_(checked_count(values.size(), n_contexts, n_actions,
                                 "function value")),
      n_contexts_(n_contexts),
      n_actions_(n_actions),
      values_(std::move(values)),
      star_index_(star_index) {
  check_unit_interval(values_, "function values");
  if (star_index_ >= n_functions_) {
    throw ArgumentError("star_index " + std::to_string(star_index_) +
                        " out of range for " + std::to_string(n_functions_) +
                        " functions");
  }
}

FiniteFunctionClass FiniteFunctionClass::with_star(FunctionId star) const {
  return FiniteFunctionClass(n_contexts_, n_actions_, values_, star);
}

void FiniteFunctionClass::check_indices(FunctionId f, ContextId x) const {
  if (f >= n_functions_) {
    throw ArgumentError("function id " + std::to_string(f) + " out of range");
  }
  if (x >= n_contexts_) {
    throw ArgumentError("context id " + std::to_string(x) + " out of range");
  }
}

void FiniteFunctionClass::check_indices(FunctionId f, ContextId x,
                                        ActionId a) const {
  check_indices(f, x);
  if (a >= n_actions_) {
    throw ArgumentError("action id " + std::to_string(a) + " out of range");
  }
}

GaussianModelClass::GaussianModelClass(std::size_t n_contexts,
                                       std::size_t n_actions,
                                       std::vector<double> means,
                                       std::vector<double> stds,
                                       ModelId star_index)
    : n_models_(checked_count(means.size(), n_contexts, n_actions, "mean")),
      n_contexts_(n_contexts),
      n_actions_(n_actions),
      means_(std::move(means)),
      stds_(std::move(stds)),
      star_index_(star_index) {
  if (stds_.size() != means_.size()) {
    throw ArgumentError("means and stds tables differ in size");
  }
  check_unit_interval(means_, "model means");
  check_unit_interval(stds_, "model stds");
  if (star_index_ >= n_models_) {
    throw ArgumentError("star_index " + std::to_string(star_index_) +
                        " out of range for " + std::to_string(n_models_) +
                        " models");
  }
}

FiniteFunctionClass GaussianModelClass::mean_class() const {
  return FiniteFunctionClass(n_contexts_, n_actions_, means_, star_index_);
}

GaussianModelClass GaussianModelClass::with_star(ModelId star) const {
  return GaussianModelClass(n_contexts_, n_actions_, means_, stds_, star);
}

TwoPointDistribution two_point(double sigma, TwoPointKind kind,
                               double epsilon) {
  if (!(sigma > 0.0 && sigma <= 0.5)) {
    throw ArgumentError("two-point scale must lie in (0, 1/2]");
  }
  if (!(epsilon >= 0.0 && epsilon <= sigma / 2.0)) {
    throw ArgumentError("two-point gap must lie in [0, sigma/2]");
  }
  switch (kind) {
    case TwoPointKind::kCenter:
      return {sigma, 0.5};
    case TwoPointKind::kPlus:
      return {sigma, (sigma + epsilon) / (2.0 * sigma)};
    case TwoPointKind::kMinus:
      return {sigma, (sigma - epsilon) / (2.0 * sigma)};
  }
  throw ArgumentError("unknown two-point kind");
}

double kl_two_point(const TwoPointDistribution& p_minus,
                    const TwoPointDistribution& p_plus) {
  if (p_minus.sigma != p_plus.sigma) {
    throw ArgumentError("two-point laws have different supports");
  }
  auto term = [](double p, double q) -> double {
    if (p == 0.0) return 0.0;
    if (q == 0.0) return INFINITY;
    return p * std::log(p / q);
  };
  const double p = p_minus.p_high;
  const double q = p_plus.p_high;
  return term(p, q) + term(1.0 - p, 1.0 - q);
}

double hellinger_sq_gaussian(double mu1, double sigma1, double mu2,
                             double sigma2) {
  if (!(sigma1 > 0.0) || !(sigma2 > 0.0)) {
    throw ArgumentError("Gaussian standard deviations must be positive");
  }
  const double v = sigma1 * sigma1 + sigma2 * sigma2;
  const double d = mu1 - mu2;
  const double affinity =
      std::sqrt(2.0 * sigma1 * sigma2 / v) * std::exp(-d * d / (4.0 * v));
  const double h = 1.0 - affinity;
  return h < 0.0 ? 0.0 : (h > 1.0 ? 1.0 : h);
}

ActionId best_action(const FiniteFunctionClass& cls, FunctionId f,
                     ContextId x) {
  cls.check_indices(f, x);
  return argmax_lowest(cls.row(f, x));
}

std::string to_string(Branch branch) {
  switch (branch) {
    case Branch::kDiscriminative:
      return "DISCRIMINATIVE";
    case Branch::kIgw:
      return "IGW";
    case Branch::kUcb:
      return "UCB";
    case Branch::kLayer:
      return "LAYER";
    case Branch::kPlain:
      return "PLAIN";
  }
  return "UNKNOWN";
}

void RegretTrace::push(const RoundRecord& record, double regret,
                       double variance, double var_max, double var_played) {
  ++n_rounds;
  total_regret += regret;
  lambda += variance;
  lambda_inf += var_max;
  lambda_circ += var_played;
  if (!keep_rounds) return;
  records.push_back(record);
  inst_regret.push_back(regret);
  cum_regret.push_back(total_regret);
  cum_variance.push_back(lambda);
  cum_var_max.push_back(lambda_inf);
  cum_var_played.push_back(lambda_circ);
}

}  // namespace varbandit
