#pragma once

// Online regression oracles over a finite class: the Prod aggregator with the
// linearized surrogate loss, exhaustive weighted least squares, and
// log-domain exponential weights with an infeasibility sentinel.

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "varbandit/core.h"

namespace varbandit {

using Mask = std::vector<bool>;

std::size_t mask_count(const Mask& mask);

// Result of one Prod step, kept for audits.
struct ProdStep {
  double prediction = 0.0;       // f_t(x_t, a_t)
  std::vector<double> losses;    // surrogate loss per function (0 if inactive)
  double aggregated_loss = 0.0;  // sum_f q_t(f) * loss(f); zero in exact math
};

// Prod aggregation: q_{t+1}(f) is proportional to q_t(f) (1 - eta * loss_t(f))
// restricted to the next active set, with
//   loss_t(f) = 2 (f(x,a) - f_t(x,a)) (f_t(x,a) - r).
// Weights are stored as logs and renormalized every step.
class ProdOracle {
 public:
  ProdOracle(Mask active, double eta);

  double eta() const { return eta_; }
  const Mask& active() const { return active_; }
  // Normalized q_t; zero outside the active set.
  std::vector<double> weights() const;
  const std::vector<double>& log_weights() const { return log_weights_; }

  // f_t(x, .) for every action.
  std::vector<double> predict(const FiniteFunctionClass& cls,
                              ContextId x) const;

  // Applies the multiplicative update and restricts to `next_active`, which
  // must be a nonempty subset of the current active set. Throws
  // ContractError when eta * |loss| exceeds 1/2 for an active function.
  ProdStep update(const FiniteFunctionClass& cls, ContextId x, ActionId a,
                  double r, const Mask& next_active);

  // Drops functions outside `next_active` and renormalizes, with no loss.
  void restrict(const Mask& next_active);

  // Replace the state wholesale (tests that hand-set weights).
  void set_weights(std::span<const double> q);

 private:
  void normalize();

  double eta_;
  Mask active_;
  std::vector<double> log_weights_;
};

// Both sides of the Prod regret inequality for arbitrary losses:
//   lhs = sum_t sum_f q_t(f) loss_t(f) - sum_t loss_t(f*)
//   rhs = log|F| / eta + eta * sum_t loss_t(f*)^2
// masks[t] is F_t and must be nested; f* must survive in the last mask.
std::pair<double, double> prod_regret_audit(
    const std::vector<std::vector<double>>& losses, double eta,
    const std::vector<Mask>& masks, FunctionId fstar);

struct WeightedSample {
  ContextId x = 0;
  ActionId a = 0;
  double r = 0.0;
  double w = 0.0;
};

// Lowest-index minimizer of sum w (f(x,a) - r)^2 over the mask.
FunctionId weighted_least_squares(const FiniteFunctionClass& cls,
                                  const Mask& mask,
                                  std::span<const WeightedSample> rounds);

// Incremental per-function weighted squared residuals, so that the weighted
// least-squares argmin costs O(|F|) per round.
class ResidualAccumulator {
 public:
  explicit ResidualAccumulator(std::size_t n_functions)
      : sums_(n_functions, 0.0) {}

  void add(const FiniteFunctionClass& cls, const WeightedSample& sample);
  FunctionId argmin(const Mask& mask) const;
  double objective(FunctionId f) const { return sums_[f]; }

 private:
  std::vector<double> sums_;
};

// Exponential weights q(f) proportional to exp(-L(f)); L = +inf marks a
// function contradicted by a noiseless observation. Such functions never
// come back.
class ExpWeights {
 public:
  // Absolute tolerance for matching a noiseless reward.
  static constexpr double kMatchTolerance = 1e-9;

  explicit ExpWeights(std::size_t n_functions)
      : cumulative_(n_functions, 0.0) {}

  // Adds scale * (f(x,a) - r)^2 to every feasible function.
  void add_squared_loss(const FiniteFunctionClass& cls, ContextId x,
                        ActionId a, double r, double scale = 1.0);

  // The zero-one variance update: sigma = 1 adds the squared residual,
  // sigma = 0 marks every function not matching r infeasible.
  void update_zero_one(const FiniteFunctionClass& cls, ContextId x, ActionId a,
                       double r, double sigma);

  bool feasible(FunctionId f) const;
  const std::vector<double>& cumulative() const { return cumulative_; }
  std::vector<double> weights() const;
  std::vector<double> predict(const FiniteFunctionClass& cls,
                              ContextId x) const;

 private:
  std::vector<double> cumulative_;
};

}  // namespace varbandit
