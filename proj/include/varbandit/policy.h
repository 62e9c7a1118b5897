#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "varbandit/core.h"
#include "varbandit/regression.h"

namespace varbandit {

// When (and whether) the learner sees the round's variance parameter.
enum class VarianceModel {
  kWeakRevealedStart,  // sigma_t fixed before the action, shown before choose
  kWeakRevealedEnd,    // sigma_t fixed before the action, shown in observe
  kStrongPostAction,   // sigma_t chosen after seeing a_t, never shown
  kHidden,             // sigma_t fixed before the action, never shown
};

std::string to_string(VarianceModel model);
VarianceModel variance_model_from_string(const std::string& name);

struct Decision {
  ActionId action = 0;
  Branch branch = Branch::kPlain;
  int layer = 0;
};

// Uniform interface the harness drives: choose, then observe the same round.
class Policy {
 public:
  virtual ~Policy() = default;

  virtual std::string name() const = 0;
  virtual bool supports(VarianceModel model) const = 0;

  virtual Decision choose(ContextId x, std::optional<double> revealed_sigma,
                          Rng& rng) = 0;
  // Returns the regression weight assigned to the round (1 if unweighted).
  virtual double observe(ContextId x, ActionId a, double r,
                         std::optional<double> end_sigma) = 0;

  // Surviving version space, when the policy keeps one.
  virtual const Mask* version_space() const { return nullptr; }
};

// Inverse-gap-weighting distribution over `support` with
//   p(a) = 1 / (base + scale * (pred[best] - pred[a]))   for a != best
// and the remaining mass on best, where best is the lowest-index maximizer
// of pred over the support. Zero outside the support.
std::vector<double> inverse_gap_weights(const std::vector<double>& pred,
                                        const std::vector<ActionId>& support,
                                        double base, double scale,
                                        ActionId* best_out = nullptr);

// Union over active functions of each function's argmax set at x (exact ties
// included), in increasing action order.
std::vector<ActionId> restrict_actions(const FiniteFunctionClass& cls,
                                       const Mask& active, ContextId x);

// Symmetric table of sum_s w_s (f(x_s,a_s) - f'(x_s,a_s))^2 over the rounds
// added so far. Only pairs of functions active at the time are updated, which
// is enough since version spaces only shrink.
class PairwiseSums {
 public:
  explicit PairwiseSums(std::size_t n_functions)
      : n_(n_functions), sums_(n_functions * n_functions, 0.0) {}

  void add(const FiniteFunctionClass& cls, const Mask& active, ContextId x,
           ActionId a, double w);
  double get(FunctionId f, FunctionId g) const { return sums_[f * n_ + g]; }

 private:
  std::size_t n_;
  std::vector<double> sums_;
};

// Uniform over all actions.
class UniformPolicy : public Policy {
 public:
  explicit UniformPolicy(std::size_t n_actions) : n_actions_(n_actions) {}
  std::string name() const override { return "uniform"; }
  bool supports(VarianceModel) const override { return true; }
  Decision choose(ContextId, std::optional<double>, Rng& rng) override;
  double observe(ContextId, ActionId, double, std::optional<double>) override {
    return 1.0;
  }

 private:
  std::size_t n_actions_;
};

// Plays the best action of the class's star function. Test instrumentation
// only: it reads the hidden star index.
class OraclePolicy : public Policy {
 public:
  explicit OraclePolicy(FiniteFunctionClass cls) : cls_(std::move(cls)) {}
  std::string name() const override { return "oracle"; }
  bool supports(VarianceModel) const override { return true; }
  Decision choose(ContextId x, std::optional<double>, Rng&) override {
    return {best_action(cls_, cls_.star_index(), x), Branch::kPlain, 0};
  }
  double observe(ContextId, ActionId, double, std::optional<double>) override {
    return 1.0;
  }

 private:
  FiniteFunctionClass cls_;
};

}  // namespace varbandit
