#pragma once

// Reward environments: benign random instances, Gaussian model instances and
// the lower-bound constructions, each with a fixed f* (or M*), a context
// process, a reward channel and a variance adversary.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "varbandit/core.h"
#include "varbandit/policy.h"

namespace varbandit {

struct RoundStart {
  ContextId x = 0;
  // Variance fixed before the action; nullopt when the adversary picks it
  // after seeing the action.
  std::optional<double> sigma;
};

class Environment {
 public:
  virtual ~Environment() = default;

  // Mean-reward class with the star index set to f*.
  const FiniteFunctionClass& mean_class() const { return means_; }
  const GaussianModelClass* model_class() const {
    return models_ ? &*models_ : nullptr;
  }
  FunctionId star() const { return means_.star_index(); }
  VarianceModel variance_model() const { return info_; }
  std::size_t n_contexts() const { return means_.n_contexts(); }
  std::size_t n_actions() const { return means_.n_actions(); }

  virtual RoundStart begin_round(Rng& context_rng, Rng& variance_rng) = 0;
  // Variance of the reward at (x, a) in the current state, before settle.
  virtual double variance_at(ContextId x, ActionId a) const = 0;
  // sigma_t of the round once the action is known; advances adversary state.
  virtual double settle(ContextId x, ActionId a) = 0;
  virtual double draw_reward(ContextId x, ActionId a, double sigma,
                             Rng& rng) = 0;

  // Adversary stanza: variance policy and its parameters.
  virtual nlohmann::json adversary() const = 0;

 protected:
  Environment(FiniteFunctionClass means,
              std::optional<GaussianModelClass> models, VarianceModel info)
      : means_(std::move(means)), models_(std::move(models)), info_(info) {}

  FiniteFunctionClass means_;
  std::optional<GaussianModelClass> models_;
  VarianceModel info_;
};

// Per-round variance of the benign environments.
struct VarianceSchedule {
  enum class Kind { kConstant, kZeroOne, kUniform };
  Kind kind = Kind::kConstant;
  double value = 0.0;  // sigma for kConstant, P(sigma = 1) for kZeroOne

  double draw(Rng& rng) const;
  nlohmann::json to_json() const;
  static VarianceSchedule from_json(const nlohmann::json& j);
};

// How rewards are drawn around the mean.
enum class RewardChannel {
  kBoundedTwoPoint,  // two points inside [0, 1] at distance <= sigma
  kGaussian,         // N(mean, sd of the star model)
};

// Class plus channel, variance schedule and uniform contexts.
class TableEnvironment : public Environment {
 public:
  TableEnvironment(FiniteFunctionClass means,
                   std::optional<GaussianModelClass> models,
                   VarianceModel info, VarianceSchedule schedule,
                   RewardChannel channel);

  RoundStart begin_round(Rng& context_rng, Rng& variance_rng) override;
  double variance_at(ContextId x, ActionId a) const override;
  double settle(ContextId, ActionId) override { return sigma_; }
  double draw_reward(ContextId x, ActionId a, double sigma, Rng& rng) override;
  nlohmann::json adversary() const override;

 private:
  VarianceSchedule schedule_;
  RewardChannel channel_;
  double sigma_ = 0.0;
};

// Single-context two-point bandit; sigma_t = sigma every round.
class MabEnvironment : public Environment {
 public:
  MabEnvironment(FiniteFunctionClass means, double sigma, double epsilon,
                 VarianceModel info);

  RoundStart begin_round(Rng&, Rng&) override { return {0, sigma_}; }
  double variance_at(ContextId x, ActionId a) const override;
  double settle(ContextId, ActionId) override { return sigma_; }
  double draw_reward(ContextId x, ActionId a, double sigma, Rng& rng) override;
  nlohmann::json adversary() const override;

 private:
  TwoPointDistribution law(ActionId a) const;

  double sigma_;
  double epsilon_;
};

// Variance 1 on the first 1/epsilon^2 plays of each (context, bad action)
// pair, 0 otherwise; decided after the action. Gaussian noise, unclipped.
class StrongAdversaryEnvironment : public Environment {
 public:
  StrongAdversaryEnvironment(FiniteFunctionClass means, double epsilon);

  RoundStart begin_round(Rng& context_rng, Rng&) override;
  double variance_at(ContextId x, ActionId a) const override;
  double settle(ContextId x, ActionId a) override;
  double draw_reward(ContextId x, ActionId a, double sigma, Rng& rng) override;
  nlohmann::json adversary() const override;

  std::size_t pull_cap() const { return cap_; }
  std::size_t pulls(ContextId x, ActionId a) const {
    return counts_[x * n_actions() + a];
  }

 private:
  double epsilon_;
  std::size_t cap_;
  std::vector<std::size_t> counts_;
};

// The strong adversary lifted to Gaussian models over count-augmented
// contexts. Since the variance at (x, a) only depends on whether (x, a) is
// still under its pull cap, a context is (base context, one bit per bad
// action), which is an exact quotient of the capped count vectors.
class PostActionEnvironment : public Environment {
 public:
  PostActionEnvironment(GaussianModelClass models, std::size_t base_contexts,
                        double epsilon, double std_floor);

  RoundStart begin_round(Rng& context_rng, Rng&) override;
  double variance_at(ContextId x, ActionId a) const override;
  double settle(ContextId x, ActionId a) override;
  double draw_reward(ContextId x, ActionId a, double sigma, Rng& rng) override;
  nlohmann::json adversary() const override;

 private:
  std::size_t base_contexts_;
  double epsilon_;
  double std_floor_;
  std::size_t cap_;
  std::vector<std::size_t> counts_;  // per base context and action
};

// ---------------------------------------------------------------------------
// Constructions. Each returns the class with star 0; families enumerate f*.

// Two-point lower bound instance on one context. Function 0 puts sigma on
// arm 0 and sigma - eps elsewhere; function i in 1..A-1 additionally raises
// arm i to sigma + eps; function A raises arm 0 to sigma + eps instead.
FiniteFunctionClass mab_class(std::size_t n_actions, double sigma,
                              double epsilon);
double mab_default_epsilon(std::size_t n_actions, double sigma,
                           std::size_t horizon);

// Deterministic hard instance: function 0 gives 1/2 to the last action and 0
// elsewhere; function 1 + i(A-1) + j also gives 1 to action j at context i.
FiniteFunctionClass eluder_class(std::size_t n_contexts, std::size_t n_actions);

// Same shape with means 1/2 - eps, 1/2 + eps and 1/2 on the safe action.
FiniteFunctionClass strong_adversary_class(std::size_t n_contexts,
                                           std::size_t n_actions,
                                           double epsilon);
// eps = N sqrt(A/T), the tuning for a variance budget of order T.
double strong_adversary_epsilon(std::size_t n_contexts, std::size_t n_actions,
                                std::size_t horizon);
void check_strong_adversary_epsilon(std::size_t n_contexts, double epsilon,
                                    std::size_t horizon);

// Constant-sd Gaussian models around a mean class.
GaussianModelClass sigma_bounded_models(const FiniteFunctionClass& means,
                                        double stddev);
GaussianModelClass post_action_models(std::size_t n_contexts,
                                      std::size_t n_actions, double epsilon,
                                      double std_floor);

FiniteFunctionClass random_class(std::size_t n_functions,
                                 std::size_t n_contexts,
                                 std::size_t n_actions, Rng& rng);
GaussianModelClass random_models(std::size_t n_models, std::size_t n_contexts,
                                 std::size_t n_actions, double min_std,
                                 double max_std, Rng& rng);

// KL(N(mu1, s1^2) || N(mu2, s2^2)).
double kl_gaussian(double mu1, double s1, double mu2, double s2);

// ---------------------------------------------------------------------------

struct EnvironmentFamily {
  std::string kind;
  // Number of f* choices enumerated (1 when f* is drawn per seed).
  std::size_t members = 1;
  std::function<std::unique_ptr<Environment>(std::size_t member,
                                             std::uint64_t seed)>
      make;
};

// Builds a family from an "environment" config stanza. Throws ConfigError.
EnvironmentFamily make_family(const nlohmann::json& spec, std::size_t horizon);

// Core class JSON plus the adversary stanza.
nlohmann::json environment_to_json(const Environment& env);

}  // namespace varbandit
