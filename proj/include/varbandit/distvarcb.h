#pragma once

// Distributional contextual bandit over finite Gaussian model classes.
// Explores by Hellinger disagreement while models are far apart, otherwise
// plays a variance-normalized inverse gap distribution built from the
// likelihood-posterior mixture, and drops models whose cumulative Hellinger
// distance to the mixture exceeds a radius.

#include <optional>
#include <span>
#include <vector>

#include "varbandit/policy.h"

namespace varbandit {

struct GaussianComponent {
  double weight = 1.0;
  double mean = 0.0;
  double stddev = 1.0;
};

// Squared Hellinger distance from each query Gaussian to one mixture, by
// adaptive composite Gauss-Legendre quadrature over mean +/- 8 sd of every
// density involved. Components with relative weight below 1e-14 are dropped;
// a single remaining component falls back to the closed form. Throws
// NumericError when the error estimate exceeds `tolerance`.
std::vector<double> hellinger_sq_to_mixture(
    std::span<const GaussianComponent> queries,
    std::span<const GaussianComponent> mixture, double tolerance = 1e-6);

double hellinger_sq_to_mixture(const GaussianComponent& query,
                               std::span<const GaussianComponent> mixture,
                               double tolerance = 1e-6);

// lambda in (0, n] with sum_a 1 / (lambda + coef[a]) = 1, by bisection.
// Needs nonnegative coefficients with at least one zero (infinite
// coefficients contribute nothing).
double solve_exploration_lambda(std::span<const double> coef);

// Likelihood posterior over the surviving models of a Gaussian class.
class MixtureModel {
 public:
  // Log weights below this (relative to the maximum) are clamped to it.
  static constexpr double kLogFloor = -1e12;

  explicit MixtureModel(const GaussianModelClass* models);

  const Mask& active() const { return active_; }
  // q(M) normalized over the active models; zero elsewhere.
  std::vector<double> weights() const;
  const std::vector<double>& log_weights() const { return log_weights_; }

  double mean(ContextId x, ActionId a) const;
  // Total-variance law: sum q sd^2 + sum q (mu - mean)^2.
  double variance(ContextId x, ActionId a) const;
  // Active components at (x, a), identical parameters merged.
  std::vector<GaussianComponent> components(ContextId x, ActionId a) const;

  void add_observation(ContextId x, ActionId a, double r);
  void restrict(const Mask& next);

 private:
  const GaussianModelClass* models_;
  Mask active_;
  std::vector<double> log_weights_;
};

struct DistVarCBParams {
  double delta = 0.05;
  std::size_t horizon = 1;
  std::optional<double> radius;  // overrides log(2|M|T/delta)
};

struct DistRound {
  int indicator = 0;               // 1 disagreement, 2 exploration
  std::vector<double> max_pair;    // max active-pair D^2 per action
  std::vector<double> mix_mean;
  std::vector<double> mix_var;
  std::vector<double> probs;       // indicator 2 only
  double lambda = 0.0;
  double residual = 0.0;           // |sum q - 1|
  double gamma = 0.0;
};

class DistVarCB : public Policy {
 public:
  DistVarCB(GaussianModelClass models, DistVarCBParams params);

  std::string name() const override { return "distvarcb"; }
  bool supports(VarianceModel) const override { return true; }
  Decision choose(ContextId x, std::optional<double> revealed_sigma,
                  Rng& rng) override;
  double observe(ContextId x, ActionId a, double r,
                 std::optional<double> end_sigma) override;
  const Mask* version_space() const override { return &mixture_.active(); }

  const GaussianModelClass& models() const { return models_; }
  const MixtureModel& mixture() const { return mixture_; }
  const std::vector<double>& radii() const { return radii_; }
  double radius_limit() const { return radius_limit_; }
  // gamma for the upcoming round.
  double gamma() const;
  const DistRound& last_round() const { return last_; }

 private:
  GaussianModelClass models_;
  MixtureModel mixture_;
  std::vector<double> radii_;
  double radius_limit_;
  double gamma_log_;
  double variance_sum_ = 0.0;
  DistRound last_;
  bool pending_ = false;
  ContextId pending_x_ = 0;
};

}  // namespace varbandit
