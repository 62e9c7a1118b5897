#pragma once

// Inverse gap weighting with exponential-weights regression: the zero-one
// variance learner (sigma_t in {0, 1}, revealed after acting) and the
// classic minimax-tuned baseline.

#include <optional>
#include <vector>

#include "varbandit/policy.h"
#include "varbandit/regression.h"

namespace varbandit {

struct IgwRound {
  std::vector<ActionId> support;
  std::vector<double> probs;
  ActionId leader = 0;
  double scale = 0.0;  // effective gamma of the round
};

class ZeroOnePolicy : public Policy {
 public:
  explicit ZeroOnePolicy(FiniteFunctionClass cls);

  std::string name() const override { return "zeroone"; }
  bool supports(VarianceModel model) const override {
    return model == VarianceModel::kWeakRevealedEnd;
  }
  Decision choose(ContextId x, std::optional<double> revealed_sigma,
                  Rng& rng) override;
  double observe(ContextId x, ActionId a, double r,
                 std::optional<double> end_sigma) override;
  const Mask* version_space() const override { return &active_; }

  double gamma() const { return gamma_; }
  double variance_sum() const { return variance_sum_; }
  const ExpWeights& regression() const { return weights_; }
  const IgwRound& last_round() const { return last_; }

 private:
  FiniteFunctionClass cls_;
  double gamma_;
  Mask active_;
  ExpWeights weights_;
  double variance_sum_ = 0.0;
  IgwRound last_;
  bool pending_ = false;
};

class SquareCB : public Policy {
 public:
  SquareCB(FiniteFunctionClass cls, std::size_t horizon);

  std::string name() const override { return "squarecb"; }
  bool supports(VarianceModel) const override { return true; }
  Decision choose(ContextId x, std::optional<double> revealed_sigma,
                  Rng& rng) override;
  double observe(ContextId x, ActionId a, double r,
                 std::optional<double> end_sigma) override;

  double gamma() const { return gamma_; }
  const ExpWeights& regression() const { return weights_; }
  const IgwRound& last_round() const { return last_; }

 private:
  FiniteFunctionClass cls_;
  double gamma_;
  ExpWeights weights_;
  IgwRound last_;
};

}  // namespace varbandit
