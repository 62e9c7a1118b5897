#pragma once

// Contextual bandit with a known, shared reward variance: discriminative
// exploration while the version space still disagrees at the candidate
// actions, inverse gap weighting on Prod predictions once it does not.
// HeteroVarCB routes rounds with differing variances to per-scale instances.

#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "varbandit/policy.h"
#include "varbandit/regression.h"

namespace varbandit {

struct VarCBParams {
  double sigma = 1.0;  // clamped up to 1/(AT)
  double delta = 0.05;
  std::size_t horizon = 1;
};

// What the last choose/observe pair did; read by tests and probes.
struct VarCBRound {
  std::vector<ActionId> support;  // A_t
  std::vector<double> g;          // g_t(a) for every action
  double max_g = 0.0;             // over the support
  Branch branch = Branch::kPlain;
  std::vector<double> probs;      // IGW rounds only
  ActionId leader = 0;            // b_t on IGW rounds
  double w = 0.0;
  bool prod_updated = false;
  ProdStep prod;                  // valid when prod_updated
};

class VarCB : public Policy {
 public:
  VarCB(FiniteFunctionClass cls, VarCBParams params);

  std::string name() const override { return "varcb"; }
  bool supports(VarianceModel model) const override {
    return model == VarianceModel::kWeakRevealedStart;
  }
  Decision choose(ContextId x, std::optional<double> revealed_sigma,
                  Rng& rng) override;
  double observe(ContextId x, ActionId a, double r,
                 std::optional<double> end_sigma) override;
  const Mask* version_space() const override { return &active_; }

  double sigma() const { return sigma_; }
  double log_term() const { return log_term_; }
  double threshold() const { return threshold_; }
  double gamma() const { return gamma_; }
  double radius() const { return 102.0 * log_term_; }
  const Mask& active() const { return active_; }
  const PairwiseSums& pair_sums() const { return pairs_; }
  const ProdOracle& prod() const { return prod_; }
  const VarCBRound& last_round() const { return last_; }

  double disagreement(ContextId x, ActionId a) const;

  // Choose with a variance scale already validated by a router.
  Decision choose_at_scale(ContextId x, Rng& rng);

 private:
  FiniteFunctionClass cls_;
  double sigma_;
  double log_term_;
  double threshold_;
  double gamma_;
  Mask active_;
  PairwiseSums pairs_;
  ResidualAccumulator residuals_;
  ProdOracle prod_;
  VarCBRound last_;
  bool pending_ = false;
  ContextId pending_x_ = 0;
};

// Bin of a variance parameter: 0 if sigma <= 1/(AT), otherwise the i with
// sigma in (2^(i-1)/(AT), 2^i/(AT)].
std::size_t hetero_route(double sigma, std::size_t n_actions,
                         std::size_t horizon);

class HeteroVarCB : public Policy {
 public:
  HeteroVarCB(FiniteFunctionClass cls, double delta, std::size_t horizon);

  std::string name() const override { return "hetero"; }
  bool supports(VarianceModel model) const override {
    return model == VarianceModel::kWeakRevealedStart;
  }
  Decision choose(ContextId x, std::optional<double> revealed_sigma,
                  Rng& rng) override;
  double observe(ContextId x, ActionId a, double r,
                 std::optional<double> end_sigma) override;

  std::size_t n_bins() const { return top_bin_ + 1; }
  // Instances are built on first use; nullptr until then.
  const VarCB* instance(std::size_t bin) const;
  std::size_t last_bin() const { return last_bin_; }

 private:
  FiniteFunctionClass cls_;
  double delta_;
  std::size_t horizon_;
  std::size_t top_bin_;
  std::map<std::size_t, std::unique_ptr<VarCB>> instances_;
  std::size_t last_bin_ = 0;
  bool pending_ = false;
};

}  // namespace varbandit
