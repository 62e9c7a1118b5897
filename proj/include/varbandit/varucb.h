#pragma once

// Layered optimistic elimination for variances chosen after the action.
// Rounds are filed into layers by how much the version space still disagrees;
// each layer keeps its own squared-weight confidence radius.

#include <optional>
#include <vector>

#include "varbandit/policy.h"
#include "varbandit/regression.h"

namespace varbandit {

struct VarUCBParams {
  double delta = 0.05;
  std::size_t horizon = 1;
  double log_scale = 4.0;                 // L = log_scale * log(|F| T / delta)
  std::optional<double> log_term;         // overrides L outright
};

struct VarUCBRound {
  std::vector<ActionId> support;
  std::size_t layer = 0;          // k_t in 1..K+1
  std::vector<double> g;          // g_{t,k_t}(a); empty on the top layer
  double w = 0.0;
};

class VarUCB : public Policy {
 public:
  VarUCB(FiniteFunctionClass cls, VarUCBParams params);

  std::string name() const override { return "varucb"; }
  bool supports(VarianceModel) const override { return true; }
  Decision choose(ContextId x, std::optional<double> revealed_sigma,
                  Rng& rng) override;
  double observe(ContextId x, ActionId a, double r,
                 std::optional<double> end_sigma) override;
  const Mask* version_space() const override { return &active_; }

  std::size_t n_layers() const { return n_layers_; }  // K
  double log_term() const { return log_term_; }
  const Mask& active() const { return active_; }
  std::size_t layer_size(std::size_t k) const { return layers_.at(k).count; }
  // Confidence radius of layer k (1..K) from the current bins.
  double radius(std::size_t k) const;
  double layer_disagreement(std::size_t k, ContextId x, ActionId a) const;
  const VarUCBRound& last_round() const { return last_; }

  // Recomputes the layer fits and shrinks the version space. Called at the
  // start of every choose; exposed for tests.
  void refresh_confidence();

 private:
  struct Layer {
    explicit Layer(std::size_t n) : pairs(n), residuals(n) {}
    PairwiseSums pairs;
    ResidualAccumulator residuals;
    std::size_t count = 0;
  };

  FiniteFunctionClass cls_;
  std::size_t n_layers_;
  double log_term_;
  Mask active_;
  std::vector<Layer> layers_;  // index 0 unused, 1..K+1
  VarUCBRound last_;
  bool pending_ = false;
  ContextId pending_x_ = 0;
};

}  // namespace varbandit
