#include "varbandit/varcb.h"

#include <algorithm>
#include <cmath>

#include "varbandit/errors.h"

namespace varbandit {
namespace {

Mask full_mask(std::size_t n) { return Mask(n, true); }

double clamp_sigma(double sigma, std::size_t n_actions, std::size_t horizon) {
  const double floor = 1.0 / (static_cast<double>(n_actions) * horizon);
  return std::max(sigma, floor);
}

}  // namespace

VarCB::VarCB(FiniteFunctionClass cls, VarCBParams params)
    : cls_(std::move(cls)),
      sigma_(0.0),
      log_term_(0.0),
      threshold_(0.0),
      gamma_(0.0),
      active_(full_mask(cls_.n_functions())),
      pairs_(cls_.n_functions()),
      residuals_(cls_.n_functions()),
      prod_(full_mask(cls_.n_functions()), 1.0) {
  if (params.horizon == 0) throw ArgumentError("horizon must be positive");
  if (!(params.delta > 0.0 && params.delta < 1.0)) {
    throw ArgumentError("delta must lie in (0, 1)");
  }
  if (!(params.sigma >= 0.0 && params.sigma <= 1.0)) {
    throw ArgumentError("sigma must lie in [0, 1]");
  }
  const double n_f = static_cast<double>(cls_.n_functions());
  const double a = static_cast<double>(cls_.n_actions());
  const double t = static_cast<double>(params.horizon);
  sigma_ = clamp_sigma(params.sigma, cls_.n_actions(), params.horizon);
  const double var = sigma_ * sigma_;
  log_term_ = std::log(n_f * t * t / (params.delta * var));
  threshold_ = var / (11.0 * std::sqrt(log_term_));
  // The disagreement cap 11 * threshold * sqrt(L) equals the variance.
  const double cap = var;
  gamma_ = std::sqrt(a * t / (4.0 * (cap + var) * std::log(n_f / params.delta)));
  prod_ = ProdOracle(full_mask(cls_.n_functions()), 1.0 / (40.0 * (var + cap)));
}

double VarCB::disagreement(ContextId x, ActionId a) const {
  double best = 0.0;
  const std::size_t n = cls_.n_functions();
  for (FunctionId f = 0; f < n; ++f) {
    if (!active_[f]) continue;
    const double vf = cls_.value(f, x, a);
    for (FunctionId h = f + 1; h < n; ++h) {
      if (!active_[h]) continue;
      const double gap = std::abs(vf - cls_.value(h, x, a));
      if (gap == 0.0) continue;
      best = std::max(best, gap / std::sqrt(1.0 + pairs_.get(f, h)));
    }
  }
  return best;
}

Decision VarCB::choose(ContextId x, std::optional<double> revealed_sigma,
                       Rng& rng) {
  if (!revealed_sigma) {
    throw ContractError("VarCB needs the variance revealed before acting");
  }
  if (*revealed_sigma > sigma_ * (1.0 + 1e-12)) {
    throw ContractError("revealed variance exceeds the instance's scale");
  }
  return choose_at_scale(x, rng);
}

Decision VarCB::choose_at_scale(ContextId x, Rng& rng) {
  if (pending_) throw StateError("choose called twice without observe");
  cls_.check_indices(0, x);
  last_ = VarCBRound{};
  last_.support = restrict_actions(cls_, active_, x);
  last_.g.assign(cls_.n_actions(), 0.0);
  ActionId probe = last_.support.front();
  for (ActionId a : last_.support) {
    last_.g[a] = disagreement(x, a);
    if (last_.g[a] > last_.g[probe]) probe = a;
  }
  last_.max_g = last_.g[probe];

  Decision d;
  if (last_.max_g >= threshold_) {
    d.action = probe;
    d.branch = Branch::kDiscriminative;
  } else {
    const std::vector<double> pred = prod_.predict(cls_, x);
    last_.probs = inverse_gap_weights(
        pred, last_.support, static_cast<double>(last_.support.size()), gamma_,
        &last_.leader);
    d.action = rng.categorical(last_.probs);
    d.branch = Branch::kIgw;
  }
  last_.branch = d.branch;
  pending_ = true;
  pending_x_ = x;
  return d;
}

double VarCB::observe(ContextId x, ActionId a, double r,
                      std::optional<double>) {
  if (!pending_ || x != pending_x_) {
    throw StateError("observe does not match the pending round");
  }
  pending_ = false;
  const double g = last_.g[a];
  double w = 1.0 / (sigma_ * sigma_);
  if (g > 0.0) w = std::min(w, 1.0 / (g * std::sqrt(log_term_)));
  last_.w = w;

  pairs_.add(cls_, active_, x, a, w);
  residuals_.add(cls_, WeightedSample{x, a, r, w});
  const FunctionId fit = residuals_.argmin(active_);
  const double radius = 102.0 * log_term_;
  Mask next = active_;
  for (FunctionId f = 0; f < next.size(); ++f) {
    if (next[f] && f != fit && pairs_.get(f, fit) > radius) next[f] = false;
  }

  if (last_.branch == Branch::kIgw) {
    last_.prod = prod_.update(cls_, x, a, r, next);
    last_.prod_updated = true;
  } else {
    prod_.restrict(next);
  }
  active_ = std::move(next);
  return w;
}

std::size_t hetero_route(double sigma, std::size_t n_actions,
                         std::size_t horizon) {
  if (!(sigma >= 0.0) || sigma > 1.0) {
    throw ArgumentError("variance parameter must lie in [0, 1]");
  }
  if (n_actions == 0 || horizon == 0) {
    throw ArgumentError("actions and horizon must be positive");
  }
  const double scale = static_cast<double>(n_actions) * horizon;
  std::size_t i = 0;
  while (sigma > std::ldexp(1.0, static_cast<int>(i)) / scale) ++i;
  return i;
}

HeteroVarCB::HeteroVarCB(FiniteFunctionClass cls, double delta,
                         std::size_t horizon)
    : cls_(std::move(cls)), delta_(delta), horizon_(horizon) {
  top_bin_ = hetero_route(1.0, cls_.n_actions(), horizon_);
}

const VarCB* HeteroVarCB::instance(std::size_t bin) const {
  auto it = instances_.find(bin);
  return it == instances_.end() ? nullptr : it->second.get();
}

Decision HeteroVarCB::choose(ContextId x, std::optional<double> revealed_sigma,
                             Rng& rng) {
  if (!revealed_sigma) {
    throw ContractError("the router needs the variance revealed before acting");
  }
  const std::size_t bin = hetero_route(*revealed_sigma, cls_.n_actions(), horizon_);
  auto& slot = instances_[bin];
  if (!slot) {
    const double scale = static_cast<double>(cls_.n_actions()) * horizon_;
    const double sigma = std::min(1.0, std::ldexp(1.0, static_cast<int>(bin)) / scale);
    slot = std::make_unique<VarCB>(cls_, VarCBParams{sigma, delta_, horizon_});
  }
  last_bin_ = bin;
  pending_ = true;
  Decision d = slot->choose_at_scale(x, rng);
  d.layer = static_cast<int>(bin);
  return d;
}

double HeteroVarCB::observe(ContextId x, ActionId a, double r,
                            std::optional<double> end_sigma) {
  if (!pending_) throw StateError("observe without a pending round");
  pending_ = false;
  return instances_.at(last_bin_)->observe(x, a, r, end_sigma);
}

}  // namespace varbandit
