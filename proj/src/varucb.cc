#include "varbandit/varucb.h"

#include <algorithm>
#include <cmath>

#include "varbandit/errors.h"

namespace varbandit {

VarUCB::VarUCB(FiniteFunctionClass cls, VarUCBParams params)
    : cls_(std::move(cls)), n_layers_(0), log_term_(0.0),
      active_(cls_.n_functions(), true) {
  if (params.horizon == 0) throw ArgumentError("horizon must be positive");
  if (!(params.delta > 0.0 && params.delta < 1.0)) {
    throw ArgumentError("delta must lie in (0, 1)");
  }
  const double t = static_cast<double>(params.horizon);
  n_layers_ = static_cast<std::size_t>(std::ceil(std::log2(t)));
  if (params.log_term) {
    if (!(*params.log_term > 0.0)) throw ArgumentError("L must be positive");
    log_term_ = *params.log_term;
  } else {
    if (!(params.log_scale > 0.0)) throw ArgumentError("log scale must be positive");
    log_term_ = params.log_scale *
                std::log(static_cast<double>(cls_.n_functions()) * t / params.delta);
  }
  layers_.reserve(n_layers_ + 2);
  for (std::size_t k = 0; k < n_layers_ + 2; ++k) {
    layers_.emplace_back(cls_.n_functions());
  }
}

double VarUCB::radius(std::size_t k) const {
  const Layer& layer = layers_.at(k);
  const double scale = std::ldexp(1.0, -static_cast<int>(k));
  if (std::ldexp(1.0, 2 * static_cast<int>(k)) >= 80.0 * log_term_) {
    const FunctionId fit = layer.residuals.argmin(active_);
    const double fit_loss = layer.residuals.objective(fit);
    return 10.0 * scale * std::sqrt(fit_loss * log_term_ + log_term_ * log_term_);
  }
  return std::sqrt(static_cast<double>(layer.count));
}

void VarUCB::refresh_confidence() {
  Mask next = active_;
  for (std::size_t k = 1; k <= n_layers_; ++k) {
    const Layer& layer = layers_[k];
    if (layer.count == 0) continue;
    const FunctionId fit = layer.residuals.argmin(active_);
    const double r = radius(k);
    const double r_sq = r * r;
    for (FunctionId f = 0; f < next.size(); ++f) {
      if (next[f] && f != fit && layer.pairs.get(f, fit) > r_sq) next[f] = false;
    }
  }
  if (mask_count(next) == 0) throw StateError("every function was eliminated");
  active_ = std::move(next);
}

double VarUCB::layer_disagreement(std::size_t k, ContextId x, ActionId a) const {
  const Layer& layer = layers_.at(k);
  const double floor =
      std::ldexp(1.0, -2 * static_cast<int>(k)) * log_term_ * log_term_;
  double best = 0.0;
  const std::size_t n = cls_.n_functions();
  for (FunctionId f = 0; f < n; ++f) {
    if (!active_[f]) continue;
    const double vf = cls_.value(f, x, a);
    for (FunctionId h = f + 1; h < n; ++h) {
      if (!active_[h]) continue;
      const double gap = std::abs(vf - cls_.value(h, x, a));
      if (gap == 0.0) continue;
      best = std::max(best, gap / std::sqrt(floor + layer.pairs.get(f, h)));
    }
  }
  return best;
}

Decision VarUCB::choose(ContextId x, std::optional<double>, Rng&) {
  if (pending_) throw StateError("choose called twice without observe");
  cls_.check_indices(0, x);
  refresh_confidence();
  last_ = VarUCBRound{};
  last_.support = restrict_actions(cls_, active_, x);

  Decision d;
  for (std::size_t k = 1; k <= n_layers_; ++k) {
    std::vector<double> g(cls_.n_actions(), 0.0);
    ActionId probe = last_.support.front();
    for (ActionId a : last_.support) {
      g[a] = layer_disagreement(k, x, a);
      if (g[a] > g[probe]) probe = a;
    }
    if (g[probe] >= std::ldexp(1.0, -static_cast<int>(k))) {
      last_.layer = k;
      last_.g = std::move(g);
      d.action = probe;
      d.branch = Branch::kLayer;
      break;
    }
  }
  if (last_.layer == 0) {
    last_.layer = n_layers_ + 1;
    ActionId best = last_.support.front();
    double best_value = -1.0;
    for (ActionId a : last_.support) {
      double optimistic = -1.0;
      for (FunctionId f = 0; f < active_.size(); ++f) {
        if (active_[f]) optimistic = std::max(optimistic, cls_.value(f, x, a));
      }
      if (optimistic > best_value) {
        best_value = optimistic;
        best = a;
      }
    }
    d.action = best;
    d.branch = Branch::kUcb;
  }
  d.layer = static_cast<int>(last_.layer);
  pending_ = true;
  pending_x_ = x;
  return d;
}

double VarUCB::observe(ContextId x, ActionId a, double r,
                       std::optional<double>) {
  if (!pending_ || x != pending_x_) {
    throw StateError("observe does not match the pending round");
  }
  pending_ = false;
  double w = 1.0;
  if (last_.layer <= n_layers_) {
    const double g = last_.g[a];
    if (!(g > 0.0)) throw InvariantError("layered round with zero disagreement");
    w = std::ldexp(1.0, -static_cast<int>(last_.layer)) / g;
  }
  last_.w = w;
  Layer& layer = layers_[last_.layer];
  layer.pairs.add(cls_, active_, x, a, w * w);
  layer.residuals.add(cls_, WeightedSample{x, a, r, w * w});
  ++layer.count;
  return w;
}

}  // namespace varbandit
