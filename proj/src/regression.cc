#include "varbandit/regression.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "varbandit/errors.h"

namespace varbandit {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// log sum_i exp(v_i) over the masked entries.
double log_sum_exp(const std::vector<double>& v, const Mask& mask) {
  double hi = -kInf;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (mask[i]) hi = std::max(hi, v[i]);
  }
  if (hi == -kInf) return -kInf;
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (mask[i]) s += std::exp(v[i] - hi);
  }
  return hi + std::log(s);
}

}  // namespace

std::size_t mask_count(const Mask& mask) {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
}

ProdOracle::ProdOracle(Mask active, double eta)
    : eta_(eta),
      active_(std::move(active)),
      log_weights_(active_.size(), 0.0) {
  if (!(eta_ > 0.0)) throw ArgumentError("Prod learning rate must be positive");
  if (mask_count(active_) == 0) throw StateError("Prod oracle needs an active function");
  normalize();
}

void ProdOracle::normalize() {
  const double z = log_sum_exp(log_weights_, active_);
  for (std::size_t f = 0; f < log_weights_.size(); ++f) {
    log_weights_[f] = active_[f] ? log_weights_[f] - z : -kInf;
  }
}

std::vector<double> ProdOracle::weights() const {
  std::vector<double> q(log_weights_.size(), 0.0);
  for (std::size_t f = 0; f < q.size(); ++f) {
    if (active_[f]) q[f] = std::exp(log_weights_[f]);
  }
  return q;
}

void ProdOracle::set_weights(std::span<const double> q) {
  if (q.size() != active_.size()) throw ArgumentError("weight vector size mismatch");
  for (std::size_t f = 0; f < q.size(); ++f) {
    active_[f] = q[f] > 0.0;
    log_weights_[f] = active_[f] ? std::log(q[f]) : -kInf;
  }
  if (mask_count(active_) == 0) throw StateError("all Prod weights are zero");
  normalize();
}

std::vector<double> ProdOracle::predict(const FiniteFunctionClass& cls,
                                        ContextId x) const {
  if (mask_count(active_) == 0) throw StateError("Prod oracle has no active function");
  std::vector<double> out(cls.n_actions(), 0.0);
  const std::vector<double> q = weights();
  for (std::size_t f = 0; f < q.size(); ++f) {
    if (!active_[f]) continue;
    const auto row = cls.row(f, x);
    for (std::size_t a = 0; a < out.size(); ++a) out[a] += q[f] * row[a];
  }
  return out;
}

ProdStep ProdOracle::update(const FiniteFunctionClass& cls, ContextId x,
                            ActionId a, double r, const Mask& next_active) {
  if (next_active.size() != active_.size()) {
    throw ArgumentError("next active mask has the wrong size");
  }
  const std::vector<double> q = weights();
  ProdStep step;
  for (std::size_t f = 0; f < q.size(); ++f) {
    if (active_[f]) step.prediction += q[f] * cls.value(f, x, a);
  }
  step.losses.assign(q.size(), 0.0);
  for (std::size_t f = 0; f < q.size(); ++f) {
    if (!active_[f]) continue;
    const double loss =
        2.0 * (cls.value(f, x, a) - step.prediction) * (step.prediction - r);
    if (eta_ * std::abs(loss) > 0.5) {
      throw ContractError("Prod step violates eta*|loss| <= 1/2 (eta*|loss| = " +
                          std::to_string(eta_ * std::abs(loss)) + ")");
    }
    step.losses[f] = loss;
    step.aggregated_loss += q[f] * loss;
  }
  for (std::size_t f = 0; f < q.size(); ++f) {
    if (next_active[f] && !active_[f]) {
      throw ContractError("next active set must be a subset of the current one");
    }
  }
  if (mask_count(next_active) == 0) {
    throw StateError("Prod update left no active function");
  }
  for (std::size_t f = 0; f < q.size(); ++f) {
    if (next_active[f]) log_weights_[f] += std::log1p(-eta_ * step.losses[f]);
  }
  active_ = next_active;
  normalize();
  return step;
}

void ProdOracle::restrict(const Mask& next_active) {
  if (next_active.size() != active_.size()) {
    throw ArgumentError("next active mask has the wrong size");
  }
  for (std::size_t f = 0; f < active_.size(); ++f) {
    if (next_active[f] && !active_[f]) {
      throw ContractError("next active set must be a subset of the current one");
    }
  }
  if (mask_count(next_active) == 0) {
    throw StateError("Prod restriction left no active function");
  }
  active_ = next_active;
  normalize();
}

std::pair<double, double> prod_regret_audit(
    const std::vector<std::vector<double>>& losses, double eta,
    const std::vector<Mask>& masks, FunctionId fstar) {
  if (losses.size() != masks.size()) {
    throw ContractError("one mask per round is required");
  }
  if (!(eta > 0.0)) throw ContractError("eta must be positive");
  if (losses.empty()) return {0.0, 0.0};
  const std::size_t n = masks.front().size();
  if (fstar >= n || !masks.back()[fstar]) {
    throw ContractError("comparator must survive in the final mask");
  }
  for (std::size_t t = 0; t < masks.size(); ++t) {
    if (masks[t].size() != n || losses[t].size() != n) {
      throw ContractError("ragged loss matrix or masks");
    }
    for (std::size_t f = 0; f < n; ++f) {
      if (t > 0 && masks[t][f] && !masks[t - 1][f]) {
        throw ContractError("masks must be nested");
      }
      if (masks[t][f] && eta * std::abs(losses[t][f]) > 0.5) {
        throw ContractError("eta*|loss| exceeds 1/2");
      }
    }
  }
  std::vector<double> log_w(n, 0.0);
  double lhs = 0.0;
  double star_sq = 0.0;
  for (std::size_t t = 0; t < losses.size(); ++t) {
    const double z = log_sum_exp(log_w, masks[t]);
    double mixed = 0.0;
    for (std::size_t f = 0; f < n; ++f) {
      if (masks[t][f]) mixed += std::exp(log_w[f] - z) * losses[t][f];
    }
    lhs += mixed - losses[t][fstar];
    star_sq += losses[t][fstar] * losses[t][fstar];
    for (std::size_t f = 0; f < n; ++f) {
      if (masks[t][f]) log_w[f] += std::log1p(-eta * losses[t][f]);
    }
  }
  const double rhs = std::log(static_cast<double>(n)) / eta + eta * star_sq;
  return {lhs, rhs};
}

FunctionId weighted_least_squares(const FiniteFunctionClass& cls,
                                  const Mask& mask,
                                  std::span<const WeightedSample> rounds) {
  ResidualAccumulator acc(cls.n_functions());
  for (const auto& s : rounds) acc.add(cls, s);
  return acc.argmin(mask);
}

void ResidualAccumulator::add(const FiniteFunctionClass& cls,
                              const WeightedSample& s) {
  for (std::size_t f = 0; f < sums_.size(); ++f) {
    const double d = cls.value(f, s.x, s.a) - s.r;
    sums_[f] += s.w * d * d;
  }
}

FunctionId ResidualAccumulator::argmin(const Mask& mask) const {
  if (mask.size() != sums_.size()) throw ArgumentError("mask size mismatch");
  std::size_t best = sums_.size();
  for (std::size_t f = 0; f < sums_.size(); ++f) {
    if (mask[f] && (best == sums_.size() || sums_[f] < sums_[best])) best = f;
  }
  if (best == sums_.size()) throw StateError("least squares over an empty mask");
  return best;
}

void ExpWeights::add_squared_loss(const FiniteFunctionClass& cls, ContextId x,
                                  ActionId a, double r, double scale) {
  for (std::size_t f = 0; f < cumulative_.size(); ++f) {
    if (!feasible(f)) continue;
    const double d = cls.value(f, x, a) - r;
    cumulative_[f] += scale * d * d;
  }
}

void ExpWeights::update_zero_one(const FiniteFunctionClass& cls, ContextId x,
                                 ActionId a, double r, double sigma) {
  if (sigma == 1.0) {
    add_squared_loss(cls, x, a, r);
  } else if (sigma == 0.0) {
    for (std::size_t f = 0; f < cumulative_.size(); ++f) {
      if (std::abs(cls.value(f, x, a) - r) > kMatchTolerance) {
        cumulative_[f] = kInf;
      }
    }
  } else {
    throw ArgumentError("zero-one update needs sigma in {0, 1}");
  }
  bool any = false;
  for (std::size_t f = 0; f < cumulative_.size(); ++f) any = any || feasible(f);
  if (!any) throw StateError("every function contradicted a noiseless reward");
}

bool ExpWeights::feasible(FunctionId f) const {
  return cumulative_[f] != kInf;
}

std::vector<double> ExpWeights::weights() const {
  double lo = kInf;
  for (double l : cumulative_) lo = std::min(lo, l);
  if (lo == kInf) throw StateError("no feasible function left");
  std::vector<double> q(cumulative_.size(), 0.0);
  double z = 0.0;
  for (std::size_t f = 0; f < q.size(); ++f) {
    if (feasible(f)) {
      q[f] = std::exp(lo - cumulative_[f]);
      z += q[f];
    }
  }
  for (double& v : q) v /= z;
  return q;
}

std::vector<double> ExpWeights::predict(const FiniteFunctionClass& cls,
                                        ContextId x) const {
  const std::vector<double> q = weights();
  std::vector<double> out(cls.n_actions(), 0.0);
  for (std::size_t f = 0; f < q.size(); ++f) {
    if (q[f] == 0.0) continue;
    const auto row = cls.row(f, x);
    for (std::size_t a = 0; a < out.size(); ++a) out[a] += q[f] * row[a];
  }
  return out;
}

}  // namespace varbandit
