#include "varbandit/distvarcb.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <utility>

#include <boost/math/quadrature/gauss.hpp>

#include "varbandit/errors.h"

namespace varbandit {
namespace {

constexpr double kDropWeight = 1e-14;
constexpr double kSpan = 8.0;
constexpr int kMaxDepth = 40;

using Rule = boost::math::quadrature::gauss<double, 20>;

double density(const GaussianComponent& c, double y) {
  const double z = (y - c.mean) / c.stddev;
  return std::exp(-0.5 * z * z) / (c.stddev * std::sqrt(2.0 * std::numbers::pi));
}

void check_component(const GaussianComponent& c) {
  if (!(c.stddev > 0.0) || !std::isfinite(c.mean)) {
    throw ArgumentError("Gaussian needs a finite mean and positive sd");
  }
}

// Integrals of sqrt(query_i * mixture) over one panel, one per query.
class PanelIntegrator {
 public:
  PanelIntegrator(std::span<const GaussianComponent> queries,
                  std::span<const GaussianComponent> mixture)
      : queries_(queries), mixture_(mixture) {}

  std::vector<double> rule(double lo, double hi) const {
    std::vector<double> out(queries_.size(), 0.0);
    const double half = 0.5 * (hi - lo);
    const double mid = 0.5 * (hi + lo);
    const auto& nodes = Rule::abscissa();
    const auto& w = Rule::weights();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      for (double sign : {-1.0, 1.0}) {
        const double y = mid + sign * half * nodes[i];
        double m = 0.0;
        for (const auto& c : mixture_) m += c.weight * density(c, y);
        if (m <= 0.0) continue;
        for (std::size_t q = 0; q < queries_.size(); ++q) {
          out[q] += w[i] * half * std::sqrt(density(queries_[q], y) * m);
        }
      }
    }
    return out;
  }

  // Adaptive refinement; adds into `total` and `error`.
  void integrate(double lo, double hi, const std::vector<double>& coarse,
                 double allowance, int depth, std::vector<double>& total,
                 double& error) const {
    const double mid = 0.5 * (lo + hi);
    std::vector<double> left = rule(lo, mid);
    std::vector<double> right = rule(mid, hi);
    double diff = 0.0;
    for (std::size_t q = 0; q < coarse.size(); ++q) {
      diff = std::max(diff, std::abs(left[q] + right[q] - coarse[q]));
    }
    if (diff <= allowance) {
      for (std::size_t q = 0; q < coarse.size(); ++q) total[q] += left[q] + right[q];
      error += diff;
      return;
    }
    if (depth >= kMaxDepth) {
      throw NumericError("Hellinger quadrature did not converge on [" +
                         std::to_string(lo) + ", " + std::to_string(hi) +
                         "], panel error " + std::to_string(diff));
    }
    integrate(lo, mid, left, 0.5 * allowance, depth + 1, total, error);
    integrate(mid, hi, right, 0.5 * allowance, depth + 1, total, error);
  }

 private:
  std::span<const GaussianComponent> queries_;
  std::span<const GaussianComponent> mixture_;
};

}  // namespace

std::vector<double> hellinger_sq_to_mixture(
    std::span<const GaussianComponent> queries,
    std::span<const GaussianComponent> mixture, double tolerance) {
  if (mixture.empty()) throw ArgumentError("mixture has no components");
  double total_weight = 0.0;
  for (const auto& c : mixture) {
    check_component(c);
    if (!(c.weight >= 0.0)) throw ArgumentError("negative mixture weight");
    total_weight += c.weight;
  }
  if (!(total_weight > 0.0)) throw ArgumentError("mixture has zero weight");
  std::vector<GaussianComponent> kept;
  for (const auto& c : mixture) {
    if (c.weight / total_weight >= kDropWeight) kept.push_back(c);
  }
  double kept_weight = 0.0;
  for (const auto& c : kept) kept_weight += c.weight;
  for (auto& c : kept) c.weight /= kept_weight;
  for (const auto& q : queries) check_component(q);

  std::vector<double> out(queries.size(), 0.0);
  if (queries.empty()) return out;
  if (kept.size() == 1) {
    for (std::size_t i = 0; i < queries.size(); ++i) {
      out[i] = hellinger_sq_gaussian(queries[i].mean, queries[i].stddev,
                                     kept[0].mean, kept[0].stddev);
    }
    return out;
  }

  std::vector<double> cuts;
  auto add_cuts = [&cuts](const GaussianComponent& c) {
    for (double k : {-kSpan, -3.0, 0.0, 3.0, kSpan}) {
      cuts.push_back(c.mean + k * c.stddev);
    }
  };
  for (const auto& c : kept) add_cuts(c);
  for (const auto& q : queries) add_cuts(q);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  const double span = cuts.back() - cuts.front();
  const PanelIntegrator panel(queries, kept);
  std::vector<double> affinity(queries.size(), 0.0);
  double error = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double lo = cuts[i];
    const double hi = cuts[i + 1];
    const double allowance = 0.5 * tolerance * (hi - lo) / span;
    panel.integrate(lo, hi, panel.rule(lo, hi), allowance, 0, affinity, error);
  }
  if (error > tolerance) {
    throw NumericError("Hellinger quadrature error estimate " +
                       std::to_string(error) + " exceeds tolerance");
  }
  for (std::size_t i = 0; i < queries.size(); ++i) {
    out[i] = std::clamp(1.0 - affinity[i], 0.0, 1.0);
  }
  return out;
}

double hellinger_sq_to_mixture(const GaussianComponent& query,
                               std::span<const GaussianComponent> mixture,
                               double tolerance) {
  return hellinger_sq_to_mixture(std::span(&query, 1), mixture, tolerance)[0];
}

double solve_exploration_lambda(std::span<const double> coef) {
  if (coef.empty()) throw ArgumentError("no actions to explore");
  bool has_zero = false;
  for (double c : coef) {
    if (!(c >= 0.0)) throw ArgumentError("exploration coefficients must be nonnegative");
    if (c == 0.0) has_zero = true;
  }
  if (!has_zero) throw ArgumentError("the leading action must have a zero gap");
  auto mass = [&coef](double lambda) {
    double s = 0.0;
    for (double c : coef) {
      if (std::isfinite(c)) s += 1.0 / (lambda + c);
    }
    return s;
  };
  double lo = 0.0;
  double hi = static_cast<double>(coef.size());
  if (mass(hi) > 1.0 + 1e-15) {
    throw NumericError("exploration mass exceeds 1 at lambda = A");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mass(mid) > 1.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

MixtureModel::MixtureModel(const GaussianModelClass* models)
    : models_(models),
      active_(models->n_models(), true),
      log_weights_(models->n_models(), 0.0) {}

std::vector<double> MixtureModel::weights() const {
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < active_.size(); ++m) {
    if (active_[m]) hi = std::max(hi, log_weights_[m]);
  }
  std::vector<double> q(active_.size(), 0.0);
  double z = 0.0;
  for (std::size_t m = 0; m < active_.size(); ++m) {
    if (!active_[m]) continue;
    q[m] = std::exp(log_weights_[m] - hi);
    z += q[m];
  }
  for (double& v : q) v /= z;
  return q;
}

double MixtureModel::mean(ContextId x, ActionId a) const {
  const std::vector<double> q = weights();
  double mu = 0.0;
  for (std::size_t m = 0; m < q.size(); ++m) {
    if (active_[m]) mu += q[m] * models_->mean(m, x, a);
  }
  return mu;
}

double MixtureModel::variance(ContextId x, ActionId a) const {
  const std::vector<double> q = weights();
  const double mu = mean(x, a);
  double within = 0.0;
  double between = 0.0;
  for (std::size_t m = 0; m < q.size(); ++m) {
    if (!active_[m]) continue;
    const double d = models_->mean(m, x, a) - mu;
    within += q[m] * models_->variance(m, x, a);
    between += q[m] * d * d;
  }
  return within + between;
}

std::vector<GaussianComponent> MixtureModel::components(ContextId x,
                                                        ActionId a) const {
  const std::vector<double> q = weights();
  std::map<std::pair<double, double>, double> merged;
  for (std::size_t m = 0; m < q.size(); ++m) {
    if (!active_[m]) continue;
    merged[{models_->mean(m, x, a), models_->stddev(m, x, a)}] += q[m];
  }
  std::vector<GaussianComponent> out;
  out.reserve(merged.size());
  for (const auto& [params, w] : merged) {
    out.push_back({w, params.first, params.second});
  }
  return out;
}

void MixtureModel::add_observation(ContextId x, ActionId a, double r) {
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < active_.size(); ++m) {
    if (!active_[m]) continue;
    const double sd = models_->stddev(m, x, a);
    const double z = (r - models_->mean(m, x, a)) / sd;
    log_weights_[m] += -0.5 * z * z - std::log(sd) -
                       0.5 * std::log(2.0 * std::numbers::pi);
    hi = std::max(hi, log_weights_[m]);
  }
  for (std::size_t m = 0; m < active_.size(); ++m) {
    if (!active_[m]) continue;
    log_weights_[m] = std::max(log_weights_[m] - hi, kLogFloor);
  }
}

void MixtureModel::restrict(const Mask& next) {
  for (std::size_t m = 0; m < active_.size(); ++m) {
    if (next[m] && !active_[m]) {
      throw ContractError("eliminated models cannot return");
    }
  }
  if (mask_count(next) == 0) throw StateError("every model was eliminated");
  active_ = next;
}

DistVarCB::DistVarCB(GaussianModelClass models, DistVarCBParams params)
    : models_(std::move(models)), mixture_(&models_),
      radii_(models_.n_models(), 0.0) {
  if (params.horizon == 0) throw ArgumentError("horizon must be positive");
  if (!(params.delta > 0.0 && params.delta < 1.0)) {
    throw ArgumentError("delta must lie in (0, 1)");
  }
  for (double sd : models_.stds()) {
    if (!(sd > 0.0)) throw ArgumentError("every model needs a positive sd");
  }
  const double n = static_cast<double>(models_.n_models());
  radius_limit_ = params.radius.value_or(
      std::log(2.0 * n * static_cast<double>(params.horizon) / params.delta));
  gamma_log_ = std::log(2.0 * n / params.delta);
}

double DistVarCB::gamma() const {
  return std::sqrt(static_cast<double>(models_.n_actions()) *
                   std::max(1.0, variance_sum_) / gamma_log_);
}

Decision DistVarCB::choose(ContextId x, std::optional<double>, Rng& rng) {
  if (pending_) throw StateError("choose called twice without observe");
  if (x >= models_.n_contexts()) throw ArgumentError("context out of range");
  const std::size_t n_actions = models_.n_actions();
  last_ = DistRound{};
  last_.gamma = gamma();
  last_.max_pair.assign(n_actions, 0.0);
  last_.mix_mean.resize(n_actions);
  last_.mix_var.resize(n_actions);

  for (ActionId a = 0; a < n_actions; ++a) {
    const std::vector<GaussianComponent> comps = mixture_.components(x, a);
    double worst = 0.0;
    for (std::size_t i = 0; i < comps.size(); ++i) {
      for (std::size_t j = i + 1; j < comps.size(); ++j) {
        worst = std::max(worst, hellinger_sq_gaussian(comps[i].mean, comps[i].stddev,
                                                      comps[j].mean, comps[j].stddev));
      }
    }
    last_.max_pair[a] = worst;
    last_.mix_mean[a] = mixture_.mean(x, a);
    last_.mix_var[a] = mixture_.variance(x, a);
  }

  Decision d;
  const ActionId probe = argmax_lowest(last_.max_pair);
  if (last_.max_pair[probe] >= 0.5) {
    last_.indicator = 1;
    d.action = probe;
    d.branch = Branch::kDiscriminative;
  } else {
    last_.indicator = 2;
    const double top = *std::max_element(last_.mix_mean.begin(), last_.mix_mean.end());
    std::vector<double> coef(n_actions);
    for (ActionId a = 0; a < n_actions; ++a) {
      const double gap = top - last_.mix_mean[a];
      coef[a] = gap == 0.0 ? 0.0 : last_.gamma / last_.mix_var[a] * gap;
    }
    last_.lambda = solve_exploration_lambda(coef);
    last_.probs.resize(n_actions);
    double total = 0.0;
    for (ActionId a = 0; a < n_actions; ++a) {
      last_.probs[a] = std::isfinite(coef[a]) ? 1.0 / (last_.lambda + coef[a]) : 0.0;
      total += last_.probs[a];
    }
    last_.residual = std::abs(total - 1.0);
    d.action = rng.categorical(last_.probs);
    d.branch = Branch::kIgw;
  }
  d.layer = last_.indicator;
  pending_ = true;
  pending_x_ = x;
  return d;
}

double DistVarCB::observe(ContextId x, ActionId a, double r,
                          std::optional<double>) {
  if (!pending_ || x != pending_x_) {
    throw StateError("observe does not match the pending round");
  }
  pending_ = false;
  variance_sum_ += *std::max_element(last_.mix_var.begin(), last_.mix_var.end());

  // Distance of every active model to this round's mixture, one quadrature
  // per distinct parameter pair.
  const std::vector<GaussianComponent> mix = mixture_.components(x, a);
  const Mask& active = mixture_.active();
  std::map<std::pair<double, double>, std::size_t> slot;
  std::vector<GaussianComponent> queries;
  std::vector<std::size_t> query_of(active.size(), 0);
  for (ModelId m = 0; m < active.size(); ++m) {
    if (!active[m]) continue;
    const std::pair<double, double> key{models_.mean(m, x, a), models_.stddev(m, x, a)};
    auto [it, inserted] = slot.emplace(key, queries.size());
    if (inserted) queries.push_back({1.0, key.first, key.second});
    query_of[m] = it->second;
  }
  const std::vector<double> dist = hellinger_sq_to_mixture(queries, mix);
  Mask next = active;
  for (ModelId m = 0; m < active.size(); ++m) {
    if (!active[m]) continue;
    radii_[m] += dist[query_of[m]];
    if (radii_[m] > radius_limit_) next[m] = false;
  }
  mixture_.add_observation(x, a, r);
  mixture_.restrict(next);
  return 1.0;
}

}  // namespace varbandit
