#include "varbandit/policy.h"

#include <algorithm>

#include "varbandit/errors.h"

namespace varbandit {

std::string to_string(VarianceModel model) {
  switch (model) {
    case VarianceModel::kWeakRevealedStart:
      return "WEAK_REVEALED_START";
    case VarianceModel::kWeakRevealedEnd:
      return "WEAK_REVEALED_END";
    case VarianceModel::kStrongPostAction:
      return "STRONG_POST_ACTION";
    case VarianceModel::kHidden:
      return "HIDDEN";
  }
  return "UNKNOWN";
}

VarianceModel variance_model_from_string(const std::string& name) {
  if (name == "WEAK_REVEALED_START") return VarianceModel::kWeakRevealedStart;
  if (name == "WEAK_REVEALED_END") return VarianceModel::kWeakRevealedEnd;
  if (name == "STRONG_POST_ACTION") return VarianceModel::kStrongPostAction;
  if (name == "HIDDEN") return VarianceModel::kHidden;
  throw ConfigError("unknown variance model '" + name + "'");
}

std::vector<double> inverse_gap_weights(const std::vector<double>& pred,
                                        const std::vector<ActionId>& support,
                                        double base, double scale,
                                        ActionId* best_out) {
  if (support.empty()) throw StateError("empty action support");
  ActionId best = support.front();
  for (ActionId a : support) {
    if (pred[a] > pred[best]) best = a;
  }
  std::vector<double> p(pred.size(), 0.0);
  double rest = 0.0;
  for (ActionId a : support) {
    if (a == best) continue;
    p[a] = 1.0 / (base + scale * (pred[best] - pred[a]));
    rest += p[a];
  }
  p[best] = 1.0 - rest;
  if (p[best] < -1e-12) {
    throw InvariantError("inverse gap weighting left negative mass on the leader");
  }
  if (p[best] < 0.0) p[best] = 0.0;
  if (best_out != nullptr) *best_out = best;
  return p;
}

std::vector<ActionId> restrict_actions(const FiniteFunctionClass& cls,
                                       const Mask& active, ContextId x) {
  std::vector<bool> hit(cls.n_actions(), false);
  bool any = false;
  for (FunctionId f = 0; f < cls.n_functions(); ++f) {
    if (!active[f]) continue;
    any = true;
    const auto row = cls.row(f, x);
    const double top = *std::max_element(row.begin(), row.end());
    for (ActionId a = 0; a < row.size(); ++a) {
      if (row[a] == top) hit[a] = true;
    }
  }
  if (!any) throw StateError("no active function to restrict actions");
  std::vector<ActionId> out;
  for (ActionId a = 0; a < hit.size(); ++a) {
    if (hit[a]) out.push_back(a);
  }
  return out;
}

void PairwiseSums::add(const FiniteFunctionClass& cls, const Mask& active,
                       ContextId x, ActionId a, double w) {
  for (FunctionId f = 0; f < n_; ++f) {
    if (!active[f]) continue;
    const double vf = cls.value(f, x, a);
    for (FunctionId g = f + 1; g < n_; ++g) {
      if (!active[g]) continue;
      const double d = vf - cls.value(g, x, a);
      const double inc = w * d * d;
      sums_[f * n_ + g] += inc;
      sums_[g * n_ + f] += inc;
    }
  }
}

Decision UniformPolicy::choose(ContextId, std::optional<double>, Rng& rng) {
  return {static_cast<ActionId>(rng.below(n_actions_)), Branch::kPlain, 0};
}

}  // namespace varbandit
