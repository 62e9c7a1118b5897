#include "varbandit/zeroone.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "varbandit/errors.h"

namespace varbandit {
namespace {

// log|F|, kept away from zero so a single-function class still gets a finite
// rate.
double class_log_size(const FiniteFunctionClass& cls) {
  return std::log(std::max<double>(2.0, static_cast<double>(cls.n_functions())));
}

}  // namespace

ZeroOnePolicy::ZeroOnePolicy(FiniteFunctionClass cls)
    : cls_(std::move(cls)),
      gamma_(std::sqrt(8.0 * static_cast<double>(cls_.n_actions()) /
                       class_log_size(cls_))),
      active_(cls_.n_functions(), true),
      weights_(cls_.n_functions()) {}

Decision ZeroOnePolicy::choose(ContextId x, std::optional<double>, Rng& rng) {
  if (pending_) throw StateError("choose called twice without observe");
  cls_.check_indices(0, x);
  last_ = IgwRound{};
  last_.support = restrict_actions(cls_, active_, x);
  last_.scale = gamma_ * std::sqrt(1.0 + variance_sum_);
  const std::vector<double> pred = weights_.predict(cls_, x);
  last_.probs = inverse_gap_weights(pred, last_.support,
                                    static_cast<double>(cls_.n_actions()),
                                    last_.scale, &last_.leader);
  pending_ = true;
  return {static_cast<ActionId>(rng.categorical(last_.probs)), Branch::kIgw, 0};
}

double ZeroOnePolicy::observe(ContextId x, ActionId a, double r,
                              std::optional<double> end_sigma) {
  if (!pending_) throw StateError("observe without a pending round");
  if (!end_sigma || (*end_sigma != 0.0 && *end_sigma != 1.0)) {
    throw ArgumentError("zero-one learner needs sigma in {0, 1} after acting");
  }
  pending_ = false;
  if (*end_sigma == 0.0) {
    Mask next = active_;
    for (FunctionId f = 0; f < next.size(); ++f) {
      if (next[f] &&
          std::abs(cls_.value(f, x, a) - r) > ExpWeights::kMatchTolerance) {
        next[f] = false;
      }
    }
    if (mask_count(next) == 0) {
      throw InvariantError("no function matches a noiseless reward");
    }
    active_ = std::move(next);
  }
  weights_.update_zero_one(cls_, x, a, r, *end_sigma);
  variance_sum_ += *end_sigma;
  return 1.0;
}

SquareCB::SquareCB(FiniteFunctionClass cls, std::size_t horizon)
    : cls_(std::move(cls)), gamma_(0.0), weights_(cls_.n_functions()) {
  if (horizon == 0) throw ArgumentError("horizon must be positive");
  gamma_ = std::sqrt(static_cast<double>(cls_.n_actions()) *
                     static_cast<double>(horizon) / class_log_size(cls_));
}

Decision SquareCB::choose(ContextId x, std::optional<double>, Rng& rng) {
  cls_.check_indices(0, x);
  last_ = IgwRound{};
  last_.support.resize(cls_.n_actions());
  std::iota(last_.support.begin(), last_.support.end(), ActionId{0});
  last_.scale = gamma_;
  const std::vector<double> pred = weights_.predict(cls_, x);
  last_.probs = inverse_gap_weights(pred, last_.support,
                                    static_cast<double>(cls_.n_actions()),
                                    gamma_, &last_.leader);
  return {static_cast<ActionId>(rng.categorical(last_.probs)), Branch::kIgw, 0};
}

double SquareCB::observe(ContextId x, ActionId a, double r,
                         std::optional<double>) {
  weights_.add_squared_loss(cls_, x, a, r);
  return 1.0;
}

}  // namespace varbandit
