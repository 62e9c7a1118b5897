#pragma once

// Shared domain types: finite function and Gaussian model classes, the
// two-point reward laws used by the lower-bound constructions, round records
// and regret traces.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "varbandit/rng.h"

namespace varbandit {

using ContextId = std::size_t;
using ActionId = std::size_t;
using FunctionId = std::size_t;
using ModelId = std::size_t;

// Lowest index among the maximizers of `values`. Every argmax in the library
// goes through this so that ties are broken the same way everywhere.
std::size_t argmax_lowest(std::span<const double> values);

// Dense table of mean-reward functions f: X x A -> [0, 1], indexed f, x, a.
class FiniteFunctionClass {
 public:
  FiniteFunctionClass(std::size_t n_contexts, std::size_t n_actions,
                      std::vector<double> values, FunctionId star_index = 0);

  std::size_t n_functions() const { return n_functions_; }
  std::size_t n_contexts() const { return n_contexts_; }
  std::size_t n_actions() const { return n_actions_; }
  FunctionId star_index() const { return star_index_; }

  double value(FunctionId f, ContextId x, ActionId a) const {
    return values_[(f * n_contexts_ + x) * n_actions_ + a];
  }
  // All actions' values of f at context x.
  std::span<const double> row(FunctionId f, ContextId x) const {
    return {values_.data() + (f * n_contexts_ + x) * n_actions_, n_actions_};
  }
  const std::vector<double>& values() const { return values_; }

  FiniteFunctionClass with_star(FunctionId star) const;

  void check_indices(FunctionId f, ContextId x) const;
  void check_indices(FunctionId f, ContextId x, ActionId a) const;

  friend bool operator==(const FiniteFunctionClass&,
                         const FiniteFunctionClass&) = default;

 private:
  std::size_t n_functions_;
  std::size_t n_contexts_;
  std::size_t n_actions_;
  std::vector<double> values_;
  FunctionId star_index_;
};

// Each model maps (x, a) to N(mean, std^2). Means and standard deviations
// live in [0, 1].
class GaussianModelClass {
 public:
  GaussianModelClass(std::size_t n_contexts, std::size_t n_actions,
                     std::vector<double> means, std::vector<double> stds,
                     ModelId star_index = 0);

  std::size_t n_models() const { return n_models_; }
  std::size_t n_contexts() const { return n_contexts_; }
  std::size_t n_actions() const { return n_actions_; }
  ModelId star_index() const { return star_index_; }

  double mean(ModelId m, ContextId x, ActionId a) const {
    return means_[index(m, x, a)];
  }
  double stddev(ModelId m, ContextId x, ActionId a) const {
    return stds_[index(m, x, a)];
  }
  double variance(ModelId m, ContextId x, ActionId a) const {
    const double s = stds_[index(m, x, a)];
    return s * s;
  }
  const std::vector<double>& means() const { return means_; }
  const std::vector<double>& stds() const { return stds_; }

  // The class of mean functions f_M, in model order.
  FiniteFunctionClass mean_class() const;
  GaussianModelClass with_star(ModelId star) const;

  friend bool operator==(const GaussianModelClass&,
                         const GaussianModelClass&) = default;

 private:
  std::size_t index(ModelId m, ContextId x, ActionId a) const {
    return (m * n_contexts_ + x) * n_actions_ + a;
  }

  std::size_t n_models_;
  std::size_t n_contexts_;
  std::size_t n_actions_;
  std::vector<double> means_;
  std::vector<double> stds_;
  ModelId star_index_;
};

// Law on {0, 2*sigma} with P(2*sigma) = p_high.
struct TwoPointDistribution {
  double sigma = 0.0;
  double p_high = 0.0;

  double mean() const { return 2.0 * sigma * p_high; }
  double variance() const {
    return 4.0 * sigma * sigma * p_high * (1.0 - p_high);
  }
  double sample(Rng& rng) const { return rng.bernoulli(p_high) ? 2.0 * sigma : 0.0; }
};

enum class TwoPointKind { kCenter, kPlus, kMinus };

// CENTER has mean sigma; PLUS / MINUS shift the mean by +/- epsilon.
// Requires 0 < sigma <= 1/2 and 0 <= epsilon <= sigma / 2.
TwoPointDistribution two_point(double sigma, TwoPointKind kind,
                               double epsilon = 0.0);

// KL(p_minus || p_plus) of two laws on the same support.
double kl_two_point(const TwoPointDistribution& p_minus,
                    const TwoPointDistribution& p_plus);

// Squared Hellinger distance (with the 1 - affinity normalization) between
// N(mu1, sigma1^2) and N(mu2, sigma2^2).
double hellinger_sq_gaussian(double mu1, double sigma1, double mu2,
                             double sigma2);

ActionId best_action(const FiniteFunctionClass& cls, FunctionId f,
                     ContextId x);

enum class Branch { kDiscriminative, kIgw, kUcb, kLayer, kPlain };

std::string to_string(Branch branch);

struct RoundRecord {
  std::size_t t = 0;
  ContextId x = 0;
  ActionId a = 0;
  double r = 0.0;
  double sigma = 0.0;
  double w = 0.0;
  Branch branch = Branch::kPlain;
  int layer = 0;  // k_t for layered policies, 0 otherwise
};

// Per-round regret and cumulative variance accounting of one run. The
// running totals are always kept; the per-round vectors only when
// keep_rounds is set.
struct RegretTrace {
  std::size_t run_id = 0;
  std::uint64_t seed = 0;
  std::size_t fstar_id = 0;
  bool keep_rounds = true;

  std::size_t n_rounds = 0;
  double total_regret = 0.0;
  double lambda = 0.0;       // sum of sigma_t^2
  double lambda_inf = 0.0;   // sum of max_a variance at x_t
  double lambda_circ = 0.0;  // sum of the played pair's variance

  std::vector<RoundRecord> records;
  std::vector<double> inst_regret;
  std::vector<double> cum_regret;
  std::vector<double> cum_variance;
  std::vector<double> cum_var_max;
  std::vector<double> cum_var_played;

  void push(const RoundRecord& record, double regret, double variance,
            double var_max, double var_played);

  std::size_t rounds() const { return n_rounds; }
  double final_regret() const { return total_regret; }
  double final_lambda() const { return lambda; }
};

}  // namespace varbandit
