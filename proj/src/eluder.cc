#include "varbandit/eluder.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <unordered_set>

#include "varbandit/errors.h"

namespace varbandit {
namespace {

// Disagreement cost of every unordered pair at every point: squared value
// gaps for function classes, squared Hellinger distances for model classes.
// Pairs that agree everywhere are dropped; they can never enter a witness.
struct CostTable {
  std::size_t n_points = 0;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<double> costs;  // [pair][point]

  double cost(std::size_t p, std::size_t z) const {
    return costs[p * n_points + z];
  }
};

using PointCost = std::function<double(std::size_t, std::size_t, std::size_t)>;

CostTable build_costs(std::size_t n_members, std::size_t n_points,
                      const PointCost& cost) {
  CostTable table;
  table.n_points = n_points;
  std::vector<double> row(n_points);
  for (std::size_t i = 0; i < n_members; ++i) {
    for (std::size_t j = i + 1; j < n_members; ++j) {
      bool any = false;
      for (std::size_t z = 0; z < n_points; ++z) {
        row[z] = cost(i, j, z);
        any = any || row[z] > 0.0;
      }
      if (!any) continue;
      table.pairs.emplace_back(i, j);
      table.costs.insert(table.costs.end(), row.begin(), row.end());
    }
  }
  return table;
}

// Validity of a threshold. kAtAlpha is alpha0 = alpha exactly: qualify when
// cost > tau, spend allowed while <= tau. kBelow is the limit alpha0 -> g^-
// for an achievable cost value tau = g^2: qualify when cost >= tau, spend
// allowed while < tau. Between consecutive achievable costs the qualifying
// set is constant and the spend condition only loosens as alpha0 grows, so
// these candidates cover every alpha0 >= alpha.
struct Threshold {
  double tau = 0.0;
  bool below = false;

  bool qualifies(double c) const { return below ? c >= tau : c > tau; }
  bool spend_ok(double s) const { return below ? s < tau : s <= tau; }
};

std::vector<Threshold> candidate_thresholds(const CostTable& table,
                                            double alpha) {
  const double alpha_sq = alpha * alpha;
  std::vector<double> values;
  for (double c : table.costs) {
    if (c > alpha_sq) values.push_back(c);
  }
  std::sort(values.begin(), values.end(), std::greater<>());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  std::vector<Threshold> out;
  out.reserve(values.size() + 1);
  for (double v : values) out.push_back({v, true});
  out.push_back({alpha_sq, false});
  return out;
}

struct SearchState {
  std::vector<std::uint64_t> used;
  std::vector<double> spend;
  std::vector<WitnessStep> path;
};

class WitnessSearch {
 public:
  WitnessSearch(const CostTable& table, Threshold threshold)
      : table_(table), threshold_(threshold) {}

  // Pair certifying z at this state, or npos when z cannot be appended.
  std::size_t certifying_pair(const SearchState& s, std::size_t z) const {
    if (s.used[z / 64] >> (z % 64) & 1ULL) return npos;
    for (std::size_t p = 0; p < table_.pairs.size(); ++p) {
      if (threshold_.qualifies(table_.cost(p, z)) &&
          threshold_.spend_ok(s.spend[p])) {
        return p;
      }
    }
    return npos;
  }

  SearchState empty_state() const {
    return {std::vector<std::uint64_t>((table_.n_points + 63) / 64, 0),
            std::vector<double>(table_.pairs.size(), 0.0),
            {}};
  }

  void append(SearchState& s, std::size_t z, std::size_t p) const {
    s.used[z / 64] |= 1ULL << (z % 64);
    for (std::size_t q = 0; q < table_.pairs.size(); ++q) {
      s.spend[q] += table_.cost(q, z);
    }
    s.path.push_back({z, table_.pairs[p].first, table_.pairs[p].second});
  }

  std::vector<WitnessStep> exact() {
    best_.clear();
    visited_.clear();
    archive_.assign(table_.n_points + 1, {});
    SearchState root = empty_state();
    dfs(root);
    return best_;
  }

  std::vector<WitnessStep> greedy(std::size_t restarts, std::uint64_t seed) {
    std::vector<WitnessStep> best;
    for (std::size_t r = 0; r < std::max<std::size_t>(restarts, 1); ++r) {
      Rng rng = Rng::for_stream(seed, r, 0, StreamPurpose::kAuxiliary);
      SearchState s = empty_state();
      while (true) {
        std::vector<std::pair<std::size_t, std::size_t>> options;
        for (std::size_t z = 0; z < table_.n_points; ++z) {
          const std::size_t p = certifying_pair(s, z);
          if (p != npos) options.emplace_back(z, p);
        }
        if (options.empty()) break;
        std::size_t pick = 0;
        if (r == 0) {
          // Deterministic pass: extend with the point that adds the least
          // spend to pairs that are still usable.
          double least = INFINITY;
          for (std::size_t i = 0; i < options.size(); ++i) {
            double added = 0.0;
            for (std::size_t q = 0; q < table_.pairs.size(); ++q) {
              if (threshold_.spend_ok(s.spend[q])) {
                added += table_.cost(q, options[i].first);
              }
            }
            if (added < least) {
              least = added;
              pick = i;
            }
          }
        } else {
          pick = rng.below(options.size());
        }
        append(s, options[pick].first, options[pick].second);
      }
      if (s.path.size() > best.size()) best = s.path;
    }
    return best;
  }

 private:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  static constexpr std::size_t kArchivePerLength = 256;

  struct BitsetHash {
    std::size_t operator()(const std::vector<std::uint64_t>& v) const {
      std::uint64_t h = 0x12345;
      for (auto w : v) h = mix64(h ^ w);
      return static_cast<std::size_t>(h);
    }
  };

  bool dominated(const SearchState& s) const {
    const std::size_t len = s.path.size();
    for (std::size_t l = len; l < archive_.size(); ++l) {
      for (const auto& spend : archive_[l]) {
        bool weakly_less = true;
        for (std::size_t q = 0; q < spend.size() && weakly_less; ++q) {
          weakly_less = spend[q] <= s.spend[q];
        }
        if (weakly_less) return true;
      }
    }
    return false;
  }

  void dfs(SearchState& s) {
    if (s.path.size() > best_.size()) best_ = s.path;
    std::vector<std::pair<std::size_t, std::size_t>> options;
    for (std::size_t z = 0; z < table_.n_points; ++z) {
      const std::size_t p = certifying_pair(s, z);
      if (p != npos) options.emplace_back(z, p);
    }
    // Spend only grows, so a point that cannot be appended now never can.
    if (s.path.size() + options.size() <= best_.size()) return;
    for (const auto& [z, p] : options) {
      SearchState child = s;
      append(child, z, p);
      if (!visited_.insert(child.used).second) continue;
      if (dominated(child)) continue;
      auto& bucket = archive_[child.path.size()];
      if (bucket.size() < kArchivePerLength) bucket.push_back(child.spend);
      dfs(child);
    }
  }

  const CostTable& table_;
  Threshold threshold_;
  std::vector<WitnessStep> best_;
  std::unordered_set<std::vector<std::uint64_t>, BitsetHash> visited_;
  std::vector<std::vector<std::vector<double>>> archive_;
};

// Reported alpha0: a point strictly inside the interval of thresholds that
// validate the witness, [max(alpha^2, largest spend), smallest cost).
double reported_alpha0(const CostTable& table,
                       const std::vector<WitnessStep>& steps, double alpha) {
  if (steps.empty()) return alpha;
  auto pair_index = [&](std::size_t f, std::size_t g) {
    for (std::size_t p = 0; p < table.pairs.size(); ++p) {
      if (table.pairs[p] == std::make_pair(std::min(f, g), std::max(f, g))) {
        return p;
      }
    }
    throw InvariantError("witness pair missing from cost table");
  };
  double lo = alpha * alpha;
  double hi = INFINITY;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const std::size_t p = pair_index(steps[i].f, steps[i].f_prime);
    double spend = 0.0;
    for (std::size_t j = 0; j < i; ++j) spend += table.cost(p, steps[j].z);
    lo = std::max(lo, spend);
    hi = std::min(hi, table.cost(p, steps[i].z));
  }
  return std::sqrt(lo + 0.5 * (hi - lo));
}

EluderResult solve(const CostTable& table, double alpha, EluderMode mode,
                   const EluderOptions& options) {
  if (!(alpha >= 0.0)) throw ArgumentError("alpha must be nonnegative");
  EluderResult result;
  result.witness.alpha0 = alpha;
  if (table.pairs.empty()) return result;
  // Candidates run from the largest threshold down; a later candidate must be
  // strictly longer to win, so ties keep the largest alpha0.
  for (const Threshold& threshold : candidate_thresholds(table, alpha)) {
    WitnessSearch search(table, threshold);
    std::vector<WitnessStep> steps =
        mode == EluderMode::kExact
            ? search.exact()
            : search.greedy(options.greedy_restarts, options.seed);
    if (steps.size() > result.dimension) {
      result.dimension = steps.size();
      result.witness.steps = std::move(steps);
    }
  }
  result.witness.alpha0 =
      reported_alpha0(table, result.witness.steps, alpha);
  return result;
}

void check_budget(std::size_t members, std::size_t points,
                  const EluderOptions& options) {
  const std::size_t tuples = members * points;
  if (tuples > options.exact_budget) {
    throw CapacityError("exact eluder search needs " + std::to_string(tuples) +
                        " candidate tuples, above the budget of " +
                        std::to_string(options.exact_budget));
  }
}

template <typename CostAt>
bool verify_generic(std::size_t n_members, std::size_t n_points,
                    const EluderWitness& witness, CostAt cost) {
  const double tau = witness.alpha0 * witness.alpha0;
  for (const auto& step : witness.steps) {
    if (step.z >= n_points || step.f >= n_members ||
        step.f_prime >= n_members) {
      throw ArgumentError("witness step references an id out of range");
    }
  }
  for (std::size_t i = 0; i < witness.steps.size(); ++i) {
    const auto& step = witness.steps[i];
    double spend = 0.0;
    for (std::size_t j = 0; j < i; ++j) {
      spend += cost(step.f, step.f_prime, witness.steps[j].z);
    }
    if (!(spend <= tau)) return false;
    if (!(cost(step.f, step.f_prime, step.z) > tau)) return false;
  }
  return true;
}

double squared_gap(const FiniteFunctionClass& cls, std::size_t f,
                   std::size_t g, std::size_t z) {
  const std::size_t x = z / cls.n_actions();
  const std::size_t a = z % cls.n_actions();
  const double d = cls.value(f, x, a) - cls.value(g, x, a);
  return d * d;
}

double hellinger_at(const GaussianModelClass& models, std::size_t m,
                    std::size_t n, std::size_t z) {
  const std::size_t x = z / models.n_actions();
  const std::size_t a = z % models.n_actions();
  return hellinger_sq_gaussian(models.mean(m, x, a), models.stddev(m, x, a),
                               models.mean(n, x, a), models.stddev(n, x, a));
}

}  // namespace

bool verify_witness(const FiniteFunctionClass& cls,
                    const EluderWitness& witness) {
  return verify_generic(
      cls.n_functions(), cls.n_contexts() * cls.n_actions(), witness,
      [&](std::size_t f, std::size_t g, std::size_t z) {
        return squared_gap(cls, f, g, z);
      });
}

bool verify_hellinger_witness(const GaussianModelClass& models,
                              const EluderWitness& witness) {
  return verify_generic(
      models.n_models(), models.n_contexts() * models.n_actions(), witness,
      [&](std::size_t m, std::size_t n, std::size_t z) {
        return hellinger_at(models, m, n, z);
      });
}

EluderResult eluder_dimension(const FiniteFunctionClass& cls, double alpha,
                              EluderMode mode, const EluderOptions& options) {
  const std::size_t points = cls.n_contexts() * cls.n_actions();
  if (mode == EluderMode::kExact) {
    check_budget(cls.n_functions(), points, options);
  }
  const CostTable table = build_costs(
      cls.n_functions(), points,
      [&](std::size_t f, std::size_t g, std::size_t z) {
        return squared_gap(cls, f, g, z);
      });
  return solve(table, alpha, mode, options);
}

EluderResult hellinger_eluder_dimension(const GaussianModelClass& models,
                                        double alpha, EluderMode mode,
                                        const EluderOptions& options) {
  const std::size_t points = models.n_contexts() * models.n_actions();
  if (mode == EluderMode::kExact) {
    check_budget(models.n_models(), points, options);
  }
  const CostTable table = build_costs(
      models.n_models(), points,
      [&](std::size_t m, std::size_t n, std::size_t z) {
        return hellinger_at(models, m, n, z);
      });
  return solve(table, alpha, mode, options);
}

double elliptical_counter(std::span<const double> weights,
                          std::span<const double> ratios, double lambda) {
  if (weights.size() != ratios.size()) {
    throw ArgumentError("weights and ratios differ in length");
  }
  if (lambda < 0.0) throw ArgumentError("lambda must be nonnegative");
  double total = 0.0;
  for (std::size_t t = 0; t < ratios.size(); ++t) {
    if (weights[t] < 0.0 || ratios[t] < 0.0) {
      throw ArgumentError("elliptical counter inputs must be nonnegative");
    }
    total += std::min(lambda, weights[t] * ratios[t]);
  }
  return total;
}

double elliptical_bound(std::size_t d_elu, double lambda, std::size_t horizon) {
  return static_cast<double>(d_elu) *
         (lambda + std::log(static_cast<double>(std::max<std::size_t>(horizon, 1))));
}

double weighted_elliptical_bound(std::size_t d_elu, double lambda,
                                 std::size_t horizon, double weight_bound) {
  const double t = static_cast<double>(std::max<std::size_t>(horizon, 1));
  return 3.0 * static_cast<double>(d_elu) * (lambda + std::log(t)) *
         std::log(std::max(weight_bound * t, std::exp(1.0)));
}

}  // namespace varbandit
