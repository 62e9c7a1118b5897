#pragma once

// Eluder dimension of finite function classes and Hellinger eluder dimension
// of Gaussian model classes, plus the elliptical-potential counters used as
// run diagnostics.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "varbandit/core.h"

namespace varbandit {

// One tuple of a witness. `z` encodes the context-action pair as
// x * n_actions + a.
struct WitnessStep {
  std::size_t z = 0;
  std::size_t f = 0;
  std::size_t f_prime = 0;

  friend bool operator==(const WitnessStep&, const WitnessStep&) = default;
};

// A sequence of tuples certifying a lower bound on the eluder dimension at
// threshold alpha0: at every position i the pair (f_i, f'_i) has spent at
// most alpha0^2 squared disagreement on z_1..z_{i-1} and disagrees by more
// than alpha0 at z_i.
struct EluderWitness {
  std::vector<WitnessStep> steps;
  double alpha0 = 0.0;
};

enum class EluderMode { kExact, kGreedy };

struct EluderOptions {
  // EXACT refuses classes with n_functions * n_contexts * n_actions above this.
  std::size_t exact_budget = 20000;
  std::size_t greedy_restarts = 32;
  std::uint64_t seed = 0;
};

struct EluderResult {
  std::size_t dimension = 0;
  EluderWitness witness;
};

bool verify_witness(const FiniteFunctionClass& cls,
                    const EluderWitness& witness);
bool verify_hellinger_witness(const GaussianModelClass& models,
                              const EluderWitness& witness);

// EXACT maximizes the witness length over every alpha0 >= alpha. GREEDY
// returns a valid witness found by randomized longest-extension search, so
// its length is a lower bound on the EXACT value.
EluderResult eluder_dimension(const FiniteFunctionClass& cls, double alpha,
                              EluderMode mode,
                              const EluderOptions& options = {});
EluderResult hellinger_eluder_dimension(const GaussianModelClass& models,
                                        double alpha, EluderMode mode,
                                        const EluderOptions& options = {});

// sum_t min{lambda, w_t * ratio_t}, where ratio_t is the round's sup-pair
// squared disagreement over (1 + weighted past disagreement). Pass unit
// weights for the unweighted potential.
double elliptical_counter(std::span<const double> weights,
                          std::span<const double> ratios, double lambda);

// d_elu * (lambda + log T): the unweighted potential bound.
double elliptical_bound(std::size_t d_elu, double lambda, std::size_t horizon);

// 3 * d_elu * (lambda + log T) * log(B T) for weights bounded by B.
double weighted_elliptical_bound(std::size_t d_elu, double lambda,
                                 std::size_t horizon, double weight_bound);

}  // namespace varbandit
