#pragma once

// Experiment runner: builds (seed, f*) cells from a JSON config, runs each
// cell's online loop with counter-keyed random streams, and aggregates the
// regret traces.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "varbandit/core.h"
#include "varbandit/environments.h"
#include "varbandit/policy.h"

namespace varbandit {

struct ExperimentConfig {
  nlohmann::json environment;
  nlohmann::json policy;
  std::size_t horizon = 1;
  std::vector<std::uint64_t> seeds;
  double delta = 0.05;
  std::size_t threads = 1;
  // Check after every round that f* is still in the policy's version space.
  bool probes = false;
  // Family members to run; empty means all.
  std::vector<std::size_t> fstar;
  // Keep per-round records (needed for CSV output).
  bool keep_rounds = true;

  static ExperimentConfig from_json(const nlohmann::json& j);
};

// "a..b" inclusive, or a single number.
std::vector<std::uint64_t> parse_seed_range(const std::string& text);

std::unique_ptr<Policy> make_policy(const nlohmann::json& spec,
                                    const Environment& env,
                                    std::size_t horizon, double delta);

struct ProbeFailure {
  std::size_t run_id = 0;
  std::uint64_t seed = 0;
  std::size_t fstar_id = 0;
  std::size_t t = 0;
  std::string what;
};

// Called after every observe with the round just finished.
using RoundProbe = std::function<void(const Policy&, const Environment&,
                                      const RoundRecord&)>;

struct CellResult {
  RegretTrace trace;
  std::vector<ProbeFailure> failures;
  // f* still in the version space at the end (true for policies without one).
  bool star_survived = true;
};

// One (seed, member) cell. Invariant and contract errors raised by the
// policy become failure records and end the cell early.
CellResult run_cell(const ExperimentConfig& config,
                    const EnvironmentFamily& family, std::size_t member,
                    std::uint64_t seed, std::size_t run_id,
                    const RoundProbe& probe = {});

struct RunResult {
  std::vector<CellResult> cells;  // seed-major, then member
  std::vector<ProbeFailure> failures() const;
  std::vector<RegretTrace> traces() const;
};

// Cells are spread over config.threads workers; the result does not depend
// on the thread count.
RunResult run(const ExperimentConfig& config);

void write_csv_header(std::ostream& out);
void write_trace_csv(std::ostream& out, const RegretTrace& trace);
// Final totals per run (keep_rounds unset) from a trace CSV.
std::vector<RegretTrace> read_trace_csv(std::istream& in);

// Linear interpolation between order statistics (q in [0, 1]).
double percentile(std::vector<double> values, double q);

struct SummaryRow {
  std::string group;
  std::size_t runs = 0;
  double mean = 0.0;
  double std_error = 0.0;
  double median = 0.0;
  double p10 = 0.0;
  double p90 = 0.0;
  double worst_fstar = 0.0;  // max over f* of the mean final regret
  double lambda_mean = 0.0;
  double lambda_inf_mean = 0.0;
  double lambda_circ_mean = 0.0;
};

SummaryRow summarize(std::span<const RegretTrace> traces,
                     const std::string& group = "all");
void write_summary_csv(std::ostream& out, std::span<const SummaryRow> rows);

}  // namespace varbandit
