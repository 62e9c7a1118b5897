#include "varbandit/harness.h"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include "varbandit/distvarcb.h"
#include "varbandit/errors.h"
#include "varbandit/varcb.h"
#include "varbandit/varucb.h"
#include "varbandit/zeroone.h"

namespace varbandit {
namespace {

using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<std::uint64_t> seeds_from_json(const json& j) {
  if (j.is_string()) return parse_seed_range(j.get<std::string>());
  if (j.is_number_integer() && j.get<std::int64_t>() >= 0) return {j.get<std::uint64_t>()};
  if (j.is_array()) {
    std::vector<std::uint64_t> out;
    for (const auto& s : j) out.push_back(s.get<std::uint64_t>());
    return out;
  }
  if (j.is_object()) {
    return parse_seed_range(std::to_string(j.at("from").get<std::uint64_t>()) + ".." +
                            std::to_string(j.at("to").get<std::uint64_t>()));
  }
  throw ConfigError("'seeds' must be a list, a range string or {from, to}");
}

std::string branch_label(const RoundRecord& r) {
  if (r.branch == Branch::kLayer) return "LAYER(" + std::to_string(r.layer) + ")";
  return to_string(r.branch);
}

}  // namespace

std::vector<std::uint64_t> parse_seed_range(const std::string& text) {
  auto parse = [&text](std::string_view part) {
    std::uint64_t v = 0;
    const auto res = std::from_chars(part.data(), part.data() + part.size(), v);
    if (res.ec != std::errc() || res.ptr != part.data() + part.size()) {
      throw ConfigError("invalid seed range '" + text + "'");
    }
    return v;
  };
  const std::string_view view(text);
  const auto dots = view.find("..");
  if (dots == std::string_view::npos) return {parse(view)};
  const std::uint64_t lo = parse(view.substr(0, dots));
  const std::uint64_t hi = parse(view.substr(dots + 2));
  if (hi < lo) throw ConfigError("empty seed range '" + text + "'");
  std::vector<std::uint64_t> out;
  for (std::uint64_t s = lo; s <= hi; ++s) out.push_back(s);
  return out;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  try {
    ExperimentConfig c;
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    if (!j.contains("environment")) throw ConfigError("config needs 'environment'");
    if (!j.contains("policy")) throw ConfigError("config needs 'policy'");
    if (!j.contains("horizon")) throw ConfigError("config needs 'horizon'");
    c.environment = j["environment"];
    c.policy = j["policy"];
    if (c.policy.is_string()) c.policy = json{{"name", c.policy}};
    if (!j["horizon"].is_number_integer() || j["horizon"].get<std::int64_t>() <= 0) {
      throw ConfigError("'horizon' must be a positive integer");
    }
    c.horizon = j["horizon"].get<std::size_t>();
    c.seeds = j.contains("seeds") ? seeds_from_json(j["seeds"])
                                  : std::vector<std::uint64_t>{0};
    if (c.seeds.empty()) throw ConfigError("'seeds' is empty");
    c.delta = j.value("delta", 0.05);
    if (!(c.delta > 0.0 && c.delta < 1.0)) throw ConfigError("'delta' must lie in (0, 1)");
    c.threads = j.value("threads", std::size_t{1});
    if (c.threads == 0) throw ConfigError("'threads' must be positive");
    c.probes = j.value("probes", false);
    c.keep_rounds = j.value("keep_rounds", true);
    if (j.contains("fstar") && !(j["fstar"].is_string() && j["fstar"] == "all")) {
      c.fstar = j["fstar"].get<std::vector<std::size_t>>();
    }
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
}

std::unique_ptr<Policy> make_policy(const json& spec, const Environment& env,
                                    std::size_t horizon, double delta) {
  if (!spec.contains("name")) throw ConfigError("policy stanza needs a 'name'");
  const std::string name = spec["name"].get<std::string>();
  delta = spec.value("delta", delta);
  const FiniteFunctionClass& cls = env.mean_class();
  std::unique_ptr<Policy> policy;
  try {
    if (name == "varcb") {
      if (!spec.contains("sigma")) throw ConfigError("varcb needs 'sigma'");
      policy = std::make_unique<VarCB>(
          cls, VarCBParams{spec["sigma"].get<double>(), delta, horizon});
    } else if (name == "hetero") {
      policy = std::make_unique<HeteroVarCB>(cls, delta, horizon);
    } else if (name == "varucb") {
      VarUCBParams p;
      p.delta = delta;
      p.horizon = horizon;
      p.log_scale = spec.value("log_scale", 4.0);
      if (spec.contains("L")) p.log_term = spec["L"].get<double>();
      policy = std::make_unique<VarUCB>(cls, p);
    } else if (name == "distvarcb") {
      const GaussianModelClass* models = env.model_class();
      if (models == nullptr) throw ConfigError("distvarcb needs a Gaussian environment");
      DistVarCBParams p;
      p.delta = delta;
      p.horizon = horizon;
      if (spec.contains("radius")) p.radius = spec["radius"].get<double>();
      policy = std::make_unique<DistVarCB>(*models, p);
    } else if (name == "zeroone") {
      policy = std::make_unique<ZeroOnePolicy>(cls);
    } else if (name == "squarecb") {
      policy = std::make_unique<SquareCB>(cls, horizon);
    } else if (name == "uniform") {
      policy = std::make_unique<UniformPolicy>(cls.n_actions());
    } else if (name == "oracle") {
      policy = std::make_unique<OraclePolicy>(cls);
    } else {
      throw ConfigError("unknown policy '" + name + "'");
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError("policy '" + name + "': " + e.what());
  } catch (const json::exception& e) {
    throw ConfigError("policy '" + name + "': " + e.what());
  }
  if (!policy->supports(env.variance_model())) {
    throw ConfigError("policy '" + name + "' cannot run against a " +
                      to_string(env.variance_model()) + " adversary");
  }
  return policy;
}

CellResult run_cell(const ExperimentConfig& config,
                    const EnvironmentFamily& family, std::size_t member,
                    std::uint64_t seed, std::size_t run_id,
                    const RoundProbe& probe) {
  std::unique_ptr<Environment> env = family.make(member, seed);
  std::unique_ptr<Policy> policy =
      make_policy(config.policy, *env, config.horizon, config.delta);
  const FiniteFunctionClass& means = env->mean_class();
  const FunctionId star = env->star();
  const VarianceModel info = env->variance_model();

  CellResult result;
  result.trace.run_id = run_id;
  result.trace.seed = seed;
  result.trace.fstar_id = star;
  result.trace.keep_rounds = config.keep_rounds;
  if (config.keep_rounds) result.trace.records.reserve(config.horizon);
  bool lost_star = false;

  auto fail = [&](std::size_t t, std::string what) {
    result.failures.push_back({run_id, seed, star, t, std::move(what)});
  };

  for (std::size_t t = 1; t <= config.horizon; ++t) {
    Rng context_rng = Rng::for_stream(seed, member, t, StreamPurpose::kContext);
    Rng variance_rng = Rng::for_stream(seed, member, t, StreamPurpose::kVariance);
    Rng policy_rng = Rng::for_stream(seed, member, t, StreamPurpose::kPolicy);
    Rng reward_rng = Rng::for_stream(seed, member, t, StreamPurpose::kReward);

    const RoundStart start = env->begin_round(context_rng, variance_rng);
    const ContextId x = start.x;
    std::optional<double> revealed;
    if (info == VarianceModel::kWeakRevealedStart) revealed = start.sigma;

    RoundRecord rec;
    rec.t = t;
    rec.x = x;
    try {
      const Decision d = policy->choose(x, revealed, policy_rng);
      rec.a = d.action;
      rec.branch = d.branch;
      rec.layer = d.layer;
      double var_max = 0.0;
      for (ActionId a = 0; a < env->n_actions(); ++a) {
        var_max = std::max(var_max, env->variance_at(x, a));
      }
      const double var_played = env->variance_at(x, rec.a);
      rec.sigma = env->settle(x, rec.a);
      rec.r = env->draw_reward(x, rec.a, rec.sigma, reward_rng);
      std::optional<double> end;
      if (info == VarianceModel::kWeakRevealedEnd) end = rec.sigma;
      rec.w = policy->observe(x, rec.a, rec.r, end);

      const auto row = means.row(star, x);
      const double regret = *std::max_element(row.begin(), row.end()) - row[rec.a];
      result.trace.push(rec, regret, rec.sigma * rec.sigma, var_max, var_played);
    } catch (const std::invalid_argument&) {
      throw;
    } catch (const std::logic_error& e) {
      // InvariantError and ContractError: structural failures of the run.
      fail(t, e.what());
      result.star_survived = false;
      return result;
    } catch (const StateError& e) {
      fail(t, e.what());
      result.star_survived = false;
      return result;
    }

    if (probe) probe(*policy, *env, rec);
    if (const Mask* vs = policy->version_space(); vs != nullptr && !(*vs)[star]) {
      if (!lost_star && config.probes) fail(t, "f* left the version space");
      lost_star = true;
    }
  }
  result.star_survived = !lost_star;
  return result;
}

std::vector<ProbeFailure> RunResult::failures() const {
  std::vector<ProbeFailure> out;
  for (const auto& c : cells) out.insert(out.end(), c.failures.begin(), c.failures.end());
  return out;
}

std::vector<RegretTrace> RunResult::traces() const {
  std::vector<RegretTrace> out;
  out.reserve(cells.size());
  for (const auto& c : cells) out.push_back(c.trace);
  return out;
}

RunResult run(const ExperimentConfig& config) {
  const EnvironmentFamily family = make_family(config.environment, config.horizon);
  std::vector<std::size_t> members = config.fstar;
  if (members.empty()) {
    for (std::size_t m = 0; m < family.members; ++m) members.push_back(m);
  }
  for (std::size_t m : members) {
    if (m >= family.members) {
      throw ConfigError("f* index " + std::to_string(m) + " outside the family");
    }
  }
  // Fail fast on an incompatible pairing before spawning workers.
  make_policy(config.policy, *family.make(members.front(), config.seeds.front()),
              config.horizon, config.delta);

  struct Cell {
    std::uint64_t seed;
    std::size_t member;
  };
  std::vector<Cell> cells;
  for (std::uint64_t s : config.seeds) {
    for (std::size_t m : members) cells.push_back({s, m});
  }

  RunResult result;
  result.cells.resize(cells.size());
  std::vector<std::exception_ptr> errors(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      try {
        result.cells[i] = run_cell(config, family, cells[i].member, cells[i].seed, i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::min(config.threads, cells.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < n_threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return result;
}

void write_csv_header(std::ostream& out) {
  out << "run_id,seed,fstar_id,t,x,a,r,sigma,branch,inst_regret,cum_regret,"
         "lambda_cum,lambda_inf_cum,lambda_circ_cum\n";
}

void write_trace_csv(std::ostream& out, const RegretTrace& trace) {
  for (std::size_t i = 0; i < trace.records.size(); ++i) {
    const RoundRecord& r = trace.records[i];
    out << trace.run_id << ',' << trace.seed << ',' << trace.fstar_id << ',' << r.t
        << ',' << r.x << ',' << r.a << ',' << format_double(r.r) << ','
        << format_double(r.sigma) << ',' << branch_label(r) << ','
        << format_double(trace.inst_regret[i]) << ','
        << format_double(trace.cum_regret[i]) << ','
        << format_double(trace.cum_variance[i]) << ','
        << format_double(trace.cum_var_max[i]) << ','
        << format_double(trace.cum_var_played[i]) << '\n';
  }
}

std::vector<RegretTrace> read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ArgumentError("empty trace file");
  std::map<std::size_t, RegretTrace> runs;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cols.push_back(cell);
    if (cols.size() != 14) {
      throw ArgumentError("line " + std::to_string(line_no) + " has " +
                          std::to_string(cols.size()) + " columns");
    }
    const std::size_t run_id = std::stoull(cols[0]);
    RegretTrace& tr = runs[run_id];
    const std::size_t t = std::stoull(cols[3]);
    if (t < tr.n_rounds) continue;
    tr.run_id = run_id;
    tr.seed = std::stoull(cols[1]);
    tr.fstar_id = std::stoull(cols[2]);
    tr.keep_rounds = false;
    tr.n_rounds = t;
    tr.total_regret = std::stod(cols[10]);
    tr.lambda = std::stod(cols[11]);
    tr.lambda_inf = std::stod(cols[12]);
    tr.lambda_circ = std::stod(cols[13]);
  }
  std::vector<RegretTrace> out;
  for (auto& [id, tr] : runs) out.push_back(std::move(tr));
  return out;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw ArgumentError("percentile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw ArgumentError("quantile must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

SummaryRow summarize(std::span<const RegretTrace> traces, const std::string& group) {
  if (traces.empty()) throw ArgumentError("nothing to summarize");
  SummaryRow row;
  row.group = group;
  row.runs = traces.size();
  std::vector<double> finals;
  std::map<std::size_t, std::pair<double, std::size_t>> by_star;
  for (const auto& tr : traces) {
    finals.push_back(tr.final_regret());
    row.lambda_mean += tr.lambda;
    row.lambda_inf_mean += tr.lambda_inf;
    row.lambda_circ_mean += tr.lambda_circ;
    auto& acc = by_star[tr.fstar_id];
    acc.first += tr.final_regret();
    ++acc.second;
  }
  const double n = static_cast<double>(traces.size());
  for (double v : finals) row.mean += v;
  row.mean /= n;
  if (traces.size() > 1) {
    double ss = 0.0;
    for (double v : finals) ss += (v - row.mean) * (v - row.mean);
    row.std_error = std::sqrt(ss / (n - 1.0) / n);
  }
  row.median = percentile(finals, 0.5);
  row.p10 = percentile(finals, 0.1);
  row.p90 = percentile(finals, 0.9);
  row.worst_fstar = -std::numeric_limits<double>::infinity();
  for (const auto& [star, acc] : by_star) {
    row.worst_fstar = std::max(row.worst_fstar, acc.first / static_cast<double>(acc.second));
  }
  row.lambda_mean /= n;
  row.lambda_inf_mean /= n;
  row.lambda_circ_mean /= n;
  return row;
}

void write_summary_csv(std::ostream& out, std::span<const SummaryRow> rows) {
  out << "group,runs,mean,std_error,median,p10,p90,worst_fstar,lambda_mean,"
         "lambda_inf_mean,lambda_circ_mean\n";
  for (const auto& r : rows) {
    out << r.group << ',' << r.runs << ',' << format_double(r.mean) << ','
        << format_double(r.std_error) << ',' << format_double(r.median) << ','
        << format_double(r.p10) << ',' << format_double(r.p90) << ','
        << format_double(r.worst_fstar) << ',' << format_double(r.lambda_mean) << ','
        << format_double(r.lambda_inf_mean) << ',' << format_double(r.lambda_circ_mean)
        << '\n';
  }
}

}  // namespace varbandit
