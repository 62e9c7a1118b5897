#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "varbandit/errors.h"
#include "varbandit/harness.h"
#include "varbandit/io.h"

using namespace varbandit;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

ExperimentConfig config_of(const json& j) { return ExperimentConfig::from_json(j); }

std::string csv_of(const RunResult& r) {
  std::ostringstream out;
  write_csv_header(out);
  for (const auto& c : r.cells) write_trace_csv(out, c.trace);
  return out.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("varbandit_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int cli(const std::string& args) {
  const std::string cmd = std::string(CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config parsing") {
  const json base = {{"environment", {{"kind", "eluder"}, {"N", 1}, {"A", 2}}},
                     {"policy", "uniform"}, {"horizon", 1}};
  CHECK(config_of(base).seeds == std::vector<std::uint64_t>{0});
  json zero = base;
  zero["horizon"] = 0;
  CHECK_THROWS_AS(config_of(zero), ConfigError);
  json ranged = base;
  ranged["seeds"] = "3..5";
  CHECK(config_of(ranged).seeds == std::vector<std::uint64_t>{3, 4, 5});
  ranged["seeds"] = {{"from", 1}, {"to", 2}};
  CHECK(config_of(ranged).seeds == std::vector<std::uint64_t>{1, 2});
  CHECK_THROWS_AS(parse_seed_range("5..3"), ConfigError);
  CHECK_THROWS_AS(parse_seed_range("x"), ConfigError);
  CHECK_THROWS_AS(config_of(json{{"policy", "uniform"}, {"horizon", 3}}), ConfigError);

  const auto one = run(config_of(base));
  REQUIRE(one.cells.size() == 2);
  CHECK(one.cells[0].trace.records.size() == 1);
  CHECK(one.cells[0].trace.records[0].t == 1);
}

TEST_CASE("policy and adversary compatibility") {
  auto attempt = [](const json& env, const json& pol) {
    json j = {{"environment", env}, {"policy", pol}, {"horizon", 10}};
    return run(config_of(j));
  };
  const json start = {{"kind", "random"}};
  const json end = {{"kind", "random"}, {"variance_model", "WEAK_REVEALED_END"}};
  const json strong = {{"kind", "strong_adversary"}, {"N", 1}, {"A", 2}, {"epsilon", 0.5}};
  const json hidden = {{"kind", "random"}, {"variance_model", "HIDDEN"}};
  const json gauss = {{"kind", "random_gaussian"}, {"models", 3}};
  CHECK_NOTHROW(attempt(start, {{"name", "varcb"}, {"sigma", 0.5}}));
  CHECK_NOTHROW(attempt(start, "hetero"));
  CHECK_THROWS_AS(attempt(strong, {{"name", "varcb"}, {"sigma", 0.5}}), ConfigError);
  CHECK_THROWS_AS(attempt(hidden, "hetero"), ConfigError);
  CHECK_THROWS_AS(attempt(end, {{"name", "varcb"}, {"sigma", 0.5}}), ConfigError);
  CHECK_NOTHROW(attempt(end, "zeroone"));
  CHECK_THROWS_AS(attempt(start, "zeroone"), ConfigError);
  CHECK_THROWS_AS(attempt(strong, "zeroone"), ConfigError);
  for (const json& env : {start, end, strong, hidden}) {
    CHECK_NOTHROW(attempt(env, "varucb"));
    CHECK_NOTHROW(attempt(env, "squarecb"));
  }
  CHECK_NOTHROW(attempt(gauss, "distvarcb"));
  CHECK_THROWS_AS(attempt(start, "distvarcb"), ConfigError);
  CHECK_THROWS_AS(attempt(start, "bogus"), ConfigError);
  CHECK_THROWS_AS(attempt(start, json{{"name", "varcb"}}), ConfigError);
}

TEST_CASE("reference policies") {
  const json oracle = {{"environment", {{"kind", "eluder"}, {"N", 3}, {"A", 3}}},
                       {"policy", "oracle"}, {"horizon", 300}, {"seeds", "0..2"}};
  for (const auto& tr : run(config_of(oracle)).traces()) CHECK(tr.final_regret() == 0.0);

  // Uniform play on one context, two actions: expected regret T/4.
  const json uni = {{"environment", {{"kind", "eluder"}, {"N", 1}, {"A", 2}}},
                    {"policy", "uniform"}, {"horizon", 2000}, {"seeds", "0..499"},
                    {"fstar", {0}}, {"keep_rounds", false}};
  const auto traces = run(config_of(uni)).traces();
  const auto row = summarize(traces);
  CHECK(row.runs == 500);
  CHECK(std::abs(row.mean - 500.0) <= 25.0);
}

TEST_CASE("variance accounting") {
  const json cfg = {{"environment", {{"kind", "random"}, {"schedule", {{"type", "uniform"}}}}},
                    {"policy", "hetero"}, {"horizon", 400}, {"seeds", "0..3"}};
  for (const auto& tr : run(config_of(cfg)).traces()) {
    double lam = 0.0, prev_inf = 0.0;
    for (std::size_t i = 0; i < tr.records.size(); ++i) {
      lam += tr.records[i].sigma * tr.records[i].sigma;
      REQUIRE(tr.cum_variance[i] == lam);
      REQUIRE(tr.cum_var_max[i] >= prev_inf);
      REQUIRE(tr.cum_var_played[i] <= tr.cum_var_max[i]);
      REQUIRE(tr.inst_regret[i] >= 0.0);
      if (i) REQUIRE(tr.cum_regret[i] >= tr.cum_regret[i - 1]);
      prev_inf = tr.cum_var_max[i];
    }
    CHECK(tr.lambda == lam);
  }

  const json strong = {{"environment", {{"kind", "strong_adversary"}, {"N", 2}, {"A", 3}}},
                       {"policy", "uniform"}, {"horizon", 3000}, {"seeds", "0..1"}};
  const double eps = strong_adversary_epsilon(2, 3, 3000);
  for (const auto& tr : run(config_of(strong)).traces()) {
    CHECK(tr.lambda <= 2 * 2 / (eps * eps));
    CHECK(tr.lambda == std::floor(tr.lambda));
  }
}

TEST_CASE("summaries") {
  RegretTrace a, b;
  a.keep_rounds = b.keep_rounds = false;
  a.push({1}, 10.0, 0.5, 1.0, 0.5);
  b.push({1}, 30.0, 0.0, 1.0, 0.0);
  b.fstar_id = 1;
  const std::vector<RegretTrace> one{a};
  const auto r1 = summarize(one);
  CHECK(r1.mean == 10.0);
  CHECK(r1.median == 10.0);
  CHECK(r1.p10 == 10.0);
  CHECK(r1.p90 == 10.0);
  CHECK(r1.worst_fstar == 10.0);
  CHECK(r1.lambda_mean == 0.5);
  const std::vector<RegretTrace> two{a, b};
  const auto r2 = summarize(two);
  CHECK(r2.mean == 20.0);
  CHECK(r2.worst_fstar == 30.0);
  CHECK(r2.std_error == doctest::Approx(10.0));
  CHECK_THROWS_AS(summarize(std::vector<RegretTrace>{}), ArgumentError);

  Rng rng(4);
  std::vector<RegretTrace> many(100);
  std::vector<double> vals;
  for (auto& t : many) {
    t.keep_rounds = false;
    t.push({1}, rng.uniform(0, 100), 0, 0, 0);
    vals.push_back(t.final_regret());
  }
  std::sort(vals.begin(), vals.end());
  const auto r = summarize(many);
  CHECK(r.median == doctest::Approx((vals[49] + vals[50]) / 2));
  CHECK(r.p10 == doctest::Approx(vals[9] + 0.9 * (vals[10] - vals[9])));
  CHECK(r.p90 == doctest::Approx(vals[89] + 0.1 * (vals[90] - vals[89])));
}

TEST_CASE("determinism across thread counts") {
  json cfg = {{"environment", {{"kind", "eluder"}, {"N", 2}, {"A", 3}}},
              {"policy", {{"name", "varcb"}, {"sigma", 0.0}}},
              {"horizon", 300}, {"seeds", "0..3"}};
  cfg["threads"] = 1;
  const auto serial = csv_of(run(config_of(cfg)));
  cfg["threads"] = 8;
  const auto parallel = csv_of(run(config_of(cfg)));
  CHECK(serial == parallel);
  CHECK(csv_of(run(config_of(cfg))) == parallel);

  std::istringstream in(serial);
  const auto back = read_trace_csv(in);
  const auto direct = run(config_of(cfg)).traces();
  REQUIRE(back.size() == direct.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].final_regret() == direct[i].final_regret());
    CHECK(back[i].lambda_inf == direct[i].lambda_inf);
    CHECK(back[i].rounds() == 300);
  }
}

TEST_CASE("invariant probes record failures") {
  // The revealed variance exceeds the instance's scale: a contract breach.
  const json cfg = {{"environment", {{"kind", "random"},
                                     {"schedule", {{"type", "constant"}, {"sigma", 0.3}}}}},
                    {"policy", {{"name", "varcb"}, {"sigma", 0.1}}},
                    {"horizon", 50}, {"probes", true}};
  const auto res = run(config_of(cfg));
  REQUIRE(res.failures().size() == 1);
  CHECK(res.failures()[0].t == 1);
  CHECK_FALSE(res.cells[0].star_survived);

  std::size_t calls = 0;
  const json ok = {{"environment", {{"kind", "eluder"}, {"N", 1}, {"A", 2}}},
                   {"policy", "zeroone"}, {"horizon", 20}};
  json ok_end = ok;
  ok_end["environment"]["variance_model"] = "WEAK_REVEALED_END";
  const auto c = config_of(ok_end);
  const auto fam = make_family(c.environment, c.horizon);
  const auto cell = run_cell(c, fam, 1, 0, 0, [&](const Policy&, const Environment&,
                                                  const RoundRecord& r) {
    ++calls;
    CHECK(r.sigma == 0.0);
  });
  CHECK(calls == 20);
  CHECK(cell.star_survived);
}

TEST_CASE("command line") {
  const fs::path dir = scratch("cli");
  const json good = {{"environment", {{"kind", "eluder"}, {"N", 1}, {"A", 2}}},
                     {"policy", "uniform"}, {"horizon", 20}, {"seeds", "0..1"}};
  std::ofstream(dir / "good.json") << good.dump();
  std::ofstream(dir / "bad.json") << "{ not json";
  json incompatible = good;
  incompatible["policy"] = "zeroone";
  std::ofstream(dir / "incompatible.json") << incompatible.dump();
  const json breach = {{"environment", {{"kind", "random"},
                                        {"schedule", {{"type", "constant"}, {"sigma", 0.3}}}}},
                       {"policy", {{"name", "varcb"}, {"sigma", 0.1}}}, {"horizon", 5}};
  std::ofstream(dir / "breach.json") << breach.dump();
  std::ofstream(dir / "class.json") << to_json(FiniteFunctionClass(1, 2, {0.0, 0.5, 1.0, 0.5})).dump();

  const std::string out = (dir / "out").string();
  CHECK(cli("run --config " + (dir / "good.json").string() + " --out " + out) == 0);
  CHECK(fs::exists(fs::path(out) / "traces.csv"));
  CHECK(fs::exists(fs::path(out) / "summary.csv"));
  CHECK(cli("summarize --in " + out) == 0);
  CHECK(cli("run --config " + (dir / "bad.json").string()) == 2);
  CHECK(cli("run --config " + (dir / "missing.json").string()) == 2);
  CHECK(cli("run --config " + (dir / "incompatible.json").string()) == 2);
  CHECK(cli("run --config " + (dir / "good.json").string() + " --seeds 4..1") == 2);
  const std::string bout = (dir / "breach_out").string();
  CHECK(cli("run --config " + (dir / "breach.json").string() + " --out " + bout) == 3);
  CHECK(fs::exists(fs::path(bout) / "failures.json"));
  CHECK(cli("eluder --class " + (dir / "class.json").string() + " --alpha 0 --exact") == 0);
  CHECK(cli("frobnicate") == 2);
  fs::remove_all(dir);
}
