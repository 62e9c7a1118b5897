// Command line front end: run experiments, compute eluder dimensions,
// summarize trace files.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "varbandit/eluder.h"
#include "varbandit/errors.h"
#include "varbandit/harness.h"
#include "varbandit/io.h"

namespace {

using namespace varbandit;
namespace fs = std::filesystem;

constexpr int kConfigError = 2;
constexpr int kProbeFailure = 3;

int do_run(const std::string& config_path, const std::string& out_dir,
           const std::string& seeds, std::size_t threads) {
  ExperimentConfig config = ExperimentConfig::from_json(read_json_file(config_path));
  if (!seeds.empty()) config.seeds = parse_seed_range(seeds);
  if (threads > 0) config.threads = threads;
  config.keep_rounds = true;
  const RunResult result = run(config);

  fs::create_directories(out_dir);
  {
    std::ofstream out(fs::path(out_dir) / "traces.csv", std::ios::binary);
    write_csv_header(out);
    for (const auto& cell : result.cells) write_trace_csv(out, cell.trace);
  }
  const std::vector<RegretTrace> traces = result.traces();
  const SummaryRow row = summarize(traces);
  {
    std::ofstream out(fs::path(out_dir) / "summary.csv", std::ios::binary);
    write_summary_csv(out, std::span(&row, 1));
  }
  write_summary_csv(std::cout, std::span(&row, 1));

  const auto failures = result.failures();
  if (!failures.empty()) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& f : failures) {
      j.push_back({{"run_id", f.run_id}, {"seed", f.seed}, {"fstar_id", f.fstar_id},
                   {"t", f.t}, {"what", f.what}});
    }
    std::ofstream(fs::path(out_dir) / "failures.json") << j.dump(2) << '\n';
    std::cerr << failures.size() << " invariant probe failure(s); see failures.json\n";
    return kProbeFailure;
  }
  return 0;
}

int do_eluder(const std::string& class_path, double alpha, bool exact) {
  const nlohmann::json j = read_json_file(class_path);
  const EluderMode mode = exact ? EluderMode::kExact : EluderMode::kGreedy;
  EluderResult res;
  if (j.contains("stds")) {
    res = hellinger_eluder_dimension(model_class_from_json(j), alpha, mode);
  } else {
    res = eluder_dimension(function_class_from_json(j), alpha, mode);
  }
  nlohmann::json out = {{"dimension", res.dimension},
                        {"mode", exact ? "exact" : "greedy"},
                        {"witness", to_json(res.witness)}};
  std::cout << out.dump(2) << '\n';
  return 0;
}

int do_summarize(const std::string& in_dir) {
  std::ifstream in(fs::path(in_dir) / "traces.csv");
  if (!in) throw ConfigError("no traces.csv in '" + in_dir + "'");
  const std::vector<RegretTrace> traces = read_trace_csv(in);
  std::vector<SummaryRow> rows{summarize(traces)};
  std::map<std::size_t, std::vector<RegretTrace>> by_star;
  for (const auto& t : traces) by_star[t.fstar_id].push_back(t);
  if (by_star.size() > 1) {
    for (const auto& [star, group] : by_star) {
      rows.push_back(summarize(group, "fstar=" + std::to_string(star)));
    }
  }
  write_summary_csv(std::cout, rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variance-aware contextual bandit experiments"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", seeds;
  std::size_t threads = 0;
  auto* run_cmd = app.add_subcommand("run", "Run an experiment config");
  run_cmd->add_option("--config", config_path, "Experiment JSON")->required();
  run_cmd->add_option("--out", out_dir, "Output directory");
  run_cmd->add_option("--seeds", seeds, "Seed range a..b (overrides the config)");
  run_cmd->add_option("--threads", threads, "Worker threads (overrides the config)");

  std::string class_path;
  double alpha = 0.0;
  bool exact = false;
  auto* eluder_cmd = app.add_subcommand("eluder", "Eluder dimension of a class file");
  eluder_cmd->add_option("--class", class_path, "Class JSON")->required();
  eluder_cmd->add_option("--alpha", alpha, "Threshold")->required();
  eluder_cmd->add_flag("--exact", exact, "Exhaustive search instead of greedy");

  std::string in_dir;
  auto* sum_cmd = app.add_subcommand("summarize", "Summarize a run directory");
  sum_cmd->add_option("--in", in_dir, "Run output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    if (*run_cmd) return do_run(config_path, out_dir, seeds, threads);
    if (*eluder_cmd) return do_eluder(class_path, alpha, exact);
    if (*sum_cmd) return do_summarize(in_dir);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "argument error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
