// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "varbandit/distvarcb.h"
#include "varbandit/eluder.h"
#include "varbandit/environments.h"
#include "varbandit/harness.h"
#include "varbandit/io.h"
#include "varbandit/regression.h"
#include "varbandit/varcb.h"

using namespace varbandit;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* pattern, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* pattern, ...) {
  char buf[1024];
  va_list args;
  va_start(args, pattern);
  std::vsnprintf(buf, sizeof buf, pattern, args);
  va_end(args);
  return buf;
}

struct Outcome {
  bool pass = true;
  std::string detail;
};

ExperimentConfig load(const std::string& name) {
  ExperimentConfig c = ExperimentConfig::from_json(
      read_json_file(std::string(CONFIG_DIR) + "/" + name + ".json"));
  c.threads = std::max(1u, std::thread::hardware_concurrency());
  return c;
}

SummaryRow summary_of(const std::string& name) {
  const RunResult r = run(load(name));
  const auto traces = r.traces();
  return summarize(traces, name);
}

// Runs every cell of a config serially with a probe.
void probe_all(const ExperimentConfig& config, const std::function<void()>& on_cell,
               const RoundProbe& probe) {
  const EnvironmentFamily family = make_family(config.environment, config.horizon);
  std::size_t run_id = 0;
  for (const auto seed : config.seeds) {
    for (std::size_t m = 0; m < family.members; ++m) {
      on_cell();
      const CellResult cell = run_cell(config, family, m, seed, run_id++, probe);
      if (!cell.failures.empty()) {
        throw std::runtime_error("run aborted: " + cell.failures.front().what);
      }
    }
  }
}

Outcome eluder_dimensions() {
  Outcome o;
  const auto start = Clock::now();
  std::size_t checked = 0;
  for (std::size_t n = 1; n <= 3; ++n) {
    for (std::size_t a = 2; a <= 4; ++a) {
      const auto r = eluder_dimension(eluder_class(n, a), 0.0, EluderMode::kExact);
      ++checked;
      if (r.dimension != n * (a - 1)) {
        o.pass = false;
        o.detail += fmt(" eluder(%zu,%zu)=%zu", n, a, r.dimension);
      }
    }
  }
  for (std::size_t a = 2; a <= 6; ++a) {
    const auto r = eluder_dimension(mab_class(a, 0.2, 0.05), 0.0, EluderMode::kExact);
    ++checked;
    if (r.dimension != a) {
      o.pass = false;
      o.detail += fmt(" mab(%zu)=%zu", a, r.dimension);
    }
  }
  const double elapsed = seconds_since(start);
  if (elapsed >= 60.0) o.pass = false;
  o.detail = fmt("%zu classes, %.2f s (limit 60 s)", checked, elapsed) + o.detail;
  return o;
}

Outcome distribution_lemmas() {
  Outcome o;
  double worst_kl_slack = -1e300;
  for (int i = 1; i <= 20; ++i) {
    const double sigma = 0.5 * i / 20.0;
    for (int j = 0; j < 20; ++j) {
      const double eps = j == 19 ? 0.5 * sigma : 0.5 * sigma * j / 19.0;
      const double kl = kl_two_point(two_point(sigma, TwoPointKind::kMinus, eps),
                                     two_point(sigma, TwoPointKind::kPlus, eps));
      worst_kl_slack = std::max(worst_kl_slack, kl - 4.0 * eps * eps / (sigma * sigma));
    }
  }
  if (worst_kl_slack > 1e-12) o.pass = false;

  Rng rng(2024);
  double min_far = 1.0;
  for (int i = 0; i < 10000; ++i) {
    const double s1 = std::exp(rng.uniform(-5.0, 0.0));
    const double gap = rng.uniform(3.0 + 1e-9, 6.0);
    const double s2 = s1 * std::exp(rng.bernoulli(0.5) ? gap : -gap);
    const double h = hellinger_sq_gaussian(rng.uniform(-1, 1), s1, rng.uniform(-1, 1), s2);
    min_far = std::min(min_far, h);
  }
  if (min_far < 0.5) o.pass = false;

  double worst_quad = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double m1 = rng.uniform(-1, 2), s1 = rng.uniform(0.005, 1.0);
    const double m2 = rng.uniform(-1, 2), s2 = rng.uniform(0.005, 1.0);
    const double w = rng.uniform(0.1, 0.9);
    const std::vector<GaussianComponent> split{{w, m2, s2}, {1.0 - w, m2, s2}};
    const double quad = hellinger_sq_to_mixture({1.0, m1, s1}, split);
    worst_quad = std::max(worst_quad, std::abs(quad - hellinger_sq_gaussian(m1, s1, m2, s2)));
  }
  if (worst_quad > 1e-6) o.pass = false;
  o.detail = fmt("max KL - bound %.3e (<= 1e-12); min far Hellinger %.4f (>= 0.5); "
                 "max quadrature error %.3e (<= 1e-6)",
                 worst_kl_slack, min_far, worst_quad);
  return o;
}

Outcome prod_oracle() {
  Outcome o;
  const double eta = 0.05;
  std::size_t violations = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    Rng rng(seed);
    const std::size_t star = rng.below(8);
    std::vector<std::vector<double>> losses(200, std::vector<double>(8));
    std::vector<Mask> masks(200, Mask(8, true));
    Mask current(8, true);
    for (std::size_t t = 0; t < 200; ++t) {
      for (auto& v : losses[t]) v = rng.uniform(-0.5 / eta, 0.5 / eta);
      if (rng.bernoulli(0.02)) {
        const auto f = rng.below(8);
        if (f != star) current[f] = false;
      }
      masks[t] = current;
    }
    const auto [lhs, rhs] = prod_regret_audit(losses, eta, masks, star);
    if (!(lhs <= rhs)) ++violations;
  }

  const ExperimentConfig config = load("prod_varcb");
  std::size_t igw_rounds = 0;
  double worst = 0.0;
  probe_all(config, [] {}, [&](const Policy& p, const Environment&, const RoundRecord&) {
    const auto& round = dynamic_cast<const VarCB&>(p).last_round();
    if (!round.prod_updated) return;
    ++igw_rounds;
    worst = std::max(worst, std::abs(round.prod.aggregated_loss));
  });
  if (violations > 0 || worst > 1e-12 || igw_rounds == 0) o.pass = false;
  o.detail = fmt("inequality violations %zu/1000; max |aggregated loss| %.3e over %zu "
                 "exploration rounds in %zu runs (<= 1e-12)",
                 violations, worst, igw_rounds, config.seeds.size());
  return o;
}

Outcome survival() {
  Outcome o;
  const auto start = Clock::now();
  for (const char* name : {"survival_varcb", "survival_varucb", "survival_zeroone",
                           "survival_distvarcb"}) {
    const RunResult r = run(load(name));
    std::size_t kept = 0;
    for (const auto& c : r.cells) kept += (c.star_survived && c.failures.empty()) ? 1 : 0;
    const double rate = static_cast<double>(kept) / r.cells.size();
    if (rate < 0.85) o.pass = false;
    o.detail += fmt("%s %zu/%zu; ", name + 9, kept, r.cells.size());
  }
  const double elapsed = seconds_since(start);
  if (elapsed >= 900.0) o.pass = false;
  o.detail += fmt("%.1f s (need >= 85%% each, < 900 s)", elapsed);
  return o;
}

Outcome variance_scaling() {
  Outcome o;
  const SummaryRow lo = summary_of("scaling_varcb_s005");
  const SummaryRow hi = summary_of("scaling_varcb_s040");
  const SummaryRow sq = summary_of("scaling_squarecb_s005");
  const double ratio = lo.mean / hi.mean;
  o.pass = ratio <= 0.6 && lo.mean < sq.mean;
  o.detail = fmt("VarCB sigma=0.05 %.1f +- %.1f, sigma=0.4 %.1f +- %.1f, ratio %.3f (<= 0.6); "
                 "SquareCB sigma=0.05 %.1f +- %.1f (VarCB must be lower); %zu runs each",
                 lo.mean, lo.std_error, hi.mean, hi.std_error, ratio, sq.mean, sq.std_error,
                 lo.runs);
  return o;
}

Outcome hard_instance() {
  Outcome o;
  const SummaryRow v5 = summary_of("hard_varcb_T5000");
  const SummaryRow v20 = summary_of("hard_varcb_T20000");
  const SummaryRow s5 = summary_of("hard_squarecb_T5000");
  const SummaryRow s20 = summary_of("hard_squarecb_T20000");
  const double vr = v20.worst_fstar / v5.worst_fstar;
  const double sr = s20.worst_fstar / s5.worst_fstar;
  o.pass = vr <= 1.5 && sr >= 1.7;
  o.detail = fmt("worst-case VarCB %.1f -> %.1f (x%.2f, need <= 1.5); "
                 "SquareCB %.1f -> %.1f (x%.2f, need >= 1.7)",
                 v5.worst_fstar, v20.worst_fstar, vr, s5.worst_fstar, s20.worst_fstar, sr);
  return o;
}

Outcome zero_one_regime() {
  Outcome o;
  const SummaryRow z2 = summary_of("zeroone_s0_T2000");
  const SummaryRow z20 = summary_of("zeroone_s0_T20000");
  const SummaryRow n2 = summary_of("zeroone_s1_T2000");
  const SummaryRow n8 = summary_of("zeroone_s1_T8000");
  const double flat = z20.mean / z2.mean;
  const double growth = n8.mean / n2.mean;
  o.pass = flat <= 1.3 && growth >= 1.25 && growth <= 4.5;
  o.detail = fmt("sigma=0: %.2f +- %.2f -> %.2f +- %.2f (x%.2f, need <= 1.3); "
                 "sigma=1: %.2f +- %.2f -> %.2f +- %.2f (x%.2f, need [1.25, 4.5])",
                 z2.mean, z2.std_error, z20.mean, z20.std_error, flat, n2.mean,
                 n2.std_error, n8.mean, n8.std_error, growth);
  return o;
}

Outcome strong_adversary() {
  Outcome o;
  double rate[2] = {0, 0};
  std::size_t over = 0;
  const std::size_t horizons[2] = {2000, 20000};
  for (int i = 0; i < 2; ++i) {
    const std::size_t horizon = horizons[i];
    const RunResult r = run(load("adversary_varucb_T" + std::to_string(horizon)));
    const auto traces = r.traces();
    const double eps = strong_adversary_epsilon(4, 3, horizon);
    const double cap = 4.0 * 2.0 / (eps * eps);
    for (const auto& tr : traces) {
      if (tr.final_lambda() > cap * (1.0 + 1e-12)) ++over;
    }
    rate[i] = summarize(traces, "").worst_fstar / static_cast<double>(horizon);
    o.detail += fmt("T=%zu worst regret/T %.4f, variance budget %.2f vs cap %.2f; ", horizon,
                    rate[i], traces.front().final_lambda(), cap);
  }
  o.pass = over == 0 && rate[1] <= 0.5 * rate[0];
  o.detail += fmt("ratio %.3f (need <= 0.5), runs over cap %zu", rate[1] / rate[0], over);
  return o;
}

Outcome dist_structure() {
  Outcome o;
  const ExperimentConfig config = load("structure_distvarcb");
  std::size_t explore = 0, bad_residual = 0, bad_pair = 0;
  double worst_moment = 0.0;
  Mask before;
  probe_all(
      config, [&] { before.clear(); },
      [&](const Policy& p, const Environment&, const RoundRecord& rec) {
        const auto& pol = dynamic_cast<const DistVarCB&>(p);
        const auto& models = pol.models();
        const auto& mix = pol.mixture();
        if (before.empty()) before.assign(models.n_models(), true);
        const auto& round = pol.last_round();
        if (round.indicator == 2) {
          ++explore;
          if (round.residual > 1e-8) ++bad_residual;
          for (ModelId i = 0; i < models.n_models(); ++i) {
            for (ModelId j = i + 1; j < models.n_models(); ++j) {
              if (!before[i] || !before[j]) continue;
              const double h = hellinger_sq_gaussian(
                  models.mean(i, rec.x, rec.a), models.stddev(i, rec.x, rec.a),
                  models.mean(j, rec.x, rec.a), models.stddev(j, rec.x, rec.a));
              if (!(h < 0.5)) ++bad_pair;
            }
          }
        }
        const auto q = mix.weights();
        for (ActionId a = 0; a < models.n_actions(); ++a) {
          double m1 = 0.0, m2 = 0.0;
          for (ModelId k = 0; k < models.n_models(); ++k) {
            const double mu = models.mean(k, rec.x, a), s = models.stddev(k, rec.x, a);
            m1 += q[k] * mu;
            m2 += q[k] * (s * s + mu * mu);
          }
          worst_moment = std::max(worst_moment, std::abs(mix.mean(rec.x, a) - m1));
          worst_moment = std::max(worst_moment, std::abs(mix.variance(rec.x, a) - (m2 - m1 * m1)));
        }
        before = mix.active();
      });
  o.pass = explore > 0 && bad_residual == 0 && bad_pair == 0 && worst_moment <= 1e-10;
  o.detail = fmt("%zu exploration rounds in %zu runs: residual > 1e-8 on %zu, "
                 "active pairs with squared Hellinger >= 1/2 on %zu; max moment error %.3e "
                 "(<= 1e-10)",
                 explore, config.seeds.size(), bad_residual, bad_pair, worst_moment);
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  Outcome o;
  const fs::path root = fs::temp_directory_path() / "varbandit_acceptance";
  fs::remove_all(root);
  std::size_t configs = 0, mismatched = 0;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(CONFIG_DIR)) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    std::string out[2];
    for (int k = 0; k < 2; ++k) {
      const unsigned threads = k == 0 ? 1 : 8;
      const fs::path dir = root / (file.stem().string() + "_" + std::to_string(threads));
      const std::string cmd = std::string(CLI_PATH) + " run --config " + file.string() +
                              " --out " + dir.string() + " --seeds 0..2 --threads " +
                              std::to_string(threads) + " >/dev/null 2>&1";
      const int status = std::system(cmd.c_str());
      if (status != 0) {
        o.pass = false;
        o.detail += " " + file.stem().string() + " exited nonzero;";
      }
      out[k] = slurp(dir / "traces.csv") + slurp(dir / "summary.csv");
    }
    ++configs;
    if (out[0].empty() || out[0] != out[1]) ++mismatched;
  }
  fs::remove_all(root);
  if (mismatched > 0 || configs == 0) o.pass = false;
  o.detail = fmt("%zu configs (seeds 0..2), %zu differ between 1 and 8 threads", configs,
                 mismatched) + o.detail;
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"eluder dimensions of the hard instances", eluder_dimensions},
      {"distribution lemmas", distribution_lemmas},
      {"Prod oracle", prod_oracle},
      {"realizable survival", survival},
      {"variance scaling separation", variance_scaling},
      {"deterministic hard instance", hard_instance},
      {"zero-one variance regime", zero_one_regime},
      {"strong adversary", strong_adversary},
      {"DistVarCB structure", dist_structure},
      {"determinism across thread counts", determinism},
  };
  int failed = 0;
  int index = 0;
  for (const auto& [title, check] : criteria) {
    ++index;
    Outcome o;
    const auto start = Clock::now();
    try {
      o = check();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("error: ") + e.what();
    }
    if (!o.pass) ++failed;
    std::printf("%s %2d %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", index, title,
                o.detail.c_str(), seconds_since(start));
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
