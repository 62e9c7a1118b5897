#include "varbandit/environments.h"

#include <algorithm>
#include <cmath>

#include "varbandit/errors.h"
#include "varbandit/io.h"

namespace varbandit {
namespace {

using nlohmann::json;

// Contexts above this are refused by the count-augmented embedding.
constexpr std::size_t kMaxAugmentedContexts = std::size_t{1} << 20;

// floor(1 / eps^2), robust to eps^2 landing just above an integer reciprocal.
std::size_t pull_cap_for(double epsilon) {
  return static_cast<std::size_t>(std::floor(1.0 / (epsilon * epsilon) + 1e-9));
}

ActionId safe_action(std::size_t n_actions) { return n_actions - 1; }

}  // namespace

double VarianceSchedule::draw(Rng& rng) const {
  switch (kind) {
    case Kind::kConstant:
      return value;
    case Kind::kZeroOne:
      return rng.bernoulli(value) ? 1.0 : 0.0;
    case Kind::kUniform:
      return rng.uniform();
  }
  return value;
}

json VarianceSchedule::to_json() const {
  switch (kind) {
    case Kind::kConstant:
      return {{"type", "constant"}, {"sigma", value}};
    case Kind::kZeroOne:
      return {{"type", "zero_one"}, {"p", value}};
    case Kind::kUniform:
      return {{"type", "uniform"}};
  }
  return {};
}

VarianceSchedule VarianceSchedule::from_json(const json& j) {
  const std::string type = j.value("type", "constant");
  VarianceSchedule s;
  if (type == "constant") {
    s.kind = Kind::kConstant;
    s.value = j.value("sigma", 0.0);
    if (!(s.value >= 0.0 && s.value <= 1.0)) throw ConfigError("sigma must lie in [0, 1]");
  } else if (type == "zero_one") {
    s.kind = Kind::kZeroOne;
    s.value = j.value("p", 0.5);
    if (!(s.value >= 0.0 && s.value <= 1.0)) throw ConfigError("p must lie in [0, 1]");
  } else if (type == "uniform") {
    s.kind = Kind::kUniform;
  } else {
    throw ConfigError("unknown variance schedule '" + type + "'");
  }
  return s;
}

// ---------------------------------------------------------------------------

TableEnvironment::TableEnvironment(FiniteFunctionClass means,
                                   std::optional<GaussianModelClass> models,
                                   VarianceModel info,
                                   VarianceSchedule schedule,
                                   RewardChannel channel)
    : Environment(std::move(means), std::move(models), info),
      schedule_(schedule),
      channel_(channel) {
  if (channel_ == RewardChannel::kGaussian && !models_) {
    throw ArgumentError("Gaussian channel needs a model class");
  }
}

RoundStart TableEnvironment::begin_round(Rng& context_rng, Rng& variance_rng) {
  const ContextId x = context_rng.below(n_contexts());
  sigma_ = schedule_.draw(variance_rng);
  return {x, sigma_};
}

double TableEnvironment::variance_at(ContextId x, ActionId a) const {
  if (channel_ == RewardChannel::kGaussian) {
    return models_->variance(models_->star_index(), x, a);
  }
  return sigma_ * sigma_;
}

double TableEnvironment::draw_reward(ContextId x, ActionId a, double sigma,
                                     Rng& rng) {
  if (channel_ == RewardChannel::kGaussian) {
    const ModelId m = models_->star_index();
    return rng.normal(models_->mean(m, x, a), models_->stddev(m, x, a));
  }
  const double mu = means_.value(star(), x, a);
  const double lo = std::max(0.0, mu - sigma);
  const double hi = std::min(1.0, mu + sigma);
  if (!(hi > lo)) return mu;
  return rng.bernoulli((mu - lo) / (hi - lo)) ? hi : lo;
}

json TableEnvironment::adversary() const {
  return {{"variance_model", to_string(info_)},
          {"schedule", schedule_.to_json()},
          {"channel", channel_ == RewardChannel::kGaussian ? "gaussian"
                                                           : "bounded_two_point"}};
}

// ---------------------------------------------------------------------------

MabEnvironment::MabEnvironment(FiniteFunctionClass means, double sigma,
                               double epsilon, VarianceModel info)
    : Environment(std::move(means), std::nullopt, info),
      sigma_(sigma),
      epsilon_(epsilon) {
  two_point(sigma_, TwoPointKind::kPlus, epsilon_);  // validates the range
}

TwoPointDistribution MabEnvironment::law(ActionId a) const {
  const double mu = means_.value(star(), 0, a);
  if (mu > sigma_) return two_point(sigma_, TwoPointKind::kPlus, epsilon_);
  if (mu < sigma_) return two_point(sigma_, TwoPointKind::kMinus, epsilon_);
  return two_point(sigma_, TwoPointKind::kCenter);
}

double MabEnvironment::variance_at(ContextId, ActionId a) const {
  return law(a).variance();
}

double MabEnvironment::draw_reward(ContextId, ActionId a, double, Rng& rng) {
  return law(a).sample(rng);
}

json MabEnvironment::adversary() const {
  return {{"variance_model", to_string(info_)},
          {"sigma", sigma_},
          {"epsilon", epsilon_},
          {"channel", "two_point"}};
}

// ---------------------------------------------------------------------------

StrongAdversaryEnvironment::StrongAdversaryEnvironment(FiniteFunctionClass means,
                                                       double epsilon)
    : Environment(std::move(means), std::nullopt, VarianceModel::kStrongPostAction),
      epsilon_(epsilon),
      cap_(pull_cap_for(epsilon)),
      counts_(means_.n_contexts() * means_.n_actions(), 0) {}

RoundStart StrongAdversaryEnvironment::begin_round(Rng& context_rng, Rng&) {
  return {context_rng.below(n_contexts()), std::nullopt};
}

double StrongAdversaryEnvironment::variance_at(ContextId x, ActionId a) const {
  if (a == safe_action(n_actions())) return 0.0;
  return pulls(x, a) + 1 <= cap_ ? 1.0 : 0.0;
}

double StrongAdversaryEnvironment::settle(ContextId x, ActionId a) {
  const double sigma = variance_at(x, a);
  ++counts_[x * n_actions() + a];
  return sigma;
}

double StrongAdversaryEnvironment::draw_reward(ContextId x, ActionId a,
                                               double sigma, Rng& rng) {
  return rng.normal(means_.value(star(), x, a), sigma);
}

json StrongAdversaryEnvironment::adversary() const {
  return {{"variance_model", to_string(info_)},
          {"epsilon", epsilon_},
          {"pull_cap", cap_},
          {"channel", "gaussian"}};
}

// ---------------------------------------------------------------------------

PostActionEnvironment::PostActionEnvironment(GaussianModelClass models,
                                             std::size_t base_contexts,
                                             double epsilon, double std_floor)
    : Environment(FiniteFunctionClass(models.mean_class()),
                  std::optional<GaussianModelClass>(models),
                  VarianceModel::kStrongPostAction),
      base_contexts_(base_contexts),
      epsilon_(epsilon),
      std_floor_(std_floor),
      cap_(pull_cap_for(epsilon)),
      counts_(base_contexts * models_->n_actions(), 0) {}

RoundStart PostActionEnvironment::begin_round(Rng& context_rng, Rng&) {
  const std::size_t base = context_rng.below(base_contexts_);
  const std::size_t bad = n_actions() - 1;
  std::size_t bits = 0;
  for (std::size_t j = 0; j < bad; ++j) {
    if (counts_[base * n_actions() + j] < cap_) bits |= std::size_t{1} << j;
  }
  return {base * (std::size_t{1} << bad) + bits, std::nullopt};
}

double PostActionEnvironment::variance_at(ContextId x, ActionId a) const {
  return models_->variance(models_->star_index(), x, a);
}

double PostActionEnvironment::settle(ContextId x, ActionId a) {
  const std::size_t base = x >> (n_actions() - 1);
  ++counts_[base * n_actions() + a];
  return models_->stddev(models_->star_index(), x, a);
}

double PostActionEnvironment::draw_reward(ContextId x, ActionId a, double sigma,
                                          Rng& rng) {
  return rng.normal(models_->mean(models_->star_index(), x, a), sigma);
}

json PostActionEnvironment::adversary() const {
  return {{"variance_model", to_string(info_)},
          {"epsilon", epsilon_},
          {"std_floor", std_floor_},
          {"pull_cap", cap_},
          {"base_contexts", base_contexts_},
          {"channel", "gaussian"}};
}

// ---------------------------------------------------------------------------

FiniteFunctionClass mab_class(std::size_t n_actions, double sigma,
                              double epsilon) {
  two_point(sigma, TwoPointKind::kPlus, epsilon);  // validates the range
  if (n_actions < 2) throw ArgumentError("need at least two arms");
  const std::size_t n = n_actions + 1;
  std::vector<double> values(n * n_actions, sigma - epsilon);
  for (std::size_t f = 0; f < n; ++f) values[f * n_actions] = sigma;
  for (std::size_t i = 1; i < n_actions; ++i) values[i * n_actions + i] = sigma + epsilon;
  values[n_actions * n_actions] = sigma + epsilon;
  return FiniteFunctionClass(1, n_actions, std::move(values));
}

double mab_default_epsilon(std::size_t n_actions, double sigma,
                           std::size_t horizon) {
  if (horizon == 0) throw ArgumentError("horizon must be positive");
  return std::sqrt(static_cast<double>(n_actions - 1) * sigma * sigma /
                   (4.0 * static_cast<double>(horizon)));
}

namespace {

FiniteFunctionClass bad_action_class(std::size_t n_contexts,
                                     std::size_t n_actions, double low,
                                     double high, double safe) {
  if (n_contexts == 0) throw ArgumentError("need at least one context");
  if (n_actions < 2) throw ArgumentError("need at least two actions");
  const std::size_t bad = n_actions - 1;
  const std::size_t n = n_contexts * bad + 1;
  const std::size_t stride = n_contexts * n_actions;
  std::vector<double> values(n * stride, low);
  for (std::size_t f = 0; f < n; ++f) {
    for (std::size_t x = 0; x < n_contexts; ++x) {
      values[f * stride + x * n_actions + bad] = safe;
    }
  }
  for (std::size_t i = 0; i < n_contexts; ++i) {
    for (std::size_t j = 0; j < bad; ++j) {
      const std::size_t f = 1 + i * bad + j;
      values[f * stride + i * n_actions + j] = high;
    }
  }
  return FiniteFunctionClass(n_contexts, n_actions, std::move(values));
}

}  // namespace

FiniteFunctionClass eluder_class(std::size_t n_contexts, std::size_t n_actions) {
  return bad_action_class(n_contexts, n_actions, 0.0, 1.0, 0.5);
}

FiniteFunctionClass strong_adversary_class(std::size_t n_contexts,
                                           std::size_t n_actions,
                                           double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 0.5)) {
    throw ArgumentError("epsilon must lie in (0, 1/2]");
  }
  return bad_action_class(n_contexts, n_actions, 0.5 - epsilon, 0.5 + epsilon, 0.5);
}

double strong_adversary_epsilon(std::size_t n_contexts, std::size_t n_actions,
                                std::size_t horizon) {
  if (horizon == 0) throw ArgumentError("horizon must be positive");
  return static_cast<double>(n_contexts) *
         std::sqrt(static_cast<double>(n_actions) / static_cast<double>(horizon));
}

void check_strong_adversary_epsilon(std::size_t n_contexts, double epsilon,
                                    std::size_t horizon) {
  const double e2 = epsilon * epsilon;
  const double lower = 2.0 * static_cast<double>(n_contexts) / static_cast<double>(horizon);
  if (!(e2 >= lower * (1.0 - 1e-12) && e2 <= 1.0)) {
    throw ArgumentError("epsilon^2 must lie in [2N/T, 1]");
  }
  if (epsilon > 0.5) throw ArgumentError("epsilon above 1/2 leaves [0, 1]");
}

GaussianModelClass sigma_bounded_models(const FiniteFunctionClass& means,
                                        double stddev) {
  if (!(stddev > 0.0 && stddev <= 1.0)) throw ArgumentError("sd must lie in (0, 1]");
  return GaussianModelClass(means.n_contexts(), means.n_actions(), means.values(),
                            std::vector<double>(means.values().size(), stddev),
                            means.star_index());
}

GaussianModelClass post_action_models(std::size_t n_contexts,
                                      std::size_t n_actions, double epsilon,
                                      double std_floor) {
  if (!(std_floor > 0.0 && std_floor < 1.0)) {
    throw ArgumentError("sd floor must lie in (0, 1)");
  }
  const FiniteFunctionClass base = strong_adversary_class(n_contexts, n_actions, epsilon);
  const std::size_t bad = n_actions - 1;
  if (bad >= 63 || n_contexts > (kMaxAugmentedContexts >> bad)) {
    throw CapacityError("count-augmented context space exceeds the budget");
  }
  const std::size_t variants = std::size_t{1} << bad;
  const std::size_t nx = n_contexts * variants;
  const std::size_t n = base.n_functions();
  std::vector<double> means(n * nx * n_actions);
  std::vector<double> stds(n * nx * n_actions);
  for (std::size_t f = 0; f < n; ++f) {
    for (std::size_t x = 0; x < nx; ++x) {
      const std::size_t base_x = x / variants;
      const std::size_t bits = x % variants;
      for (std::size_t a = 0; a < n_actions; ++a) {
        const std::size_t i = (f * nx + x) * n_actions + a;
        means[i] = base.value(f, base_x, a);
        const bool loud = a < bad && ((bits >> a) & 1U);
        stds[i] = loud ? 1.0 : std_floor;
      }
    }
  }
  return GaussianModelClass(nx, n_actions, std::move(means), std::move(stds));
}

FiniteFunctionClass random_class(std::size_t n_functions,
                                 std::size_t n_contexts,
                                 std::size_t n_actions, Rng& rng) {
  std::vector<double> values(n_functions * n_contexts * n_actions);
  for (double& v : values) v = rng.uniform();
  return FiniteFunctionClass(n_contexts, n_actions, std::move(values));
}

GaussianModelClass random_models(std::size_t n_models, std::size_t n_contexts,
                                 std::size_t n_actions, double min_std,
                                 double max_std, Rng& rng) {
  if (!(min_std > 0.0 && min_std <= max_std && max_std <= 1.0)) {
    throw ArgumentError("need 0 < min sd <= max sd <= 1");
  }
  const std::size_t size = n_models * n_contexts * n_actions;
  std::vector<double> means(size);
  std::vector<double> stds(size);
  for (std::size_t i = 0; i < size; ++i) {
    means[i] = rng.uniform();
    stds[i] = rng.uniform(min_std, max_std);
  }
  return GaussianModelClass(n_contexts, n_actions, std::move(means), std::move(stds));
}

double kl_gaussian(double mu1, double s1, double mu2, double s2) {
  if (!(s1 > 0.0) || !(s2 > 0.0)) throw ArgumentError("sd must be positive");
  const double d = mu1 - mu2;
  return std::log(s2 / s1) + (s1 * s1 + d * d) / (2.0 * s2 * s2) - 0.5;
}

// ---------------------------------------------------------------------------

namespace {

std::size_t get_size(const json& j, const char* key, std::size_t fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_integer() || j[key].get<std::int64_t>() < 0) {
    throw ConfigError(std::string("'") + key + "' must be a nonnegative integer");
  }
  return j[key].get<std::size_t>();
}

std::size_t require(const json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("environment needs '") + key + "'");
  return get_size(j, key, 0);
}

double get_double(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) throw ConfigError(std::string("'") + key + "' must be a number");
  return j[key].get<double>();
}

VarianceModel variance_of(const json& j, VarianceModel fallback) {
  if (!j.contains("variance_model")) return fallback;
  return variance_model_from_string(j["variance_model"].get<std::string>());
}

// Instance randomness of per-seed families.
Rng instance_rng(const json& j, std::uint64_t seed) {
  std::uint64_t s = seed;
  if (j.contains("instance_seed")) s = j["instance_seed"].get<std::uint64_t>();
  return Rng::for_stream(s, 0, 0, StreamPurpose::kInstance);
}

EnvironmentFamily enumerate(std::string kind, FiniteFunctionClass cls,
                            std::optional<GaussianModelClass> models,
                            VarianceModel info, VarianceSchedule schedule,
                            RewardChannel channel) {
  EnvironmentFamily fam;
  fam.kind = std::move(kind);
  fam.members = cls.n_functions();
  fam.make = [cls, models, info, schedule, channel](std::size_t member, std::uint64_t) {
    std::optional<GaussianModelClass> starred;
    if (models) starred = models->with_star(member);
    return std::make_unique<TableEnvironment>(cls.with_star(member), starred, info,
                                              schedule, channel);
  };
  return fam;
}

}  // namespace

EnvironmentFamily make_family(const json& spec, std::size_t horizon) {
  if (!spec.is_object() || !spec.contains("kind")) {
    throw ConfigError("environment stanza needs a 'kind'");
  }
  const std::string kind = spec["kind"].get<std::string>();
  try {
    if (kind == "mab") {
      const std::size_t a = require(spec, "A");
      const double sigma = get_double(spec, "sigma", 0.25);
      const double eps = get_double(spec, "epsilon", mab_default_epsilon(a, sigma, horizon));
      const FiniteFunctionClass cls = mab_class(a, sigma, eps);
      const VarianceModel info = variance_of(spec, VarianceModel::kWeakRevealedStart);
      EnvironmentFamily fam{kind, cls.n_functions(), {}};
      fam.make = [cls, sigma, eps, info](std::size_t member, std::uint64_t) {
        return std::make_unique<MabEnvironment>(cls.with_star(member), sigma, eps, info);
      };
      return fam;
    }
    if (kind == "eluder") {
      const FiniteFunctionClass cls = eluder_class(require(spec, "N"), require(spec, "A"));
      VarianceSchedule schedule;
      if (spec.contains("schedule")) schedule = VarianceSchedule::from_json(spec["schedule"]);
      return enumerate(kind, cls, std::nullopt,
                       variance_of(spec, VarianceModel::kWeakRevealedStart), schedule,
                       RewardChannel::kBoundedTwoPoint);
    }
    if (kind == "strong_adversary") {
      const std::size_t n = require(spec, "N");
      const std::size_t a = require(spec, "A");
      const double eps = get_double(spec, "epsilon", strong_adversary_epsilon(n, a, horizon));
      check_strong_adversary_epsilon(n, eps, horizon);
      const FiniteFunctionClass cls = strong_adversary_class(n, a, eps);
      EnvironmentFamily fam{kind, cls.n_functions(), {}};
      fam.make = [cls, eps](std::size_t member, std::uint64_t) {
        return std::make_unique<StrongAdversaryEnvironment>(cls.with_star(member), eps);
      };
      return fam;
    }
    if (kind == "gaussian_post_action") {
      const std::size_t n = require(spec, "N");
      const std::size_t a = require(spec, "A");
      const double eps = get_double(spec, "epsilon", strong_adversary_epsilon(n, a, horizon));
      check_strong_adversary_epsilon(n, eps, horizon);
      const double floor = get_double(spec, "std_floor", 0.01);
      const GaussianModelClass models = post_action_models(n, a, eps, floor);
      EnvironmentFamily fam{kind, models.n_models(), {}};
      fam.make = [models, n, eps, floor](std::size_t member, std::uint64_t) {
        return std::make_unique<PostActionEnvironment>(models.with_star(member), n, eps,
                                                       floor);
      };
      return fam;
    }
    if (kind == "gaussian_bounded") {
      if (!spec.contains("base")) throw ConfigError("gaussian_bounded needs a 'base'");
      const EnvironmentFamily base = make_family(spec["base"], horizon);
      const double sd = get_double(spec, "std", 0.25);
      const VarianceModel info = variance_of(spec, VarianceModel::kHidden);
      EnvironmentFamily fam{kind, base.members, {}};
      fam.make = [base, sd, info](std::size_t member, std::uint64_t seed) {
        const auto inner = base.make(member, seed);
        const GaussianModelClass models = sigma_bounded_models(inner->mean_class(), sd);
        return std::make_unique<TableEnvironment>(
            inner->mean_class(), models, info,
            VarianceSchedule{VarianceSchedule::Kind::kConstant, sd},
            RewardChannel::kGaussian);
      };
      return fam;
    }
    if (kind == "random") {
      const std::size_t nf = get_size(spec, "functions", 16);
      const std::size_t nx = get_size(spec, "contexts", 8);
      const std::size_t na = get_size(spec, "A", 4);
      VarianceSchedule schedule;
      if (spec.contains("schedule")) schedule = VarianceSchedule::from_json(spec["schedule"]);
      const VarianceModel info = variance_of(spec, VarianceModel::kWeakRevealedStart);
      EnvironmentFamily fam{kind, 1, {}};
      fam.make = [spec, nf, nx, na, schedule, info](std::size_t, std::uint64_t seed) {
        Rng rng = instance_rng(spec, seed);
        const FiniteFunctionClass cls = random_class(nf, nx, na, rng);
        const FunctionId star = rng.below(nf);
        return std::make_unique<TableEnvironment>(cls.with_star(star), std::nullopt, info,
                                                  schedule, RewardChannel::kBoundedTwoPoint);
      };
      return fam;
    }
    if (kind == "random_gaussian") {
      const std::size_t nm = get_size(spec, "models", 16);
      const std::size_t nx = get_size(spec, "contexts", 8);
      const std::size_t na = get_size(spec, "A", 4);
      const double lo = get_double(spec, "min_std", 0.05);
      const double hi = get_double(spec, "max_std", 0.5);
      const VarianceModel info = variance_of(spec, VarianceModel::kHidden);
      EnvironmentFamily fam{kind, 1, {}};
      fam.make = [spec, nm, nx, na, lo, hi, info](std::size_t, std::uint64_t seed) {
        Rng rng = instance_rng(spec, seed);
        GaussianModelClass models = random_models(nm, nx, na, lo, hi, rng);
        models = models.with_star(rng.below(nm));
        const FiniteFunctionClass means = models.mean_class();
        return std::make_unique<TableEnvironment>(
            means, models, info, VarianceSchedule{VarianceSchedule::Kind::kConstant, hi},
            RewardChannel::kGaussian);
      };
      return fam;
    }
    if (kind == "file") {
      const json j = read_json_file(spec.at("path").get<std::string>());
      VarianceSchedule schedule;
      if (spec.contains("schedule")) schedule = VarianceSchedule::from_json(spec["schedule"]);
      const VarianceModel info = variance_of(spec, VarianceModel::kWeakRevealedStart);
      if (j.contains("stds")) {
        const GaussianModelClass models = model_class_from_json(j);
        return enumerate(kind, models.mean_class(), models, info, schedule,
                         RewardChannel::kGaussian);
      }
      return enumerate(kind, function_class_from_json(j), std::nullopt, info, schedule,
                       RewardChannel::kBoundedTwoPoint);
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("environment '") + kind + "': " + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("environment '") + kind + "': " + e.what());
  }
  throw ConfigError("unknown environment kind '" + kind + "'");
}

json environment_to_json(const Environment& env) {
  json out;
  if (const GaussianModelClass* models = env.model_class()) {
    out = to_json(*models);
  } else {
    out = to_json(env.mean_class());
  }
  out["adversary"] = env.adversary();
  return out;
}

}  // namespace varbandit
