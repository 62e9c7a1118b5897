#include "varbandit/io.h"

#include <fstream>

#include "varbandit/errors.h"

namespace varbandit {
namespace {

using nlohmann::json;

std::size_t require_size(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number_integer() || j[key].get<std::int64_t>() < 0) {
    throw ConfigError(std::string("missing or invalid '") + key + "'");
  }
  return j[key].get<std::size_t>();
}

// Rows of per-member tables flattened in member order.
std::vector<double> flatten(const json& rows, std::size_t row_size,
                            const char* key) {
  if (!rows.is_array()) throw ConfigError(std::string("'") + key + "' must be an array");
  std::vector<double> out;
  for (const auto& row : rows) {
    if (!row.is_array() || row.size() != row_size) {
      throw ConfigError(std::string("every '") + key + "' row needs " +
                        std::to_string(row_size) + " entries");
    }
    for (const auto& v : row) out.push_back(v.get<double>());
  }
  return out;
}

json rows(const std::vector<double>& flat, std::size_t row_size) {
  json out = json::array();
  for (std::size_t i = 0; i < flat.size(); i += row_size) {
    out.push_back(std::vector<double>(flat.begin() + i, flat.begin() + i + row_size));
  }
  return out;
}

}  // namespace

json to_json(const FiniteFunctionClass& cls) {
  return {{"n_contexts", cls.n_contexts()},
          {"n_actions", cls.n_actions()},
          {"star_index", cls.star_index()},
          {"functions", rows(cls.values(), cls.n_contexts() * cls.n_actions())}};
}

FiniteFunctionClass function_class_from_json(const json& j) {
  const std::size_t nx = require_size(j, "n_contexts");
  const std::size_t na = require_size(j, "n_actions");
  const std::size_t star = j.value("star_index", std::size_t{0});
  if (!j.contains("functions")) throw ConfigError("missing 'functions'");
  try {
    return FiniteFunctionClass(nx, na, flatten(j["functions"], nx * na, "functions"), star);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

json to_json(const GaussianModelClass& models) {
  const std::size_t row = models.n_contexts() * models.n_actions();
  return {{"n_contexts", models.n_contexts()},
          {"n_actions", models.n_actions()},
          {"star_index", models.star_index()},
          {"means", rows(models.means(), row)},
          {"stds", rows(models.stds(), row)}};
}

GaussianModelClass model_class_from_json(const json& j) {
  const std::size_t nx = require_size(j, "n_contexts");
  const std::size_t na = require_size(j, "n_actions");
  const std::size_t star = j.value("star_index", std::size_t{0});
  if (!j.contains("means") || !j.contains("stds")) {
    throw ConfigError("model class needs 'means' and 'stds'");
  }
  try {
    return GaussianModelClass(nx, na, flatten(j["means"], nx * na, "means"),
                              flatten(j["stds"], nx * na, "stds"), star);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

json to_json(const EluderWitness& witness) {
  json steps = json::array();
  for (const auto& s : witness.steps) {
    steps.push_back({{"z", s.z}, {"f", s.f}, {"f_prime", s.f_prime}});
  }
  return {{"alpha0", witness.alpha0}, {"steps", steps}};
}

EluderWitness witness_from_json(const json& j) {
  EluderWitness w;
  w.alpha0 = j.at("alpha0").get<double>();
  for (const auto& s : j.at("steps")) {
    w.steps.push_back({s.at("z").get<std::size_t>(), s.at("f").get<std::size_t>(),
                       s.at("f_prime").get<std::size_t>()});
  }
  return w;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("invalid JSON in '" + path + "': " + e.what());
  }
}

}  // namespace varbandit
