#pragma once

// JSON forms of classes and eluder witnesses. Doubles round-trip exactly.

#include <string>

#include "json.hpp"
#include "varbandit/core.h"
#include "varbandit/eluder.h"

namespace varbandit {

// {"n_contexts", "n_actions", "star_index", "functions": [[f(x,a) row-major]]}
nlohmann::json to_json(const FiniteFunctionClass& cls);
FiniteFunctionClass function_class_from_json(const nlohmann::json& j);

// Same layout with "means" and "stds" per model.
nlohmann::json to_json(const GaussianModelClass& models);
GaussianModelClass model_class_from_json(const nlohmann::json& j);

nlohmann::json to_json(const EluderWitness& witness);
EluderWitness witness_from_json(const nlohmann::json& j);

nlohmann::json read_json_file(const std::string& path);

}  // namespace varbandit
