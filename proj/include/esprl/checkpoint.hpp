#pragma once

#include <nlohmann/json.hpp>
#include <string>

#include "esprl/mlp.hpp"
#include "esprl/optim.hpp"
#include "esprl/rng.hpp"

namespace esprl {

// All persistent artifacts use ordered_json so dumps are byte-stable.
using Json = nlohmann::ordered_json;

inline constexpr int kCheckpointFormatVersion = 1;

Json mlp_to_json(const MlpParams& mlp);
MlpParams mlp_from_json(const Json& j);

Json optimizer_to_json(const OptimizerState& opt);
OptimizerState optimizer_from_json(const Json& j);

Json rng_to_json(const Rng& rng);
Rng rng_from_json(const Json& j);

void write_json_file(const std::string& path, const Json& j);
Json read_json_file(const std::string& path);

}  // namespace esprl
