#pragma once

#include <stdexcept>
#include <string>

#include "esprl/checkpoint.hpp"
#include "esprl/dqn.hpp"

namespace esprl {

// Bad or inconsistent configuration; the CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct RunConfig {
  std::string env_id = "cartpole";
  Json env_config = Json::object();
  TrainerConfig trainer;
};

// Strict parsers: unknown keys are ConfigErrors so typos cannot silently
// fall back to defaults.
TrainerConfig trainer_config_from_json(const Json& j);
Json trainer_config_to_json(const TrainerConfig& cfg);

RunConfig run_config_from_json(const Json& j);
Json run_config_to_json(const RunConfig& cfg);

// ESP_RL_RUNS_DIR overrides the default "runs" root.
std::string resolve_runs_dir();

// runs/<env>/<agent>/<seed>/<timestamp>/, created on demand. A non-empty
// explicit_dir wins and is created as given.
std::string make_run_dir(const std::string& env_id, const std::string& agent,
                         uint64_t seed, const std::string& explicit_dir = "");

std::string checkpoint_filename(const std::string& env_id, uint64_t seed,
                                long episode);

}  // namespace esprl
