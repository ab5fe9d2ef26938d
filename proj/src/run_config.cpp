#include "esprl/run_config.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>

namespace esprl {

namespace {

// An empty list is allowed and means a single linear layer.
std::vector<int> int_list(const Json& j, const std::string& key) {
  std::vector<int> out;
  for (const auto& v : j) {
    if (!v.is_number_integer() || v.get<int>() <= 0)
      throw ConfigError(key + " must be a list of positive integers");
    out.push_back(v.get<int>());
  }
  return out;
}

}  // namespace

TrainerConfig trainer_config_from_json(const Json& j) {
  TrainerConfig cfg;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "agent") cfg.agent = agent_from_name(value.get<std::string>());
      else if (key == "beta") cfg.beta = value.get<double>();
      else if (key == "gamma") cfg.gamma = value.get<double>();
      else if (key == "gvf_hidden") cfg.gvf_hidden = int_list(value, key);
      else if (key == "combiner_hidden") cfg.combiner_hidden = int_list(value, key);
      else if (key == "gvf_optimizer")
        cfg.gvf_optimizer = opt_from_name(value.get<std::string>());
      else if (key == "gvf_lr") cfg.gvf_lr = value.get<double>();
      else if (key == "combiner_optimizer")
        cfg.combiner_optimizer = opt_from_name(value.get<std::string>());
      else if (key == "combiner_lr") cfg.combiner_lr = value.get<double>();
      else if (key == "eps_start") cfg.eps_start = value.get<double>();
      else if (key == "eps_final") cfg.eps_final = value.get<double>();
      else if (key == "eps_decay_steps") cfg.eps_decay_steps = value.get<long>();
      else if (key == "batch_size") cfg.batch_size = value.get<int>();
      else if (key == "buffer_capacity") cfg.buffer_capacity = value.get<size_t>();
      else if (key == "learn_start") cfg.learn_start = value.get<long>();
      else if (key == "soft_target") cfg.soft_target = value.get<bool>();
      else if (key == "tau") cfg.tau = value.get<double>();
      else if (key == "target_sync_every") cfg.target_sync_every = value.get<long>();
      else if (key == "train_episodes") cfg.train_episodes = value.get<long>();
      else if (key == "max_steps_per_episode")
        cfg.max_steps_per_episode = value.get<long>();
      else if (key == "eval_interval") cfg.eval_interval = value.get<int>();
      else if (key == "eval_episodes") cfg.eval_episodes = value.get<int>();
      else if (key == "eval_max_steps") cfg.eval_max_steps = value.get<long>();
      else if (key == "reward_scale") cfg.reward_scale = value.get<double>();
      else if (key == "seed") cfg.seed = value.get<uint64_t>();
      else throw ConfigError("unknown trainer config key: " + key);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError("bad value for trainer config key '" + key + "': " + e.what());
    }
  }
  if (cfg.batch_size <= 0) throw ConfigError("batch_size must be positive");
  if (cfg.buffer_capacity == 0) throw ConfigError("buffer_capacity must be positive");
  if (cfg.train_episodes <= 0) throw ConfigError("train_episodes must be positive");
  if (cfg.eval_interval <= 0) throw ConfigError("eval_interval must be positive");
  if (cfg.eval_episodes <= 0) throw ConfigError("eval_episodes must be positive");
  if (cfg.beta < 0.0 || cfg.beta >= 1.0) throw ConfigError("beta must be in [0, 1)");
  if (cfg.gamma < 0.0 || cfg.gamma >= 1.0) throw ConfigError("gamma must be in [0, 1)");
  if (cfg.eps_start < 0.0 || cfg.eps_start > 1.0 || cfg.eps_final < 0.0 ||
      cfg.eps_final > 1.0)
    throw ConfigError("epsilon bounds must be in [0, 1]");
  if (cfg.tau <= 0.0 || cfg.tau > 1.0) throw ConfigError("tau must be in (0, 1]");
  if (!cfg.soft_target && cfg.target_sync_every <= 0)
    throw ConfigError("target_sync_every must be positive for hard sync");
  return cfg;
}

Json trainer_config_to_json(const TrainerConfig& cfg) {
  Json j;
  j["agent"] = agent_name(cfg.agent);
  j["beta"] = cfg.beta;
  j["gamma"] = cfg.gamma;
  j["gvf_hidden"] = cfg.gvf_hidden;
  j["combiner_hidden"] = cfg.combiner_hidden;
  j["gvf_optimizer"] = opt_name(cfg.gvf_optimizer);
  j["gvf_lr"] = cfg.gvf_lr;
  j["combiner_optimizer"] = opt_name(cfg.combiner_optimizer);
  j["combiner_lr"] = cfg.combiner_lr;
  j["eps_start"] = cfg.eps_start;
  j["eps_final"] = cfg.eps_final;
  j["eps_decay_steps"] = cfg.eps_decay_steps;
  j["batch_size"] = cfg.batch_size;
  j["buffer_capacity"] = cfg.buffer_capacity;
  j["learn_start"] = cfg.learn_start;
  j["soft_target"] = cfg.soft_target;
  j["tau"] = cfg.tau;
  j["target_sync_every"] = cfg.target_sync_every;
  j["train_episodes"] = cfg.train_episodes;
  j["max_steps_per_episode"] = cfg.max_steps_per_episode;
  j["eval_interval"] = cfg.eval_interval;
  j["eval_episodes"] = cfg.eval_episodes;
  j["eval_max_steps"] = cfg.eval_max_steps;
  j["reward_scale"] = cfg.reward_scale;
  j["seed"] = cfg.seed;
  return j;
}

RunConfig run_config_from_json(const Json& j) {
  RunConfig cfg;
  for (const auto& [key, value] : j.items()) {
    if (key == "env") cfg.env_id = value.get<std::string>();
    else if (key == "env_config") cfg.env_config = value;
    else if (key == "trainer") cfg.trainer = trainer_config_from_json(value);
    else throw ConfigError("unknown config key: " + key);
  }
  try {
    make_env(cfg.env_id, cfg.env_config);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("bad environment config: ") + e.what());
  }
  return cfg;
}

Json run_config_to_json(const RunConfig& cfg) {
  Json j;
  j["env"] = cfg.env_id;
  j["env_config"] = cfg.env_config;
  j["trainer"] = trainer_config_to_json(cfg.trainer);
  return j;
}

std::string resolve_runs_dir() {
  const char* env = std::getenv("ESP_RL_RUNS_DIR");
  return env && *env ? env : "runs";
}

std::string make_run_dir(const std::string& env_id, const std::string& agent,
                         uint64_t seed, const std::string& explicit_dir) {
  namespace fs = std::filesystem;
  std::string dir = explicit_dir;
  if (dir.empty()) {
    const auto now = std::chrono::system_clock::now().time_since_epoch();
    const long stamp =
        std::chrono::duration_cast<std::chrono::milliseconds>(now).count();
    dir = resolve_runs_dir() + "/" + env_id + "/" + agent + "/" +
          std::to_string(seed) + "/" + std::to_string(stamp);
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    throw std::runtime_error("cannot create run directory " + dir + ": " +
                             ec.message());
  return dir;
}

std::string checkpoint_filename(const std::string& env_id, uint64_t seed,
                                long episode) {
  return "ckpt_" + env_id + "_" + std::to_string(seed) + "_" +
         std::to_string(episode) + ".json";
}

}  // namespace esprl
