#include <doctest.h>

#include "esprl/run_config.hpp"

using namespace esprl;

TEST_CASE("trainer config round-trips through json") {
  TrainerConfig cfg;
  cfg.agent = AgentKind::dqn_full;
  cfg.beta = 0.95;
  cfg.gamma = 0.9;
  cfg.gvf_hidden = {32, 16};
  cfg.combiner_hidden = {8};
  cfg.gvf_optimizer = OptKind::sgd;
  cfg.gvf_lr = 5e-4;
  cfg.combiner_lr = 2e-3;
  cfg.eps_decay_steps = 12345;
  cfg.batch_size = 7;
  cfg.buffer_capacity = 999;
  cfg.learn_start = 11;
  cfg.soft_target = false;
  cfg.target_sync_every = 250;
  cfg.train_episodes = 42;
  cfg.eval_interval = 6;
  cfg.eval_episodes = 3;
  cfg.reward_scale = 0.5;
  cfg.seed = 77;

  const TrainerConfig back = trainer_config_from_json(trainer_config_to_json(cfg));
  CHECK(trainer_config_to_json(back) == trainer_config_to_json(cfg));
  CHECK(back.agent == AgentKind::dqn_full);
  CHECK(back.gvf_hidden == std::vector<int>{32, 16});
  CHECK(back.seed == 77);
}

TEST_CASE("typos and bad values are rejected loudly") {
  CHECK_THROWS_AS(trainer_config_from_json({{"gama", 0.9}}), ConfigError);
  CHECK_THROWS_AS(trainer_config_from_json({{"agent", "espn"}}), ConfigError);
  CHECK_THROWS_AS(trainer_config_from_json({{"batch_size", 0}}), ConfigError);
  CHECK_THROWS_AS(trainer_config_from_json({{"beta", 1.0}}), ConfigError);
  CHECK_THROWS_AS(trainer_config_from_json({{"gamma", -0.1}}), ConfigError);
  CHECK_THROWS_AS(trainer_config_from_json({{"eps_start", 1.5}}), ConfigError);
  CHECK_THROWS_AS(trainer_config_from_json({{"tau", 0.0}}), ConfigError);
  CHECK_THROWS_AS(trainer_config_from_json({{"gvf_hidden", {16, -4}}}),
                  ConfigError);
  // Empty hidden lists are legal: they select a single linear layer.
  CHECK(trainer_config_from_json({{"combiner_hidden", Json::array()}})
            .combiner_hidden.empty());
  CHECK_THROWS_AS(
      trainer_config_from_json({{"soft_target", false}, {"target_sync_every", 0}}),
      ConfigError);
  CHECK_THROWS_AS(trainer_config_from_json({{"train_episodes", "lots"}}),
                  ConfigError);
  // Defaults pass validation untouched.
  CHECK_NOTHROW(trainer_config_from_json(Json::object()));
}

TEST_CASE("run config validates its environment eagerly") {
  Json j;
  j["env"] = "gridworld";
  j["env_config"] = {{"width", 7}, {"slip", 0.1}};
  j["trainer"] = {{"gamma", 0.9}, {"beta", 0.9}};
  const RunConfig cfg = run_config_from_json(j);
  CHECK(cfg.env_id == "gridworld");
  CHECK(cfg.env_config.at("width") == 7);
  CHECK(cfg.trainer.gamma == 0.9);
  CHECK(run_config_from_json(run_config_to_json(cfg)).env_id == "gridworld");

  CHECK_THROWS_AS(run_config_from_json({{"environment", "gridworld"}}),
                  ConfigError);
  CHECK_THROWS_AS(run_config_from_json({{"env", "pong"}}), ConfigError);
  Json bad = j;
  bad["env_config"] = {{"width", 1}};  // corridor needs at least 3 cells
  CHECK_THROWS_AS(run_config_from_json(bad), ConfigError);
}

TEST_CASE("checkpoint filenames carry env, seed and episode") {
  CHECK(checkpoint_filename("cartpole", 3, 1200) ==
        "ckpt_cartpole_3_1200.json");
}
