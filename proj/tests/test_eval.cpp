#include <doctest.h>

#include <cmath>
#include <cstdint>

#include "esprl/eval.hpp"
#include "esprl/gridworld.hpp"
#include "esprl/tabular.hpp"

using namespace esprl;

namespace {

constexpr int kRight = 1;
constexpr int kLeft = 3;

Policy always(int action) {
  return [action](const Env&, const Vector&, Rng&) { return action; };
}

}  // namespace

TEST_CASE("mc horizon covers the discount tail") {
  // gamma^h <= 1e-6 first at h = ceil(log(1e-6)/log(gamma)).
  CHECK(mc_horizon_for(0.9) == 132);
  CHECK(mc_horizon_for(0.5) == 20);
  CHECK(mc_horizon_for(0.9, 1e-6, 50) == 50);  // cap binds
  CHECK(mc_horizon_for(1.0) == 100000);
  CHECK(mc_horizon_for(0.0) == 1);
  CHECK(mc_horizon_for(-0.3) == 1);
}

TEST_CASE("deterministic rollouts reproduce the dp feature values exactly") {
  GridWorld world(corridor_spec(6, 0.0));
  ExplicitMdp mdp = world.enumerate_mdp();
  std::vector<int> pi(static_cast<size_t>(mdp.num_states), kRight);
  const Matrix qf = gvf_policy_eval(mdp, pi);

  Rng rng(11);
  const long horizon = mc_horizon_for(0.9);
  for (int cell = 1; cell <= 4; ++cell) {
    const Vector state = Vector::Constant(1, cell);
    for (int a = 0; a < 4; ++a) {
      McGvfResult mc = monte_carlo_gvf(world, state, a, always(kRight), 0.9,
                                       4, horizon, rng);
      const Vector want = qf.row(mdp.sa_index(cell, a)).transpose();
      for (int i = 0; i < 3; ++i) {
        CHECK(mc.mean[i] == doctest::Approx(want[i]).epsilon(1e-9));
        CHECK(mc.se[i] == 0.0);  // identical rollouts, no spread
      }
    }
  }
}

TEST_CASE("monte carlo gvf agrees with dp within three standard errors") {
  GridWorld world(corridor_spec(6, 0.3));
  ExplicitMdp mdp = world.enumerate_mdp();
  ValueIterationResult vi = value_iteration(mdp);
  const Matrix qf = gvf_policy_eval(mdp, vi.policy);

  Policy pi = [&world, &vi](const Env&, const Vector& s, Rng&) {
    return vi.policy[static_cast<size_t>(world.cell_of(s))];
  };

  Rng rng(42);
  const long horizon = mc_horizon_for(0.9);
  int checked = 0;
  for (int cell = 1; cell <= 4; ++cell) {
    const Vector state = Vector::Constant(1, cell);
    for (int a = 0; a < 4; ++a) {
      McGvfResult mc =
          monte_carlo_gvf(world, state, a, pi, 0.9, 512, horizon, rng);
      const Vector want = qf.row(mdp.sa_index(cell, a)).transpose();
      for (int i = 0; i < 3; ++i) {
        const double tol = 3.0 * mc.se[i] + 1e-9;
        CHECK_MESSAGE(std::abs(mc.mean[i] - want[i]) <= tol,
                      "cell ", cell, " action ", a, " comp ", i, ": mc ",
                      mc.mean[i], " dp ", want[i], " se ", mc.se[i]);
        ++checked;
      }
    }
  }
  CHECK(checked == 48);
}

TEST_CASE("collect_gvf_truth covers every unmasked action per state") {
  GridWorld world(corridor_spec(6, 0.2));
  std::vector<Vector> states = {Vector::Constant(1, 1), Vector::Constant(1, 3)};
  Rng rng(7);
  GvfTestSet set = collect_gvf_truth(world, states, always(kRight), 0.9, 16,
                                     mc_horizon_for(0.9), rng);
  REQUIRE(set.states.size() == 2);
  REQUIRE(set.actions.size() == 2);
  REQUIRE(set.truth.size() == 2);
  for (size_t i = 0; i < 2; ++i) {
    CHECK(set.actions[i] == std::vector<int>{0, 1, 2, 3});
    REQUIRE(set.truth[i].size() == 4);
    for (const McGvfResult& r : set.truth[i]) {
      CHECK(r.mean.size() == 3);
      CHECK(r.se.size() == 3);
    }
  }

  // gvf_mse against the set is the plain squared-error average.
  Rng mrng(3);
  EspModel model =
      make_esp_model(world.descriptor(), {8}, {8}, 0.9, 0.9, mrng);
  double direct = 0.0;
  long count = 0;
  for (size_t i = 0; i < set.states.size(); ++i) {
    Matrix pred = gvf_predict_all(model, world.observe(set.states[i]));
    for (size_t k = 0; k < set.actions[i].size(); ++k) {
      direct +=
          (pred.col(set.actions[i][k]) - set.truth[i][k].mean).squaredNorm();
      count += 3;
    }
  }
  CHECK(gvf_mse(model, world, set) ==
        doctest::Approx(direct / double(count)).epsilon(1e-12));
}

TEST_CASE("evaluate_policy scores deterministic corridor walks exactly") {
  GridWorld world(corridor_spec(6, 0.0));
  Rng rng(1);

  PolicyEvalResult right = evaluate_policy(world, always(kRight), 8, rng, 100);
  CHECK(right.mean_return == 1.0);
  CHECK(right.std_return == 0.0);
  CHECK(right.win_rate == 1.0);
  CHECK(right.episodes == 8);

  PolicyEvalResult left = evaluate_policy(world, always(kLeft), 8, rng, 100);
  CHECK(left.mean_return == 0.0);
  CHECK(left.win_rate == 0.0);

  // A step budget below the corridor length truncates the episode unscored.
  PolicyEvalResult cut = evaluate_policy(world, always(kRight), 3, rng, 2);
  CHECK(cut.mean_return == 0.0);

  CHECK_THROWS_AS(evaluate_policy(world, always(kRight), 0, rng, 10),
                  std::invalid_argument);
}

TEST_CASE("collect_test_states returns the requested number of live states") {
  GridWorld world(corridor_spec(6, 0.3));
  Rng rng(9);
  std::vector<Vector> states =
      collect_test_states(world, always(kRight), 50, rng, 100);
  REQUIRE(states.size() == 50);
  for (const Vector& s : states) {
    const int cell = world.cell_of(s);
    CHECK(cell >= 1);
    CHECK(cell <= 4);
    CHECK_FALSE(world.is_terminal_cell(cell));
  }
}

TEST_CASE("greedy_policy matches greedy_action under the env mask") {
  GridWorld world(corridor_spec(6, 0.0));
  Rng rng(21);
  EspModel model =
      make_esp_model(world.descriptor(), {16}, {8}, 0.9, 0.9, rng);
  Policy pi = greedy_policy(model);
  for (int cell = 1; cell <= 4; ++cell) {
    const Vector state = Vector::Constant(1, cell);
    const int got = pi(world, state, rng);
    CHECK(got ==
          greedy_action(model, world.observe(state), world.action_mask(state)));
  }
}

TEST_CASE("stable_hash implements 64-bit fnv-1a") {
  // Published test vectors for the FNV-1a 64-bit variant.
  CHECK(stable_hash("") == 14695981039346656037ull);
  CHECK(stable_hash("a") == 0xaf63dc4c8601ec8cull);
  CHECK(stable_hash("foobar") == 0x85944171f73967e8ull);
}

TEST_CASE("metrics fingerprints ignore wall clock but nothing else") {
  MetricsRow r;
  r.episode = 7;
  r.env_steps = 420;
  r.eval_mean_return = 1.25;
  r.eval_std = 0.5;
  r.gvf_loss = 3e-4;
  r.q_loss = 2e-3;
  r.epsilon = 0.37;
  r.wall_clock_s = 12.5;

  MetricsRow slower = r;
  slower.wall_clock_s = 99.0;
  CHECK(metrics_hash({r}) == metrics_hash({slower}));

  MetricsRow different = r;
  different.q_loss = 2.1e-3;
  CHECK(metrics_hash({r}) != metrics_hash({different}));

  CHECK(metrics_hash({}) == stable_hash(""));
}

TEST_CASE("experiments aggregate seeds reproducibly") {
  ExperimentSpec spec;
  spec.env_id = "gridworld";
  spec.env_config = {{"width", 5}, {"slip", 0.0}};
  spec.seeds = {3, 4};
  spec.mc_states = 8;
  spec.mc_rollouts = 8;

  TrainerConfig& cfg = spec.trainer;
  cfg.agent = AgentKind::esp;
  cfg.beta = 0.9;
  cfg.gamma = 0.9;
  cfg.gvf_hidden = {16};
  cfg.combiner_hidden = {8};
  cfg.eps_decay_steps = 200;
  cfg.batch_size = 16;
  cfg.buffer_capacity = 2000;
  cfg.learn_start = 32;
  cfg.train_episodes = 30;
  cfg.max_steps_per_episode = 50;
  cfg.eval_interval = 15;
  cfg.eval_episodes = 4;
  cfg.eval_max_steps = 50;

  ExperimentResult a = run_experiment(spec);
  REQUIRE(a.seeds.size() == 2);
  CHECK(a.seeds[0].seed == 3);
  CHECK(a.seeds[1].seed == 4);
  // eval points at episodes 15 and 30, plus checkpoints at 0 / evals / final.
  CHECK(a.seeds[0].run.metrics.size() == 2);
  CHECK(a.seeds[0].run.checkpoints.size() >= 3);
  CHECK(a.seeds[0].gvf_mse_curve.size() ==
        a.seeds[0].run.checkpoints.size());

  const std::string csv = curves_csv(a);
  CHECK(csv.rfind("env_steps,metric,mean,std,n_seeds\n", 0) == 0);
  CHECK(csv.find("eval_mean_return") != std::string::npos);
  CHECK(csv.find("gvf_loss") != std::string::npos);
  CHECK(csv.find("q_loss") != std::string::npos);
  CHECK(csv.find("gvf_mse_vs_episode") != std::string::npos);
  CHECK(csv.find(",2\n") != std::string::npos);  // two seeds aggregated

  const Json summary = experiment_summary(a);
  CHECK(summary["env"] == "gridworld");
  CHECK(summary["agent"] == "esp");
  CHECK(summary["n_seeds"] == 2);
  REQUIRE(summary["seeds"].size() == 2);
  CHECK(summary["seeds"][0].contains("metrics_hash"));
  CHECK(summary["seeds"][0].contains("first_gvf_mse"));
  CHECK(summary["seeds"][0].contains("final_gvf_mse"));

  // The whole pipeline is a pure function of the spec.
  ExperimentResult b = run_experiment(spec);
  CHECK(curves_csv(b) == csv);
  CHECK(experiment_summary(b).dump(2) == summary.dump(2));
  CHECK(b.seeds[0].run.metrics.size() == a.seeds[0].run.metrics.size());
  for (size_t i = 0; i < a.seeds.size(); ++i)
    CHECK(metrics_hash(b.seeds[i].run.metrics) ==
          metrics_hash(a.seeds[i].run.metrics));

  // Different seeds genuinely change the run.
  CHECK(metrics_hash(a.seeds[0].run.metrics) !=
        metrics_hash(a.seeds[1].run.metrics));
}
