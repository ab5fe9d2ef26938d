// Command line front end: train agents, evaluate and explain checkpoints,
// run exact tabular oracles, and aggregate multi-seed experiments.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "esprl/dqn.hpp"
#include "esprl/eval.hpp"
#include "esprl/explain.hpp"
#include "esprl/gridworld.hpp"
#include "esprl/run_config.hpp"
#include "esprl/tabular.hpp"

namespace {

using esprl::Json;

Json load_json_arg(const std::string& inline_or_path) {
  // Accept inline JSON or a path to a JSON file.
  if (!inline_or_path.empty() &&
      (inline_or_path.front() == '[' || inline_or_path.front() == '{'))
    return Json::parse(inline_or_path);
  return esprl::read_json_file(inline_or_path);
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << text;
}

struct TrainArgs {
  std::string config_path;
  std::string env_id;
  std::string agent;
  std::string out_dir;
  long episodes = -1;
  long seed = -1;
  bool quiet = false;
};

esprl::RunConfig resolve_run_config(const TrainArgs& args) {
  esprl::RunConfig cfg;
  if (!args.config_path.empty())
    cfg = esprl::run_config_from_json(esprl::read_json_file(args.config_path));
  if (!args.env_id.empty()) cfg.env_id = args.env_id;
  if (!args.agent.empty())
    cfg.trainer.agent = esprl::agent_from_name(args.agent);
  if (args.episodes >= 0) cfg.trainer.train_episodes = args.episodes;
  if (args.seed >= 0) cfg.trainer.seed = static_cast<uint64_t>(args.seed);
  return cfg;
}

int cmd_train(const TrainArgs& args) {
  esprl::RunConfig cfg = resolve_run_config(args);
  auto env = esprl::make_env(cfg.env_id, cfg.env_config);
  const std::string dir =
      esprl::make_run_dir(cfg.env_id, esprl::agent_name(cfg.trainer.agent),
                          cfg.trainer.seed, args.out_dir);
  esprl::write_json_file(dir + "/config.json", esprl::run_config_to_json(cfg));

  esprl::RunResult result = esprl::run_training(
      *env, cfg.trainer,
      [&](const esprl::MetricsRow& row, const esprl::EspModel&) {
        if (!args.quiet)
          std::fprintf(stderr,
                       "episode %ld  steps %ld  eval %.2f +- %.2f  eps %.3f\n",
                       row.episode, row.env_steps, row.eval_mean_return,
                       row.eval_std, row.epsilon);
        return true;
      });

  write_text_file(dir + "/metrics.csv", esprl::metrics_csv(result.metrics));
  for (const esprl::CheckpointEntry& ckpt : result.checkpoints)
    esprl::save_model(
        dir + "/" +
            esprl::checkpoint_filename(cfg.env_id, cfg.trainer.seed, ckpt.episode),
        ckpt.model);

  Json summary;
  summary["run_dir"] = dir;
  summary["env_steps"] = result.total_env_steps;
  summary["checkpoints"] = result.checkpoints.size();
  if (!result.metrics.empty()) {
    summary["final_eval_mean_return"] = result.metrics.back().eval_mean_return;
    summary["final_eval_std"] = result.metrics.back().eval_std;
  }
  summary["metrics_hash"] = esprl::metrics_hash(result.metrics);
  std::cout << summary.dump(2) << "\n";
  return 0;
}

int cmd_eval(const std::string& ckpt_path, int episodes, long seed,
             long max_steps) {
  esprl::EspModel model = esprl::load_model(ckpt_path);
  auto env = esprl::make_env(model.env.id, model.env.config);
  esprl::Rng rng(static_cast<uint64_t>(seed));
  esprl::PolicyEvalResult res = esprl::evaluate_policy(
      *env, esprl::greedy_policy(model), episodes, rng, max_steps);
  Json j;
  j["checkpoint"] = ckpt_path;
  j["episodes"] = res.episodes;
  j["mean_return"] = res.mean_return;
  j["std_return"] = res.std_return;
  j["win_rate"] = res.win_rate;
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_explain(const std::string& ckpt_path, const std::string& state_arg,
                int action_a, int action_b, int steps,
                const std::string& out_path, bool text) {
  esprl::EspModel model = esprl::load_model(ckpt_path);
  auto env = esprl::make_env(model.env.id, model.env.config);

  esprl::Vector state;
  if (state_arg.empty()) {
    esprl::Rng rng(0);
    state = env->reset(rng);
  } else {
    Json sj = load_json_arg(state_arg);
    state.resize(static_cast<Eigen::Index>(sj.size()));
    for (Eigen::Index i = 0; i < state.size(); ++i)
      state[i] = sj[static_cast<size_t>(i)].get<double>();
  }
  const esprl::Vector obs = env->observe(state);
  const std::vector<uint8_t> mask = env->action_mask(state);

  // Defaults: explain the greedy action against the runner-up.
  if (action_a < 0) action_a = esprl::greedy_action(model, obs, mask);
  if (action_b < 0) {
    esprl::Vector q = esprl::q_values(model, obs);
    int best = -1;
    for (int a = 0; a < model.action_count(); ++a) {
      if (a == action_a || !mask[static_cast<size_t>(a)]) continue;
      if (best < 0 || q[a] > q[best]) best = a;
    }
    if (best < 0)
      throw std::runtime_error("explain: no unmasked alternative action");
    action_b = best;
  }

  esprl::Explanation e = esprl::igx(model, obs, action_a, action_b, steps);
  Json report = esprl::explanation_to_json(e, model.env.schema);
  if (!out_path.empty())
    esprl::write_json_file(out_path, report);
  else
    std::cout << report.dump(2) << "\n";
  if (text)
    std::cerr << esprl::explanation_text(e, model.env.schema);
  return 0;
}

int cmd_oracle(const std::string& env_id, int width, double slip, long seed,
               int states, int actions, int bins, int sufficiency_samples,
               const std::string& out_path) {
  esprl::ExplicitMdp mdp;
  if (env_id == "gridworld") {
    esprl::GridWorld world(esprl::corridor_spec(width, slip));
    mdp = world.enumerate_mdp();
  } else if (env_id == "random") {
    esprl::RandomMdpSpec spec;
    spec.num_states = states;
    spec.num_actions = actions;
    esprl::Rng rng(static_cast<uint64_t>(seed));
    mdp = esprl::make_random_mdp(spec, rng);
  } else {
    throw esprl::ConfigError("oracle supports env 'gridworld' or 'random'");
  }

  esprl::ValueIterationResult vi = esprl::value_iteration(mdp);
  esprl::Matrix qf = esprl::gvf_policy_eval(mdp, vi.policy);

  Json j;
  j["num_states"] = mdp.num_states;
  j["num_actions"] = mdp.num_actions;
  j["feature_dim"] = mdp.feature_dim;
  j["iterations"] = vi.iterations;
  j["policy"] = vi.policy;
  Json q_rows = Json::array();
  for (int s = 0; s < mdp.num_states; ++s) {
    std::vector<double> row(vi.q.row(s).data(),
                            vi.q.row(s).data() + mdp.num_actions);
    q_rows.push_back(row);
  }
  j["q_star"] = q_rows;
  Json qf_rows = Json::array();
  for (int i = 0; i < qf.rows(); ++i) {
    std::vector<double> row(qf.row(i).size());
    for (int c = 0; c < qf.cols(); ++c) row[static_cast<size_t>(c)] = qf(i, c);
    qf_rows.push_back(row);
  }
  j["gvf_under_optimal"] = qf_rows;

  if (sufficiency_samples > 0) {
    // Hash bounds wide enough for any backed-up GVF value.
    esprl::Vector lo(mdp.feature_dim), hi(mdp.feature_dim);
    for (int i = 0; i < mdp.feature_dim; ++i) {
      const double fmax = mdp.F.col(i).maxCoeff();
      const double fmin = mdp.F.col(i).minCoeff();
      lo[i] = std::min(0.0, fmin / (1.0 - mdp.gamma)) - 1e-9;
      hi[i] = std::max(1e-9, fmax / (1.0 - mdp.gamma)) + 1e-9;
    }
    esprl::QuantizingHash hash = esprl::make_uniform_hash(lo, hi, bins);
    esprl::Rng rng(static_cast<uint64_t>(seed) + 1);
    esprl::SufficiencyReport rep =
        esprl::bellman_sufficiency_check(mdp, hash, sufficiency_samples, rng);
    Json sj;
    sj["models_checked"] = rep.models_checked;
    sj["pairs_checked"] = rep.pairs_checked;
    sj["violations"] = rep.violations.size();
    sj["passed"] = rep.passed();
    j["sufficiency"] = sj;
  }

  if (!out_path.empty())
    esprl::write_json_file(out_path, j);
  else
    std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_experiment(const std::string& config_path, const std::string& seeds_arg,
                   const std::string& out_dir, bool gvf_curves, int mc_states,
                   int mc_rollouts) {
  esprl::RunConfig base =
      esprl::run_config_from_json(esprl::read_json_file(config_path));
  esprl::ExperimentSpec spec;
  spec.env_id = base.env_id;
  spec.env_config = base.env_config;
  spec.trainer = base.trainer;
  spec.compute_gvf_curves = gvf_curves;
  spec.mc_states = mc_states;
  spec.mc_rollouts = mc_rollouts;

  for (size_t pos = 0; pos < seeds_arg.size();) {
    size_t comma = seeds_arg.find(',', pos);
    if (comma == std::string::npos) comma = seeds_arg.size();
    spec.seeds.push_back(std::stoull(seeds_arg.substr(pos, comma - pos)));
    pos = comma + 1;
  }
  if (spec.seeds.empty()) throw esprl::ConfigError("experiment needs seeds");

  const std::string dir = esprl::make_run_dir(
      spec.env_id, esprl::agent_name(spec.trainer.agent),
      spec.seeds.front(), out_dir);

  esprl::ExperimentResult result = esprl::run_experiment(spec);
  write_text_file(dir + "/curves.csv", esprl::curves_csv(result));
  esprl::write_json_file(dir + "/summary.json",
                         esprl::experiment_summary(result));
  for (const esprl::SeedOutcome& s : result.seeds) {
    write_text_file(dir + "/metrics_" + std::to_string(s.seed) + ".csv",
                    esprl::metrics_csv(s.run.metrics));
    esprl::save_model(dir + "/" +
                          esprl::checkpoint_filename(spec.env_id, s.seed,
                                                     s.run.checkpoints.back().episode),
                      s.run.checkpoints.back().model);
  }
  std::cout << esprl::experiment_summary(result).dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"embedded self-prediction RL: train, evaluate, explain"};
  app.require_subcommand(1);

  TrainArgs train_args;
  CLI::App* train = app.add_subcommand("train", "train an agent");
  train->add_option("--config", train_args.config_path, "run config JSON");
  train->add_option("--env", train_args.env_id, "environment id");
  train->add_option("--agent", train_args.agent, "esp, dqn-full or vanilla-dqn");
  train->add_option("--episodes", train_args.episodes, "training episodes");
  train->add_option("--seed", train_args.seed, "training seed");
  train->add_option("--out-dir", train_args.out_dir,
                    "run directory (default runs/<env>/<agent>/<seed>/<stamp>)");
  train->add_flag("--quiet", train_args.quiet, "suppress progress lines");

  std::string ckpt_path, state_arg, out_path;
  int episodes = 100;
  long seed = 0;
  long max_steps = 100000;
  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint greedily");
  eval->add_option("--checkpoint", ckpt_path, "model checkpoint")->required();
  eval->add_option("--episodes", episodes, "evaluation episodes");
  eval->add_option("--seed", seed, "evaluation seed");
  eval->add_option("--max-steps", max_steps, "per-episode step cap");

  int action_a = -1, action_b = -1, riemann = esprl::kDefaultRiemannSteps;
  bool text = false;
  CLI::App* explain = app.add_subcommand("explain",
                                         "contrastive explanation for a state");
  explain->add_option("--checkpoint", ckpt_path, "model checkpoint")->required();
  explain->add_option("--state", state_arg,
                      "state vector as inline JSON or a file path");
  explain->add_option("--action-a", action_a, "preferred action (default greedy)");
  explain->add_option("--action-b", action_b, "foil action (default runner-up)");
  explain->add_option("--riemann-steps", riemann, "integration steps");
  explain->add_option("--out", out_path, "write the JSON report here");
  explain->add_flag("--text", text, "also print a text rendering to stderr");

  std::string oracle_env = "gridworld";
  int width = 6, o_states = 10, o_actions = 2, bins = 64, suff = 0;
  double slip = 0.0;
  CLI::App* oracle = app.add_subcommand(
      "oracle", "exact value iteration and GVF tables for small MDPs");
  oracle->add_option("--env", oracle_env, "gridworld or random");
  oracle->add_option("--width", width, "corridor width (gridworld)");
  oracle->add_option("--slip", slip, "slip probability (gridworld)");
  oracle->add_option("--seed", seed, "generator seed (random)");
  oracle->add_option("--states", o_states, "state count (random)");
  oracle->add_option("--actions", o_actions, "action count (random)");
  oracle->add_option("--bins", bins, "hash bins per feature dimension");
  oracle->add_option("--sufficiency-samples", suff,
                     "random models for the sufficiency check (0 = skip)");
  oracle->add_option("--out", out_path, "write the JSON result here");

  std::string seeds_arg = "1,2,3";
  bool no_curves = false;
  int mc_states = 100, mc_rollouts = 64;
  CLI::App* experiment =
      app.add_subcommand("experiment", "multi-seed training with curves");
  experiment->add_option("--config", ckpt_path, "run config JSON")->required();
  experiment->add_option("--seeds", seeds_arg, "comma-separated seeds");
  experiment->add_option("--out-dir", out_path, "output directory");
  experiment->add_flag("--no-gvf-curves", no_curves,
                       "skip Monte Carlo GVF error curves");
  experiment->add_option("--mc-states", mc_states, "test states per checkpoint");
  experiment->add_option("--mc-rollouts", mc_rollouts, "rollouts per state-action");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (train->parsed()) return cmd_train(train_args);
    if (eval->parsed()) return cmd_eval(ckpt_path, episodes, seed, max_steps);
    if (explain->parsed())
      return cmd_explain(ckpt_path, state_arg, action_a, action_b, riemann,
                         out_path, text);
    if (oracle->parsed())
      return cmd_oracle(oracle_env, width, slip, seed, o_states, o_actions,
                        bins, suff, out_path);
    if (experiment->parsed())
      return cmd_experiment(ckpt_path, seeds_arg, out_path, !no_curves,
                            mc_states, mc_rollouts);
  } catch (const esprl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
