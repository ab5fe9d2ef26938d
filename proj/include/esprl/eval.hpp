#pragma once

#include <functional>
#include <string>
#include <vector>

#include "esprl/dqn.hpp"
#include "esprl/env.hpp"
#include "esprl/esp_model.hpp"

namespace esprl {

using Policy = std::function<int(const Env&, const Vector&, Rng&)>;

// Snapshot policy: captures the model by value and acts greedily under the
// state's action mask.
Policy greedy_policy(EspModel model);

struct PolicyEvalResult {
  double mean_return = 0.0;
  double std_return = 0.0;
  double win_rate = 0.0;  // fraction of episodes with positive total reward
  int episodes = 0;
};

PolicyEvalResult evaluate_policy(const Env& env, const Policy& policy,
                                 int episodes, Rng& rng, long max_steps);

// States visited by the policy, sampled uniformly from full trajectories
// (terminal states excluded since no action follows them).
std::vector<Vector> collect_test_states(const Env& env, const Policy& policy,
                                        int count, Rng& rng, long max_steps);

struct McGvfResult {
  Vector mean;
  Vector se;  // standard error per component, sample std / sqrt(rollouts)
};

// Monte Carlo estimate of the discounted feature accumulation: inject the
// state, take the given action once, then follow the policy to termination
// or the horizon.
McGvfResult monte_carlo_gvf(const Env& env, const Vector& state, int action,
                            const Policy& policy, double gamma, int rollouts,
                            long horizon, Rng& rng);

// Ground truth table over a state set: every unmasked action of every state.
struct GvfTestSet {
  std::vector<Vector> states;
  std::vector<std::vector<int>> actions;          // per state
  std::vector<std::vector<McGvfResult>> truth;    // [state][action position]
  double gamma = 0.99;
  int rollouts = 64;
  long horizon = 0;
};

GvfTestSet collect_gvf_truth(const Env& env, const std::vector<Vector>& states,
                             const Policy& policy, double gamma, int rollouts,
                             long horizon, Rng& rng);

// Mean squared error of the model's GVF predictions against the table,
// averaged over every (state, action, component).
double gvf_mse(const EspModel& model, const Env& env, const GvfTestSet& truth);

// Horizon where gamma^H drops below tail_mass (capped for gamma near 1).
long mc_horizon_for(double gamma, double tail_mass = 1e-6, long cap = 100000);

struct ExperimentSpec {
  std::string env_id;
  nlohmann::ordered_json env_config;
  TrainerConfig trainer;
  std::vector<uint64_t> seeds;

  bool compute_gvf_curves = true;
  int mc_states = 100;
  int mc_rollouts = 64;
};

struct SeedOutcome {
  uint64_t seed = 0;
  RunResult run;
  // GVF MSE per checkpoint, measured against fresh Monte Carlo truth under
  // that checkpoint's own greedy policy.
  std::vector<std::pair<long, double>> gvf_mse_curve;  // (episode, mse)
};

struct ExperimentResult {
  ExperimentSpec spec;
  std::vector<SeedOutcome> seeds;
};

ExperimentResult run_experiment(const ExperimentSpec& spec);

// Long-form curves: env_steps,metric,mean,std,n_seeds with rows grouped by
// eval point. env_steps is averaged across seeds at the same eval index.
std::string curves_csv(const ExperimentResult& result);

Json experiment_summary(const ExperimentResult& result);

// FNV-1a over the bytes; used to fingerprint metrics and reports.
uint64_t stable_hash(const std::string& bytes);

// Metrics fingerprint; the wall clock column is excluded so reruns of the
// same seed hash identically.
uint64_t metrics_hash(const std::vector<MetricsRow>& rows);

}  // namespace esprl
