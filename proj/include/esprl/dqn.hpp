#pragma once

#include <functional>
#include <string>
#include <vector>

#include "esprl/env.hpp"
#include "esprl/esp_model.hpp"
#include "esprl/optim.hpp"
#include "esprl/replay.hpp"

namespace esprl {

// esp: GVF regression plus combiner regression with blocked gradients.
// dqn_full: same architecture, trained end to end on the q target only.
// vanilla_dqn: one plain net from observation to action values.
enum class AgentKind { esp, dqn_full, vanilla_dqn };

const char* agent_name(AgentKind k);
AgentKind agent_from_name(const std::string& name);

struct TrainerConfig {
  AgentKind agent = AgentKind::esp;

  double beta = 0.99;   // reward discount
  double gamma = 0.99;  // feature discount

  std::vector<int> gvf_hidden = {64, 64};
  std::vector<int> combiner_hidden = {64, 64};

  OptKind gvf_optimizer = OptKind::adam;
  double gvf_lr = 1e-3;
  OptKind combiner_optimizer = OptKind::sgd;
  double combiner_lr = 1e-3;

  double eps_start = 1.0;
  double eps_final = 0.05;
  long eps_decay_steps = 200000;

  int batch_size = 128;
  size_t buffer_capacity = 100000;
  long learn_start = 1000;  // env steps collected before updates begin

  bool soft_target = true;   // Polyak mixing every update
  double tau = 5e-4;
  long target_sync_every = 6000;  // hard copy period in updates when not soft

  long train_episodes = 10000;
  long max_steps_per_episode = 100000;
  int eval_interval = 100;  // episodes between eval points
  int eval_episodes = 100;
  long eval_max_steps = 100000;

  // Scales rewards inside the q target only; reported returns are raw.
  double reward_scale = 1.0;

  uint64_t seed = 1;
};

struct Trainer {
  TrainerConfig cfg;
  EspModel live;
  EspModel target;
  OptimizerState gvf_opt;
  OptimizerState comb_opt;
  ReplayBuffer buffer;
  long env_steps = 0;
  long train_steps = 0;
  // Counts feature-vector reads by the update path. The esp agent regresses
  // on stored features; both baselines must leave this at zero.
  long feature_reads = 0;
};

Trainer make_trainer(const Env& env, const TrainerConfig& cfg);

double epsilon_at(const TrainerConfig& cfg, long env_step);

int select_action(const Trainer& trainer, const Env& env, const Vector& state,
                  Rng& rng);

// One target computation for a batch: the bootstrap action is chosen once
// per sample by the target network's q and reused for both targets. For
// terminal samples both targets collapse to the stored reward and features.
struct TargetBatch {
  Matrix gvf;             // feature_count x batch (esp only)
  Vector q;               // batch
  std::vector<int> next_action;  // -1 for terminal samples
};

TargetBatch compute_targets(Trainer& trainer,
                            const std::vector<const TransitionSample*>& batch);

struct StepLosses {
  double gvf_loss = 0.0;
  double q_loss = 0.0;
};

// Samples a batch, applies the agent-appropriate updates and target sync,
// and returns pre-update losses. Throws TrainingDiverged on non-finite
// losses or parameters.
StepLosses train_step(Trainer& trainer, Rng& rng);

void copy_live_to_target(Trainer& trainer);

class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(long step, const std::string& what)
      : std::runtime_error("training diverged at update " +
                           std::to_string(step) + ": " + what),
        step(step) {}
  long step;
};

struct MetricsRow {
  long episode = 0;
  long env_steps = 0;
  double eval_mean_return = 0.0;
  double eval_std = 0.0;
  double gvf_loss = 0.0;
  double q_loss = 0.0;
  double epsilon = 0.0;
  double wall_clock_s = 0.0;
};

std::string metrics_csv(const std::vector<MetricsRow>& rows);

struct CheckpointEntry {
  long episode = 0;
  EspModel model;
};

struct RunResult {
  std::vector<MetricsRow> metrics;
  std::vector<CheckpointEntry> checkpoints;  // episode 0, eval points, final
  long total_env_steps = 0;
};

// Called after each eval point; return false to stop training early.
using EvalCallback = std::function<bool(const MetricsRow&, const EspModel&)>;

RunResult run_training(const Env& env, const TrainerConfig& cfg,
                       const EvalCallback& on_eval = {});

}  // namespace esprl
