#include "esprl/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace esprl {

Policy greedy_policy(EspModel model) {
  return [model = std::move(model)](const Env& env, const Vector& state,
                                    Rng&) -> int {
    return greedy_action(model, env.observe(state), env.action_mask(state));
  };
}

PolicyEvalResult evaluate_policy(const Env& env, const Policy& policy,
                                 int episodes, Rng& rng, long max_steps) {
  if (episodes <= 0)
    throw std::invalid_argument("evaluate_policy: episodes must be positive");
  PolicyEvalResult res;
  res.episodes = episodes;
  std::vector<double> returns;
  returns.reserve(static_cast<size_t>(episodes));
  for (int e = 0; e < episodes; ++e) {
    Vector state = env.reset(rng);
    double total = 0.0;
    for (long step = 0; step < max_steps; ++step) {
      const int a = policy(env, state, rng);
      StepOutcome out = env.step(state, a, rng);
      total += out.reward;
      if (out.done) break;
      state = std::move(out.next_state);
    }
    returns.push_back(total);
    if (total > 0.0) res.win_rate += 1.0;
  }
  res.win_rate /= episodes;
  double sum = 0.0;
  for (double r : returns) sum += r;
  res.mean_return = sum / episodes;
  double sq = 0.0;
  for (double r : returns) sq += (r - res.mean_return) * (r - res.mean_return);
  res.std_return = episodes > 1 ? std::sqrt(sq / (episodes - 1)) : 0.0;
  return res;
}

std::vector<Vector> collect_test_states(const Env& env, const Policy& policy,
                                        int count, Rng& rng, long max_steps) {
  if (count <= 0)
    throw std::invalid_argument("collect_test_states: count must be positive");
  std::vector<Vector> pool;
  // Keep collecting full trajectories until the pool can cover the request.
  while (static_cast<int>(pool.size()) < count) {
    Vector state = env.reset(rng);
    for (long step = 0; step < max_steps; ++step) {
      pool.push_back(state);
      const int a = policy(env, state, rng);
      StepOutcome out = env.step(state, a, rng);
      if (out.done) break;
      state = std::move(out.next_state);
    }
  }
  std::vector<Vector> picked;
  picked.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i)
    picked.push_back(
        pool[static_cast<size_t>(rng.uniform_int(static_cast<int>(pool.size())))]);
  return picked;
}

McGvfResult monte_carlo_gvf(const Env& env, const Vector& state, int action,
                            const Policy& policy, double gamma, int rollouts,
                            long horizon, Rng& rng) {
  if (rollouts <= 0)
    throw std::invalid_argument("monte_carlo_gvf: rollouts must be positive");
  const int n = env.descriptor().schema.size();
  Matrix samples(n, rollouts);
  for (int k = 0; k < rollouts; ++k) {
    Vector acc = Vector::Zero(n);
    Vector s = state;
    int a = action;
    double disc = 1.0;
    for (long step = 0; step < horizon; ++step) {
      StepOutcome out = env.step(s, a, rng);
      acc += disc * out.features;
      disc *= gamma;
      if (out.done) break;
      s = std::move(out.next_state);
      a = policy(env, s, rng);
    }
    samples.col(k) = acc;
  }
  McGvfResult res;
  res.mean = samples.rowwise().mean();
  res.se = Vector::Zero(n);
  if (rollouts > 1) {
    for (int i = 0; i < n; ++i) {
      double sq = (samples.row(i).array() - res.mean[i]).square().sum();
      res.se[i] = std::sqrt(sq / (rollouts - 1)) / std::sqrt(double(rollouts));
    }
  }
  return res;
}

GvfTestSet collect_gvf_truth(const Env& env, const std::vector<Vector>& states,
                             const Policy& policy, double gamma, int rollouts,
                             long horizon, Rng& rng) {
  GvfTestSet set;
  set.states = states;
  set.gamma = gamma;
  set.rollouts = rollouts;
  set.horizon = horizon;
  for (const Vector& s : states) {
    std::vector<int> actions;
    std::vector<uint8_t> mask = env.action_mask(s);
    for (size_t a = 0; a < mask.size(); ++a)
      if (mask[a]) actions.push_back(static_cast<int>(a));
    std::vector<McGvfResult> row;
    row.reserve(actions.size());
    for (int a : actions)
      row.push_back(monte_carlo_gvf(env, s, a, policy, gamma, rollouts, horizon, rng));
    set.actions.push_back(std::move(actions));
    set.truth.push_back(std::move(row));
  }
  return set;
}

double gvf_mse(const EspModel& model, const Env& env, const GvfTestSet& truth) {
  double se = 0.0;
  long count = 0;
  for (size_t i = 0; i < truth.states.size(); ++i) {
    const Vector obs = env.observe(truth.states[i]);
    Matrix pred = gvf_predict_all(model, obs);
    for (size_t k = 0; k < truth.actions[i].size(); ++k) {
      Vector diff = pred.col(truth.actions[i][k]) - truth.truth[i][k].mean;
      se += diff.squaredNorm();
      count += diff.size();
    }
  }
  if (count == 0) throw std::runtime_error("gvf_mse: empty test set");
  return se / static_cast<double>(count);
}

long mc_horizon_for(double gamma, double tail_mass, long cap) {
  if (gamma <= 0.0) return 1;
  if (gamma >= 1.0) return cap;
  const long h =
      static_cast<long>(std::ceil(std::log(tail_mass) / std::log(gamma)));
  return std::min(cap, std::max<long>(1, h));
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  ExperimentResult result;
  result.spec = spec;
  auto env = make_env(spec.env_id, spec.env_config);
  for (uint64_t seed : spec.seeds) {
    TrainerConfig cfg = spec.trainer;
    cfg.seed = seed;
    SeedOutcome outcome;
    outcome.seed = seed;
    outcome.run = run_training(*env, cfg);
    if (spec.compute_gvf_curves && cfg.agent != AgentKind::vanilla_dqn) {
      const long horizon = mc_horizon_for(cfg.gamma, 1e-6, cfg.eval_max_steps);
      for (const CheckpointEntry& ckpt : outcome.run.checkpoints) {
        Rng mc_rng = Rng(seed).sub("mc_" + std::to_string(ckpt.episode));
        Policy pi = greedy_policy(ckpt.model);
        std::vector<Vector> states = collect_test_states(
            *env, pi, spec.mc_states, mc_rng, cfg.eval_max_steps);
        GvfTestSet truth = collect_gvf_truth(*env, states, pi, cfg.gamma,
                                             spec.mc_rollouts, horizon, mc_rng);
        outcome.gvf_mse_curve.emplace_back(ckpt.episode,
                                           gvf_mse(ckpt.model, *env, truth));
      }
    }
    result.seeds.push_back(std::move(outcome));
  }
  return result;
}

namespace {

struct CurvePoint {
  long env_steps_sum = 0;
  std::vector<double> values;
};

void append_metric_rows(std::string& out, const std::string& metric,
                        const std::vector<CurvePoint>& points) {
  char buf[160];
  for (const CurvePoint& p : points) {
    if (p.values.empty()) continue;
    double mean = 0.0;
    for (double v : p.values) mean += v;
    mean /= static_cast<double>(p.values.size());
    double sq = 0.0;
    for (double v : p.values) sq += (v - mean) * (v - mean);
    const double sd = p.values.size() > 1
                          ? std::sqrt(sq / double(p.values.size() - 1))
                          : 0.0;
    const long steps =
        p.env_steps_sum / static_cast<long>(p.values.size());
    std::snprintf(buf, sizeof(buf), "%ld,%s,%.10g,%.10g,%zu\n", steps,
                  metric.c_str(), mean, sd, p.values.size());
    out += buf;
  }
}

}  // namespace

std::string curves_csv(const ExperimentResult& result) {
  size_t max_rows = 0;
  for (const SeedOutcome& s : result.seeds)
    max_rows = std::max(max_rows, s.run.metrics.size());

  auto collect = [&](auto&& getter) {
    std::vector<CurvePoint> points(max_rows);
    for (const SeedOutcome& s : result.seeds)
      for (size_t i = 0; i < s.run.metrics.size(); ++i) {
        points[i].env_steps_sum += s.run.metrics[i].env_steps;
        points[i].values.push_back(getter(s.run.metrics[i]));
      }
    return points;
  };

  std::string out = "env_steps,metric,mean,std,n_seeds\n";
  append_metric_rows(out, "eval_mean_return",
                     collect([](const MetricsRow& r) { return r.eval_mean_return; }));
  append_metric_rows(out, "gvf_loss",
                     collect([](const MetricsRow& r) { return r.gvf_loss; }));
  append_metric_rows(out, "q_loss",
                     collect([](const MetricsRow& r) { return r.q_loss; }));

  // GVF MSE curve is indexed by checkpoint; align on checkpoint position.
  size_t max_ckpt = 0;
  for (const SeedOutcome& s : result.seeds)
    max_ckpt = std::max(max_ckpt, s.gvf_mse_curve.size());
  std::vector<CurvePoint> mse_points(max_ckpt);
  for (const SeedOutcome& s : result.seeds) {
    for (size_t i = 0; i < s.gvf_mse_curve.size(); ++i) {
      // Report the episode number as the x coordinate for checkpoints.
      mse_points[i].env_steps_sum += s.gvf_mse_curve[i].first;
      mse_points[i].values.push_back(s.gvf_mse_curve[i].second);
    }
  }
  append_metric_rows(out, "gvf_mse_vs_episode", mse_points);
  return out;
}

Json experiment_summary(const ExperimentResult& result) {
  Json seeds = Json::array();
  for (const SeedOutcome& s : result.seeds) {
    Json j;
    j["seed"] = s.seed;
    j["env_steps"] = s.run.total_env_steps;
    if (!s.run.metrics.empty()) {
      j["final_eval_mean_return"] = s.run.metrics.back().eval_mean_return;
      j["final_eval_std"] = s.run.metrics.back().eval_std;
    }
    if (!s.gvf_mse_curve.empty()) {
      j["first_gvf_mse"] = s.gvf_mse_curve.front().second;
      j["final_gvf_mse"] = s.gvf_mse_curve.back().second;
    }
    j["metrics_hash"] = metrics_hash(s.run.metrics);
    seeds.push_back(std::move(j));
  }
  Json out;
  out["env"] = result.spec.env_id;
  out["agent"] = agent_name(result.spec.trainer.agent);
  out["n_seeds"] = result.seeds.size();
  out["seeds"] = seeds;
  return out;
}

uint64_t stable_hash(const std::string& bytes) {
  uint64_t h = 14695981039346656037ull;
  for (char c : bytes) {
    h ^= static_cast<uint8_t>(c);
    h *= 1099511628211ull;
  }
  return h;
}

uint64_t metrics_hash(const std::vector<MetricsRow>& rows) {
  std::string flat;
  char buf[224];
  for (const MetricsRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%ld,%ld,%.10g,%.10g,%.10g,%.10g,%.10g\n",
                  r.episode, r.env_steps, r.eval_mean_return, r.eval_std,
                  r.gvf_loss, r.q_loss, r.epsilon);
    flat += buf;
  }
  return stable_hash(flat);
}

}  // namespace esprl
