#include "esprl/dqn.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "esprl/eval.hpp"

namespace esprl {

const char* agent_name(AgentKind k) {
  switch (k) {
    case AgentKind::esp: return "esp";
    case AgentKind::dqn_full: return "dqn-full";
    case AgentKind::vanilla_dqn: return "vanilla-dqn";
  }
  throw std::logic_error("agent_name: unknown agent");
}

AgentKind agent_from_name(const std::string& name) {
  if (name == "esp") return AgentKind::esp;
  if (name == "dqn-full") return AgentKind::dqn_full;
  if (name == "vanilla-dqn") return AgentKind::vanilla_dqn;
  throw std::invalid_argument("unknown agent name: " + name);
}

namespace {

// The vanilla baseline is a single net from observation to action values.
// It reuses the EspModel container with a one-entry schema and a frozen
// identity combiner so checkpoints, greedy action and eval code are shared.
EspModel make_vanilla_model(const EnvDescriptor& env,
                            const std::vector<int>& hidden, double beta,
                            double gamma, Rng& rng) {
  EnvDescriptor vd = env;
  vd.schema.features = {FeatureSpec{"q_head", FeatureKind::indicator,
                                    Act::linear, -1}};
  EspModel model;
  model.env = vd;
  model.beta = beta;
  model.gamma = gamma;

  std::vector<int> dims;
  dims.push_back(vd.obs_dim);
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(vd.action_count);
  Rng net_rng = rng.sub("init_gvf");
  model.gvf_net = make_mlp(dims, Act::relu,
                           uniform_activation(Act::linear, vd.action_count),
                           net_rng);

  Layer identity;
  identity.weight = Matrix::Ones(1, 1);
  identity.bias = Vector::Zero(1);
  identity.act = uniform_activation(Act::linear, 1);
  model.combiner_net.layers.push_back(identity);
  return model;
}

void soft_update_net(MlpParams& target, const MlpParams& live, double tau) {
  for (size_t l = 0; l < target.layers.size(); ++l) {
    target.layers[l].weight =
        (1.0 - tau) * target.layers[l].weight + tau * live.layers[l].weight;
    target.layers[l].bias =
        (1.0 - tau) * target.layers[l].bias + tau * live.layers[l].bias;
  }
}

std::string nonfinite_layer_report(const char* net, const MlpParams& mlp,
                                   const MlpGrads* grads) {
  for (size_t l = 0; l < mlp.layers.size(); ++l) {
    if (!mlp.layers[l].weight.allFinite() || !mlp.layers[l].bias.allFinite())
      return std::string(net) + " layer " + std::to_string(l) +
             " parameters non-finite";
    if (grads && (!grads->weight[l].allFinite() || !grads->bias[l].allFinite()))
      return std::string(net) + " layer " + std::to_string(l) +
             " gradient non-finite";
  }
  return std::string(net) + " loss non-finite";
}

}  // namespace

Trainer make_trainer(const Env& env, const TrainerConfig& cfg) {
  if (cfg.batch_size <= 0)
    throw std::invalid_argument("TrainerConfig: batch_size must be positive");
  Rng root(cfg.seed);
  Rng init = root.sub("init");

  Trainer t{cfg,
            EspModel{},
            EspModel{},
            cfg.gvf_optimizer == OptKind::adam ? make_adam(cfg.gvf_lr)
                                               : make_sgd(cfg.gvf_lr),
            cfg.combiner_optimizer == OptKind::adam ? make_adam(cfg.combiner_lr)
                                                    : make_sgd(cfg.combiner_lr),
            ReplayBuffer(cfg.buffer_capacity)};
  if (cfg.agent == AgentKind::vanilla_dqn)
    t.live = make_vanilla_model(env.descriptor(), cfg.combiner_hidden, cfg.beta,
                                cfg.gamma, init);
  else
    t.live = make_esp_model(env.descriptor(), cfg.gvf_hidden,
                            cfg.combiner_hidden, cfg.beta, cfg.gamma, init);
  t.target = t.live;
  return t;
}

double epsilon_at(const TrainerConfig& cfg, long env_step) {
  if (cfg.eps_decay_steps <= 0) return cfg.eps_final;
  double frac = std::min(1.0, static_cast<double>(env_step) /
                                  static_cast<double>(cfg.eps_decay_steps));
  return cfg.eps_start + frac * (cfg.eps_final - cfg.eps_start);
}

int select_action(const Trainer& trainer, const Env& env, const Vector& state,
                  Rng& rng) {
  const double eps = epsilon_at(trainer.cfg, trainer.env_steps);
  std::vector<uint8_t> mask = env.action_mask(state);
  if (rng.uniform() < eps) {
    std::vector<int> legal;
    for (size_t a = 0; a < mask.size(); ++a)
      if (mask[a]) legal.push_back(static_cast<int>(a));
    if (legal.empty())
      throw std::runtime_error("select_action: every action is masked");
    return legal[static_cast<size_t>(
        rng.uniform_int(static_cast<int>(legal.size())))];
  }
  return greedy_action(trainer.live, env.observe(state), mask);
}

TargetBatch compute_targets(Trainer& trainer,
                            const std::vector<const TransitionSample*>& batch) {
  const int B = static_cast<int>(batch.size());
  const int n = trainer.live.feature_count();
  const int A = trainer.live.action_count();
  const bool esp = trainer.cfg.agent == AgentKind::esp;

  TargetBatch tb;
  tb.q.resize(B);
  tb.next_action.assign(static_cast<size_t>(B), -1);
  if (esp) tb.gvf.resize(n, B);

  // Batch every non-terminal next observation through the target nets once.
  std::vector<int> live_idx;
  for (int i = 0; i < B; ++i)
    if (!batch[static_cast<size_t>(i)]->done) live_idx.push_back(i);

  Matrix gvf_next;       // (n * A) x k
  Matrix q_next;         // A x k
  if (!live_idx.empty()) {
    Matrix next_obs(trainer.live.obs_dim(), static_cast<int>(live_idx.size()));
    for (size_t j = 0; j < live_idx.size(); ++j)
      next_obs.col(static_cast<int>(j)) =
          batch[static_cast<size_t>(live_idx[j])]->next_obs;
    gvf_next = mlp_forward_batch(trainer.target.gvf_net, next_obs);

    Matrix comb_in(n, static_cast<int>(live_idx.size()) * A);
    for (int j = 0; j < static_cast<int>(live_idx.size()); ++j)
      for (int a = 0; a < A; ++a)
        comb_in.col(j * A + a) = gvf_next.col(j).segment(a * n, n);
    Matrix q_flat = mlp_forward_batch(trainer.target.combiner_net, comb_in);
    q_next.resize(A, static_cast<int>(live_idx.size()));
    for (int j = 0; j < static_cast<int>(live_idx.size()); ++j)
      for (int a = 0; a < A; ++a) q_next(a, j) = q_flat(0, j * A + a);
  }

  int j = 0;
  for (int i = 0; i < B; ++i) {
    const TransitionSample& s = *batch[static_cast<size_t>(i)];
    const double r = s.reward * trainer.cfg.reward_scale;
    if (s.done) {
      tb.q[i] = r;
      if (esp) {
        tb.gvf.col(i) = s.features;
        trainer.feature_reads += 1;
      }
      continue;
    }
    if (static_cast<int>(s.next_mask.size()) != A)
      throw std::runtime_error("compute_targets: stored next_mask size mismatch");
    int best = -1;
    for (int a = 0; a < A; ++a) {
      if (!s.next_mask[static_cast<size_t>(a)]) continue;
      if (best < 0 || q_next(a, j) > q_next(best, j)) best = a;
    }
    if (best < 0)
      throw std::runtime_error("compute_targets: every next action is masked");
    tb.next_action[static_cast<size_t>(i)] = best;
    tb.q[i] = r + trainer.cfg.beta * q_next(best, j);
    if (esp) {
      tb.gvf.col(i) = s.features + trainer.cfg.gamma *
                                       gvf_next.col(j).segment(best * n, n);
      trainer.feature_reads += 1;
    }
    ++j;
  }
  return tb;
}

StepLosses train_step(Trainer& t, Rng& rng) {
  const TrainerConfig& cfg = t.cfg;
  const int B = cfg.batch_size;
  const int n = t.live.feature_count();
  const int A = t.live.action_count();

  auto batch = t.buffer.sample(static_cast<size_t>(B), rng);
  TargetBatch tb = compute_targets(t, batch);

  Matrix obs(t.live.obs_dim(), B);
  for (int i = 0; i < B; ++i) obs.col(i) = batch[static_cast<size_t>(i)]->obs;

  auto guarded_step = [&](OptimizerState& opt, MlpParams& mlp,
                          const MlpGrads& grads, const char* net) {
    try {
      optimizer_step(opt, mlp, grads);
    } catch (const std::runtime_error& e) {
      throw TrainingDiverged(t.train_steps, e.what());
    }
    for (size_t l = 0; l < mlp.layers.size(); ++l)
      if (!mlp.layers[l].weight.allFinite() || !mlp.layers[l].bias.allFinite())
        throw TrainingDiverged(t.train_steps,
                               std::string(net) + " layer " +
                                   std::to_string(l) +
                                   " parameters non-finite after update");
  };

  StepLosses losses;
  switch (cfg.agent) {
    case AgentKind::esp: {
      // GVF regression on the acted slice, mean over batch and components.
      BatchTrace tr = mlp_forward_traced_batch(t.live.gvf_net, obs);
      const Matrix& out = tr.post.back();
      Matrix dout = Matrix::Zero(n * A, B);
      double se = 0.0;
      for (int i = 0; i < B; ++i) {
        const int a = batch[static_cast<size_t>(i)]->action;
        Vector diff = out.col(i).segment(a * n, n) - tb.gvf.col(i);
        se += diff.squaredNorm();
        dout.col(i).segment(a * n, n) = (2.0 / (B * n)) * diff;
      }
      losses.gvf_loss = se / (B * n);
      if (!std::isfinite(losses.gvf_loss))
        throw TrainingDiverged(
            t.train_steps,
            nonfinite_layer_report("gvf_net", t.live.gvf_net, nullptr));
      MlpGrads g = zero_grads(t.live.gvf_net);
      mlp_backward_batch(t.live.gvf_net, tr, dout, &g);
      guarded_step(t.gvf_opt, t.live.gvf_net, g, "gvf_net");

      // Combiner regression on the post-update GVF outputs; treating them
      // as constants is what blocks gradients from reaching the GVF net.
      Matrix gvf_now = mlp_forward_batch(t.live.gvf_net, obs);
      Matrix comb_in(n, B);
      for (int i = 0; i < B; ++i)
        comb_in.col(i) = gvf_now.col(i).segment(
            batch[static_cast<size_t>(i)]->action * n, n);
      BatchTrace ctr = mlp_forward_traced_batch(t.live.combiner_net, comb_in);
      Matrix cdout(1, B);
      double qse = 0.0;
      for (int i = 0; i < B; ++i) {
        const double d = ctr.post.back()(0, i) - tb.q[i];
        qse += d * d;
        cdout(0, i) = 2.0 * d / B;
      }
      losses.q_loss = qse / B;
      if (!std::isfinite(losses.q_loss))
        throw TrainingDiverged(t.train_steps,
                               nonfinite_layer_report(
                                   "combiner_net", t.live.combiner_net, nullptr));
      MlpGrads cg = zero_grads(t.live.combiner_net);
      mlp_backward_batch(t.live.combiner_net, ctr, cdout, &cg);
      guarded_step(t.comb_opt, t.live.combiner_net, cg, "combiner_net");
      break;
    }
    case AgentKind::dqn_full: {
      // Same architecture, but the only loss is the q regression and it
      // backpropagates through the combiner into the GVF net.
      BatchTrace tr = mlp_forward_traced_batch(t.live.gvf_net, obs);
      Matrix comb_in(n, B);
      for (int i = 0; i < B; ++i)
        comb_in.col(i) = tr.post.back().col(i).segment(
            batch[static_cast<size_t>(i)]->action * n, n);
      BatchTrace ctr = mlp_forward_traced_batch(t.live.combiner_net, comb_in);
      Matrix cdout(1, B);
      double qse = 0.0;
      for (int i = 0; i < B; ++i) {
        const double d = ctr.post.back()(0, i) - tb.q[i];
        qse += d * d;
        cdout(0, i) = 2.0 * d / B;
      }
      losses.q_loss = qse / B;
      if (!std::isfinite(losses.q_loss))
        throw TrainingDiverged(t.train_steps,
                               nonfinite_layer_report(
                                   "combiner_net", t.live.combiner_net, nullptr));
      MlpGrads cg = zero_grads(t.live.combiner_net);
      Matrix din = mlp_backward_batch(t.live.combiner_net, ctr, cdout, &cg);
      Matrix dout = Matrix::Zero(n * A, B);
      for (int i = 0; i < B; ++i)
        dout.col(i).segment(batch[static_cast<size_t>(i)]->action * n, n) =
            din.col(i);
      MlpGrads g = zero_grads(t.live.gvf_net);
      mlp_backward_batch(t.live.gvf_net, tr, dout, &g);
      guarded_step(t.gvf_opt, t.live.gvf_net, g, "gvf_net");
      guarded_step(t.comb_opt, t.live.combiner_net, cg, "combiner_net");
      break;
    }
    case AgentKind::vanilla_dqn: {
      BatchTrace tr = mlp_forward_traced_batch(t.live.gvf_net, obs);
      Matrix dout = Matrix::Zero(A, B);
      double qse = 0.0;
      for (int i = 0; i < B; ++i) {
        const int a = batch[static_cast<size_t>(i)]->action;
        const double d = tr.post.back()(a, i) - tb.q[i];
        qse += d * d;
        dout(a, i) = 2.0 * d / B;
      }
      losses.q_loss = qse / B;
      if (!std::isfinite(losses.q_loss))
        throw TrainingDiverged(
            t.train_steps,
            nonfinite_layer_report("gvf_net", t.live.gvf_net, nullptr));
      MlpGrads g = zero_grads(t.live.gvf_net);
      mlp_backward_batch(t.live.gvf_net, tr, dout, &g);
      guarded_step(t.gvf_opt, t.live.gvf_net, g, "gvf_net");
      break;
    }
  }

  t.train_steps += 1;
  if (cfg.soft_target) {
    soft_update_net(t.target.gvf_net, t.live.gvf_net, cfg.tau);
    soft_update_net(t.target.combiner_net, t.live.combiner_net, cfg.tau);
  } else if (cfg.target_sync_every > 0 &&
             t.train_steps % cfg.target_sync_every == 0) {
    copy_live_to_target(t);
  }
  return losses;
}

void copy_live_to_target(Trainer& trainer) {
  trainer.target.gvf_net = trainer.live.gvf_net;
  trainer.target.combiner_net = trainer.live.combiner_net;
}

std::string metrics_csv(const std::vector<MetricsRow>& rows) {
  std::string out =
      "episode,env_steps,eval_mean_return,eval_std,gvf_loss,q_loss,epsilon,"
      "wall_clock_s\n";
  char buf[256];
  for (const MetricsRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%ld,%ld,%.10g,%.10g,%.10g,%.10g,%.10g,%.3f\n",
                  r.episode, r.env_steps, r.eval_mean_return, r.eval_std,
                  r.gvf_loss, r.q_loss, r.epsilon, r.wall_clock_s);
    out += buf;
  }
  return out;
}

RunResult run_training(const Env& env, const TrainerConfig& cfg,
                       const EvalCallback& on_eval) {
  Trainer t = make_trainer(env, cfg);
  Rng root(cfg.seed);
  Rng env_rng = root.sub("env");
  Rng explore_rng = root.sub("explore");
  Rng replay_rng = root.sub("replay");

  RunResult res;
  res.checkpoints.push_back(CheckpointEntry{0, t.live});

  const size_t warmup = std::max<size_t>(static_cast<size_t>(cfg.batch_size),
                                         static_cast<size_t>(cfg.learn_start));
  double gvf_acc = 0.0, q_acc = 0.0;
  long acc_n = 0;
  const auto t0 = std::chrono::steady_clock::now();
  bool stop = false;

  for (long ep = 1; ep <= cfg.train_episodes && !stop; ++ep) {
    Vector state = env.reset(env_rng);
    for (long step = 0; step < cfg.max_steps_per_episode; ++step) {
      const int a = select_action(t, env, state, explore_rng);
      StepOutcome out = env.step(state, a, env_rng);

      TransitionSample sample;
      sample.obs = env.observe(state);
      sample.action = a;
      sample.reward = out.reward;
      sample.features = out.features;
      sample.next_obs = env.observe(out.next_state);
      sample.done = out.done;
      if (!out.done) sample.next_mask = env.action_mask(out.next_state);
      t.buffer.push(std::move(sample));
      t.env_steps += 1;

      if (t.buffer.size() >= warmup) {
        StepLosses losses = train_step(t, replay_rng);
        gvf_acc += losses.gvf_loss;
        q_acc += losses.q_loss;
        acc_n += 1;
      }

      if (out.done) break;
      state = std::move(out.next_state);
    }

    if (ep % cfg.eval_interval == 0 || ep == cfg.train_episodes) {
      Rng eval_rng = root.sub("eval_" + std::to_string(ep));
      PolicyEvalResult pe =
          evaluate_policy(env, greedy_policy(t.live), cfg.eval_episodes,
                          eval_rng, cfg.eval_max_steps);
      MetricsRow row;
      row.episode = ep;
      row.env_steps = t.env_steps;
      row.eval_mean_return = pe.mean_return;
      row.eval_std = pe.std_return;
      row.gvf_loss = acc_n > 0 ? gvf_acc / acc_n : 0.0;
      row.q_loss = acc_n > 0 ? q_acc / acc_n : 0.0;
      row.epsilon = epsilon_at(cfg, t.env_steps);
      row.wall_clock_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
              .count();
      gvf_acc = q_acc = 0.0;
      acc_n = 0;
      res.metrics.push_back(row);
      res.checkpoints.push_back(CheckpointEntry{ep, t.live});
      if (on_eval && !on_eval(row, t.live)) stop = true;
    }
  }
  res.total_env_steps = t.env_steps;
  return res;
}

}  // namespace esprl
