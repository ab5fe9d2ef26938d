#include "esprl/tabular.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace esprl {

void validate_mdp(const ExplicitMdp& mdp, double tol) {
  if (mdp.num_states <= 0 || mdp.num_actions <= 0)
    throw std::invalid_argument("ExplicitMdp: empty state or action space");
  if (static_cast<int>(mdp.T.size()) != mdp.num_actions)
    throw std::invalid_argument("ExplicitMdp: T must have one matrix per action");
  if (mdp.R.rows() != mdp.num_states || mdp.R.cols() != mdp.num_actions)
    throw std::invalid_argument("ExplicitMdp: R shape mismatch");
  if (mdp.F.rows() != mdp.num_states * mdp.num_actions ||
      mdp.F.cols() != mdp.feature_dim)
    throw std::invalid_argument("ExplicitMdp: F shape mismatch");
  if (static_cast<int>(mdp.terminal.size()) != mdp.num_states)
    throw std::invalid_argument("ExplicitMdp: terminal flags size mismatch");
  for (int a = 0; a < mdp.num_actions; ++a) {
    const Matrix& t = mdp.T[static_cast<size_t>(a)];
    if (t.rows() != mdp.num_states || t.cols() != mdp.num_states)
      throw std::invalid_argument("ExplicitMdp: T shape mismatch for action " +
                                  std::to_string(a));
    for (int s = 0; s < mdp.num_states; ++s) {
      if (t.row(s).minCoeff() < -tol)
        throw std::invalid_argument("ExplicitMdp: negative probability at (" +
                                    std::to_string(s) + ", " + std::to_string(a) + ")");
      if (std::abs(t.row(s).sum() - 1.0) > tol)
        throw std::invalid_argument("ExplicitMdp: row (" + std::to_string(s) +
                                    ", " + std::to_string(a) + ") does not sum to 1");
      if (mdp.terminal[static_cast<size_t>(s)]) {
        if (std::abs(t(s, s) - 1.0) > tol ||
            std::abs(mdp.R(s, a)) > tol ||
            mdp.F.row(mdp.sa_index(s, a)).cwiseAbs().maxCoeff() > tol)
          throw std::invalid_argument("ExplicitMdp: terminal state " +
                                      std::to_string(s) + " is not absorbing");
      }
    }
  }
}

Matrix bellman_backup(const ExplicitMdp& mdp, const Matrix& q) {
  if (q.rows() != mdp.num_states || q.cols() != mdp.num_actions)
    throw std::invalid_argument("bellman_backup: Q shape mismatch");
  Vector vmax = q.rowwise().maxCoeff();
  Matrix out(mdp.num_states, mdp.num_actions);
  for (int a = 0; a < mdp.num_actions; ++a)
    out.col(a) = mdp.R.col(a) + mdp.beta * (mdp.T[static_cast<size_t>(a)] * vmax);
  return out;
}

ValueIterationResult value_iteration(const ExplicitMdp& mdp, double tol,
                                     int max_iterations) {
  ValueIterationResult res;
  res.q = Matrix::Zero(mdp.num_states, mdp.num_actions);
  for (res.iterations = 0; res.iterations < max_iterations; ++res.iterations) {
    Matrix next = bellman_backup(mdp, res.q);
    const double delta = (next - res.q).cwiseAbs().maxCoeff();
    res.q = std::move(next);
    if (delta < tol) break;
  }
  res.policy.resize(static_cast<size_t>(mdp.num_states));
  for (int s = 0; s < mdp.num_states; ++s) {
    int best = 0;
    for (int a = 1; a < mdp.num_actions; ++a)
      if (res.q(s, a) > res.q(s, best)) best = a;
    res.policy[static_cast<size_t>(s)] = best;
  }
  return res;
}

Matrix gvf_backup(const ExplicitMdp& mdp, const Matrix& qf,
                  const std::vector<int>& policy) {
  if (qf.rows() != mdp.num_states * mdp.num_actions ||
      qf.cols() != mdp.feature_dim)
    throw std::invalid_argument("gvf_backup: Q_F shape mismatch");
  if (static_cast<int>(policy.size()) != mdp.num_states)
    throw std::invalid_argument("gvf_backup: policy size mismatch");

  // Rows of Q_F at (s', policy(s')) as an S x n matrix.
  Matrix v(mdp.num_states, mdp.feature_dim);
  for (int s = 0; s < mdp.num_states; ++s)
    v.row(s) = qf.row(mdp.sa_index(s, policy[static_cast<size_t>(s)]));

  Matrix out(qf.rows(), qf.cols());
  for (int a = 0; a < mdp.num_actions; ++a) {
    Matrix mixed = mdp.T[static_cast<size_t>(a)] * v;  // S x n
    for (int s = 0; s < mdp.num_states; ++s)
      out.row(mdp.sa_index(s, a)) =
          mdp.F.row(mdp.sa_index(s, a)) + mdp.gamma * mixed.row(s);
  }
  return out;
}

Matrix gvf_policy_eval(const ExplicitMdp& mdp, const std::vector<int>& policy,
                       double tol, int max_iterations) {
  Matrix qf = Matrix::Zero(mdp.num_states * mdp.num_actions, mdp.feature_dim);
  for (int it = 0; it < max_iterations; ++it) {
    Matrix next = gvf_backup(mdp, qf, policy);
    const double delta = (next - qf).cwiseAbs().maxCoeff();
    qf = std::move(next);
    if (delta < tol) return qf;
  }
  throw std::runtime_error("gvf_policy_eval: no convergence within iteration cap");
}

double q_action_gap(const ExplicitMdp& mdp, const Matrix& q) {
  double gap = std::numeric_limits<double>::infinity();
  for (int s = 0; s < mdp.num_states; ++s) {
    if (mdp.terminal[static_cast<size_t>(s)] || mdp.num_actions < 2) continue;
    int best = 0;
    for (int a = 1; a < mdp.num_actions; ++a)
      if (q(s, a) > q(s, best)) best = a;
    double runner_up = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < mdp.num_actions; ++a)
      if (a != best) runner_up = std::max(runner_up, q(s, a));
    gap = std::min(gap, q(s, best) - runner_up);
  }
  return gap;
}

size_t CellKeyHash::operator()(const CellKey& key) const {
  uint64_t h = 1469598103934665603ull;
  for (int64_t v : key) {
    uint64_t u = static_cast<uint64_t>(v);
    for (int b = 0; b < 8; ++b) {
      h ^= (u >> (8 * b)) & 0xffu;
      h *= 1099511628211ull;
    }
  }
  return static_cast<size_t>(h);
}

CellKey QuantizingHash::key(const Vector& gvf) const {
  if (gvf.size() != lo.size())
    throw std::invalid_argument("QuantizingHash: vector size mismatch");
  CellKey key(static_cast<size_t>(gvf.size()));
  for (Eigen::Index i = 0; i < gvf.size(); ++i) {
    double g = gvf[i];
    if (g < lo[i] || g > hi[i]) {
      if (clamp_count == 0)
        std::fprintf(stderr,
                     "QuantizingHash: value %g outside [%g, %g] in component "
                     "%ld, clamping\n",
                     g, lo[i], hi[i], static_cast<long>(i));
      clamp_count += 1;
      g = std::min(std::max(g, lo[i]), hi[i]);
    }
    int64_t cell = static_cast<int64_t>(std::floor((g - lo[i]) / delta[i]));
    // Keep the top edge inside the last bin.
    const int64_t last =
        static_cast<int64_t>(std::floor((hi[i] - lo[i]) / delta[i]));
    key[static_cast<size_t>(i)] = std::min(cell, last);
  }
  return key;
}

QuantizingHash make_uniform_hash(const Vector& lo, const Vector& hi,
                                 int bins_per_dim) {
  if (lo.size() != hi.size())
    throw std::invalid_argument("make_uniform_hash: bound size mismatch");
  if (bins_per_dim <= 0)
    throw std::invalid_argument("make_uniform_hash: bins must be positive");
  QuantizingHash h;
  h.lo = lo;
  h.hi = hi;
  h.delta.resize(lo.size());
  for (Eigen::Index i = 0; i < lo.size(); ++i) {
    if (!(hi[i] > lo[i]))
      throw std::invalid_argument("make_uniform_hash: hi must exceed lo");
    h.delta[i] = (hi[i] - lo[i]) / bins_per_dim;
  }
  return h;
}

TabularEsp make_tabular_esp(int num_states, int num_actions, int feature_dim,
                            TabularEspConfig cfg) {
  if (cfg.hash.lo.size() != feature_dim)
    throw std::invalid_argument("make_tabular_esp: hash dimension mismatch");
  TabularEsp esp;
  esp.cfg = std::move(cfg);
  esp.num_states = num_states;
  esp.num_actions = num_actions;
  esp.feature_dim = feature_dim;
  esp.qf = Matrix::Zero(num_states * num_actions, feature_dim);
  esp.qf_target = esp.qf;
  esp.qf_visits.assign(static_cast<size_t>(num_states * num_actions), 0);
  return esp;
}

namespace {

double cell_value(const CellMap& map, const CellKey& key) {
  auto it = map.find(key);
  return it == map.end() ? 0.0 : it->second;
}

}  // namespace

double tabular_q(const TabularEsp& esp, int s, int a) {
  return cell_value(esp.combiner, esp.cfg.hash.key(esp.qf.row(esp.sa_index(s, a))));
}

double tabular_q_target(const TabularEsp& esp, int s, int a) {
  return cell_value(esp.combiner_target,
                    esp.cfg.hash.key(esp.qf_target.row(esp.sa_index(s, a))));
}

int tabular_greedy(const TabularEsp& esp, int s) {
  int best = 0;
  double best_q = tabular_q(esp, s, 0);
  for (int a = 1; a < esp.num_actions; ++a) {
    const double q = tabular_q(esp, s, a);
    if (q > best_q) {
      best = a;
      best_q = q;
    }
  }
  return best;
}

void esp_table_step(TabularEsp& esp, int s, int a, double r, const Vector& f,
                    int next_s, bool done) {
  if (s < 0 || s >= esp.num_states || next_s < 0 || next_s >= esp.num_states)
    throw std::invalid_argument("esp_table_step: state out of range");
  if (a < 0 || a >= esp.num_actions)
    throw std::invalid_argument("esp_table_step: action out of range");
  if (f.size() != esp.feature_dim)
    throw std::invalid_argument("esp_table_step: feature size mismatch");

  if (esp.steps % esp.cfg.sync_every == 0) {
    esp.qf_target = esp.qf;
    esp.combiner_target = esp.combiner;
  }
  esp.steps += 1;

  // Bootstrap action from the target tables, lowest index on ties.
  int next_a = 0;
  if (!done) {
    double best = tabular_q_target(esp, next_s, 0);
    for (int b = 1; b < esp.num_actions; ++b) {
      const double q = tabular_q_target(esp, next_s, b);
      if (q > best) {
        next_a = b;
        best = q;
      }
    }
  }

  const int sa = esp.sa_index(s, a);
  Vector f_target = f;
  if (!done)
    f_target += esp.cfg.gamma * esp.qf_target.row(esp.sa_index(next_s, next_a)).transpose();
  const double alpha_f =
      esp.cfg.alpha_c / (esp.cfg.alpha_c + static_cast<double>(esp.qf_visits[static_cast<size_t>(sa)]));
  esp.qf.row(sa) = (1.0 - alpha_f) * esp.qf.row(sa) + alpha_f * f_target.transpose();
  esp.qf_visits[static_cast<size_t>(sa)] += 1;

  double q_target = r;
  if (!done) q_target += esp.cfg.beta * tabular_q_target(esp, next_s, next_a);

  // The combiner cell is addressed by the GVF row as it stands after its
  // own update.
  const CellKey key = esp.cfg.hash.key(esp.qf.row(sa));
  long& visits = esp.cell_visits[key];
  const double alpha_q = esp.cfg.alpha_c / (esp.cfg.alpha_c + static_cast<double>(visits));
  double& cell = esp.combiner[key];
  cell = (1.0 - alpha_q) * cell + alpha_q * q_target;
  visits += 1;
}

void run_tabular_training(TabularEsp& esp, const ExplicitMdp& mdp, long steps,
                          long restart_every, double eps, Rng& rng) {
  if (esp.num_states != mdp.num_states || esp.num_actions != mdp.num_actions ||
      esp.feature_dim != mdp.feature_dim)
    throw std::invalid_argument("run_tabular_training: learner/MDP shape mismatch");

  int s = rng.uniform_int(mdp.num_states);
  for (long t = 0; t < steps; ++t) {
    if (restart_every > 0 && t % restart_every == 0) {
      do {
        s = rng.uniform_int(mdp.num_states);
      } while (mdp.terminal[static_cast<size_t>(s)]);
    }
    const int a = rng.uniform() < eps ? rng.uniform_int(mdp.num_actions)
                                      : tabular_greedy(esp, s);
    // Sample the successor from the transition row.
    const double u = rng.uniform();
    double acc = 0.0;
    int next_s = mdp.num_states - 1;
    for (int x = 0; x < mdp.num_states; ++x) {
      acc += mdp.T[static_cast<size_t>(a)](s, x);
      if (u < acc) {
        next_s = x;
        break;
      }
    }
    const bool done = mdp.terminal[static_cast<size_t>(next_s)] != 0;
    esp_table_step(esp, s, a, mdp.R(s, a),
                   mdp.F.row(mdp.sa_index(s, a)).transpose(), next_s, done);
    if (done) {
      do {
        s = rng.uniform_int(mdp.num_states);
      } while (mdp.terminal[static_cast<size_t>(s)]);
    } else {
      s = next_s;
    }
  }
}

SufficiencyReport bellman_sufficiency_check(const ExplicitMdp& mdp,
                                            const QuantizingHash& hash,
                                            int model_samples, Rng& rng,
                                            double tol) {
  if (hash.lo.size() != mdp.feature_dim)
    throw std::invalid_argument("bellman_sufficiency_check: hash dimension mismatch");
  SufficiencyReport report;
  report.models_checked = model_samples;

  const int S = mdp.num_states;
  const int A = mdp.num_actions;
  const double r_lo = mdp.R.minCoeff();
  const double r_hi = mdp.R.maxCoeff();
  const double q_lo = std::min(0.0, r_lo) / (1.0 - mdp.beta);
  const double q_hi = std::max(0.0, r_hi) / (1.0 - mdp.beta);

  for (int m = 0; m < model_samples; ++m) {
    // Random GVF table inside the hash bounds, random combiner value per
    // touched cell.
    Matrix qf(S * A, mdp.feature_dim);
    for (int i = 0; i < qf.rows(); ++i)
      for (int j = 0; j < qf.cols(); ++j)
        qf(i, j) = rng.uniform(hash.lo[j], hash.hi[j]);

    CellMap combiner;
    auto q_hat = [&](int s, int a) {
      const CellKey key = hash.key(qf.row(s * A + a));
      auto it = combiner.find(key);
      if (it == combiner.end())
        it = combiner.emplace(key, rng.uniform(q_lo, q_hi)).first;
      return it->second;
    };

    std::vector<int> policy(static_cast<size_t>(S), 0);
    for (int s = 0; s < S; ++s) {
      int best = 0;
      double best_q = q_hat(s, 0);
      for (int a = 1; a < A; ++a) {
        const double q = q_hat(s, a);
        if (q > best_q) {
          best = a;
          best_q = q;
        }
      }
      policy[static_cast<size_t>(s)] = best;
    }

    const Matrix qf_plus = gvf_backup(mdp, qf, policy);

    // Exact optimality backup of the model's q values.
    Matrix q_model(S, A);
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) q_model(s, a) = q_hat(s, a);
    const Matrix backup = bellman_backup(mdp, q_model);

    // Group state-actions by the hash cell of the backed-up GVF vector.
    std::unordered_map<CellKey, std::vector<int>, CellKeyHash> buckets;
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a)
        buckets[hash.key(qf_plus.row(s * A + a))].push_back(s * A + a);

    for (const auto& [cell, members] : buckets) {
      for (size_t i = 0; i < members.size(); ++i)
        for (size_t j = i + 1; j < members.size(); ++j) {
          report.pairs_checked += 1;
          const int sa1 = members[i], sa2 = members[j];
          const double b1 = backup(sa1 / A, sa1 % A);
          const double b2 = backup(sa2 / A, sa2 % A);
          if (std::abs(b1 - b2) > tol)
            report.violations.push_back(SufficiencyViolation{
                m, sa1 / A, sa1 % A, sa2 / A, sa2 % A, b1, b2, cell});
        }
    }
  }
  return report;
}

ExplicitMdp make_random_mdp(const RandomMdpSpec& spec, Rng& rng) {
  if (spec.num_states < 2 || spec.num_actions < 1)
    throw std::invalid_argument("make_random_mdp: degenerate sizes");
  const int S = spec.num_states;
  const int A = spec.num_actions;

  ExplicitMdp mdp;
  mdp.num_states = S;
  mdp.num_actions = A;
  mdp.feature_dim = 1 + S;
  mdp.beta = spec.beta;
  mdp.gamma = spec.gamma;
  mdp.T.assign(static_cast<size_t>(A), Matrix::Zero(S, S));
  mdp.R.resize(S, A);
  mdp.F = Matrix::Zero(S * A, 1 + S);
  mdp.terminal.assign(static_cast<size_t>(S), 0);

  const int branching = std::min(std::max(spec.branching, 1), S);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) {
      // Pick distinct successors, then a random distribution over them.
      std::vector<int> succ;
      while (static_cast<int>(succ.size()) < branching) {
        int x = rng.uniform_int(S);
        bool seen = false;
        for (int y : succ) seen = seen || y == x;
        if (!seen) succ.push_back(x);
      }
      double total = 0.0;
      std::vector<double> w(succ.size());
      for (size_t k = 0; k < succ.size(); ++k) {
        w[k] = rng.uniform(0.05, 1.0);
        total += w[k];
      }
      for (size_t k = 0; k < succ.size(); ++k)
        mdp.T[static_cast<size_t>(a)](s, succ[k]) = w[k] / total;

      mdp.R(s, a) = rng.uniform(spec.reward_lo, spec.reward_hi);
      mdp.F(mdp.sa_index(s, a), 0) = mdp.R(s, a);
      mdp.F.row(mdp.sa_index(s, a)).segment(1, S) =
          mdp.T[static_cast<size_t>(a)].row(s);
    }
  validate_mdp(mdp);
  return mdp;
}

}  // namespace esprl
