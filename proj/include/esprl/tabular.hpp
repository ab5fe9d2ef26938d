#pragma once

#include <unordered_map>
#include <vector>

#include "esprl/rng.hpp"
#include "esprl/tabular_types.hpp"

namespace esprl {

struct ValueIterationResult {
  Matrix q;                 // S x A
  std::vector<int> policy;  // greedy, lowest index on ties
  int iterations = 0;
};

ValueIterationResult value_iteration(const ExplicitMdp& mdp, double tol = 1e-12,
                                     int max_iterations = 1000000);

// One application of the optimality backup: R(s,a) + beta * E[max_a' Q].
Matrix bellman_backup(const ExplicitMdp& mdp, const Matrix& q);

// One application of the GVF backup under a fixed policy:
// F(s,a) + gamma * E[Q_F(s', policy(s'))].
Matrix gvf_backup(const ExplicitMdp& mdp, const Matrix& qf,
                  const std::vector<int>& policy);

// Fixed point of gvf_backup, iterated to sup-norm tolerance.
Matrix gvf_policy_eval(const ExplicitMdp& mdp, const std::vector<int>& policy,
                       double tol = 1e-12, int max_iterations = 10000000);

// Smallest gap between the greedy action's value and the runner-up over
// non-terminal states; a margin of optimality for learning tests.
double q_action_gap(const ExplicitMdp& mdp, const Matrix& q);

using CellKey = std::vector<int64_t>;

struct CellKeyHash {
  size_t operator()(const CellKey& key) const;
};

// Uniform quantizer: component i of a GVF vector maps to
// floor((g[i] - lo[i]) / delta[i]). Out-of-range values clamp to the edge
// bins; the first clamp prints a warning and all clamps are counted.
struct QuantizingHash {
  Vector lo;
  Vector hi;
  Vector delta;
  mutable long clamp_count = 0;

  CellKey key(const Vector& gvf) const;
};

QuantizingHash make_uniform_hash(const Vector& lo, const Vector& hi,
                                 int bins_per_dim);

using CellMap = std::unordered_map<CellKey, double, CellKeyHash>;
using CellCounts = std::unordered_map<CellKey, long, CellKeyHash>;

struct TabularEspConfig {
  QuantizingHash hash;
  double beta = 0.9;
  double gamma = 0.8;
  double alpha_c = 100.0;  // step size alpha = alpha_c / (alpha_c + visits)
  long sync_every = 500;   // copy live tables to targets every K steps
};

// Tabular embedded self-prediction learner: a per-(s,a) GVF table and a
// combiner keyed by the quantized GVF vector. Unseen combiner cells read 0.
struct TabularEsp {
  TabularEspConfig cfg;
  int num_states = 0;
  int num_actions = 0;
  int feature_dim = 0;

  Matrix qf;         // (S * A) x n
  Matrix qf_target;
  CellMap combiner;
  CellMap combiner_target;

  std::vector<long> qf_visits;  // per (s, a)
  CellCounts cell_visits;
  long steps = 0;

  int sa_index(int s, int a) const { return s * num_actions + a; }
};

TabularEsp make_tabular_esp(int num_states, int num_actions, int feature_dim,
                            TabularEspConfig cfg);

double tabular_q(const TabularEsp& esp, int s, int a);
double tabular_q_target(const TabularEsp& esp, int s, int a);
int tabular_greedy(const TabularEsp& esp, int s);  // lowest index on ties

// One learning update. Syncs targets when steps % sync_every == 0 before
// updating, picks the bootstrap action greedily from the target tables,
// moves the GVF row toward its target, then moves the combiner cell found
// by hashing the freshly updated GVF row toward the q target.
void esp_table_step(TabularEsp& esp, int s, int a, double r, const Vector& f,
                    int next_s, bool done);

// Epsilon-greedy training loop over an explicit MDP: transitions are drawn
// from T, rewards and features are the expectations in R and F, and the
// state teleports uniformly every restart_every steps to keep it exploring.
void run_tabular_training(TabularEsp& esp, const ExplicitMdp& mdp, long steps,
                          long restart_every, double eps, Rng& rng);

struct SufficiencyViolation {
  int model = 0;
  int s1 = 0, a1 = 0, s2 = 0, a2 = 0;
  double backup1 = 0.0, backup2 = 0.0;
  CellKey cell;
};

struct SufficiencyReport {
  int models_checked = 0;
  long pairs_checked = 0;
  std::vector<SufficiencyViolation> violations;

  bool passed() const { return violations.empty(); }
};

// Empirical check of Bellman sufficiency for (F, h): samples random
// tabular models, applies one exact GVF backup under each model's greedy
// policy, and reports any pair of state-actions that lands in the same
// hash cell while their exact Bellman backups disagree beyond tol.
SufficiencyReport bellman_sufficiency_check(const ExplicitMdp& mdp,
                                            const QuantizingHash& hash,
                                            int model_samples, Rng& rng,
                                            double tol = 1e-9);

struct RandomMdpSpec {
  int num_states = 10;
  int num_actions = 2;
  double beta = 0.9;
  double gamma = 0.8;
  double reward_lo = 0.0;
  double reward_hi = 1.0;
  int branching = 3;  // successors per (s, a)
};

// Dense-reward random MDP with no terminal states. Features are the
// canonical sufficient set: reward first, then the transition row.
ExplicitMdp make_random_mdp(const RandomMdpSpec& spec, Rng& rng);

}  // namespace esprl
