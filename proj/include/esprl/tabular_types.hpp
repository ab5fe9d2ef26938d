#pragma once

#include <vector>

#include "esprl/types.hpp"

namespace esprl {

// Fully enumerated finite MDP with a vector feature function. Terminal
// states are absorbing: self loop with probability one, zero reward, zero
// features. R and F hold expectations over the next-state distribution.
struct ExplicitMdp {
  int num_states = 0;
  int num_actions = 0;
  int feature_dim = 0;
  std::vector<Matrix> T;          // per action, S x S, rows sum to one
  Matrix R;                       // S x A
  Matrix F;                       // (S * A) x feature_dim, row sa_index(s, a)
  std::vector<uint8_t> terminal;  // size S
  double beta = 0.9;              // reward discount
  double gamma = 0.9;             // feature discount

  int sa_index(int s, int a) const { return s * num_actions + a; }
};

// Throws std::invalid_argument on shape errors, rows that do not sum to
// one, or terminal states that are not absorbing.
void validate_mdp(const ExplicitMdp& mdp, double tol = 1e-9);

}  // namespace esprl
