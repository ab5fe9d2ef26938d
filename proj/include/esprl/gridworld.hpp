#pragma once

#include <map>
#include <vector>

#include "esprl/env.hpp"
#include "esprl/tabular_types.hpp"

namespace esprl {

// Named cell set reported as an indicator feature when the agent enters one
// of its cells.
struct RegionFeature {
  std::string name;
  std::vector<int> cells;
};

struct TerminalCell {
  int cell = 0;
  double reward = 0.0;
  bool is_goal = false;  // false marks it as the failure terminal
};

// Rectangular gridworld with slip noise. Actions are up/right/down/left;
// moves off the grid stay in place. Entering a terminal cell ends the
// episode with that cell's reward. Features: one indicator per region on
// the entered cell, then goal and failure terminal indicators.
struct GridWorldSpec {
  int width = 6;
  int height = 1;
  double slip = 0.0;       // probability mass split over the two lateral moves
  double step_reward = 0.0;
  int start_cell = 0;
  bool random_start = false;  // uniform over non-terminal cells
  std::vector<TerminalCell> terminals;
  std::vector<RegionFeature> regions;
  double beta = 0.9;
  double gamma = 0.9;
};

// Start at the left end of a width-cell corridor whose left end fails
// (reward 0) and right end is the goal (reward 1).
GridWorldSpec corridor_spec(int width = 6, double slip = 0.0);

class GridWorld : public Env {
 public:
  explicit GridWorld(GridWorldSpec spec);

  const EnvDescriptor& descriptor() const override { return desc_; }
  Vector reset(Rng& rng) const override;
  StepOutcome step(const Vector& state, int action, Rng& rng) const override;
  Vector observe(const Vector& state) const override;  // one-hot cell

  const GridWorldSpec& spec() const { return spec_; }

  // Exact MDP with terminal cells made absorbing (self loop, zero reward,
  // zero features); rewards and features are expectations over slip.
  ExplicitMdp enumerate_mdp() const;

  int cell_of(const Vector& state) const;
  bool is_terminal_cell(int cell) const;

 private:
  int move(int cell, int action) const;
  Vector features_on_enter(int cell, bool done) const;

  GridWorldSpec spec_;
  EnvDescriptor desc_;
  std::map<int, const TerminalCell*> terminal_by_cell_;
};

}  // namespace esprl
