#include "esprl/gridworld.hpp"

#include <stdexcept>

#include "esprl/tabular_types.hpp"

namespace esprl {

namespace {

// Row-major cell layout; actions 0..3 = up, right, down, left.
constexpr int kActions = 4;
constexpr int kRowDelta[kActions] = {-1, 0, 1, 0};
constexpr int kColDelta[kActions] = {0, 1, 0, -1};

}  // namespace

GridWorldSpec corridor_spec(int width, double slip) {
  if (width < 3)
    throw std::invalid_argument("corridor_spec: width must be at least 3");
  GridWorldSpec spec;
  spec.width = width;
  spec.height = 1;
  spec.slip = slip;
  spec.start_cell = 1;
  spec.terminals = {
      TerminalCell{0, 0.0, false},
      TerminalCell{width - 1, 1.0, true},
  };
  // Mid-corridor marker region, useful as a non-terminal cumulant.
  spec.regions = {RegionFeature{"mid", {width / 2}}};
  return spec;
}

GridWorld::GridWorld(GridWorldSpec spec) : spec_(std::move(spec)) {
  if (spec_.width <= 0 || spec_.height <= 0)
    throw std::invalid_argument("GridWorld: non-positive grid size");
  if (spec_.slip < 0.0 || spec_.slip > 1.0)
    throw std::invalid_argument("GridWorld: slip must be in [0, 1]");
  const int cells = spec_.width * spec_.height;
  for (const TerminalCell& t : spec_.terminals) {
    if (t.cell < 0 || t.cell >= cells)
      throw std::invalid_argument("GridWorld: terminal cell out of range");
    if (!terminal_by_cell_.emplace(t.cell, &t).second)
      throw std::invalid_argument("GridWorld: duplicate terminal cell");
  }
  if (spec_.start_cell < 0 || spec_.start_cell >= cells ||
      terminal_by_cell_.count(spec_.start_cell))
    throw std::invalid_argument("GridWorld: bad start cell");
  for (const RegionFeature& r : spec_.regions)
    for (int c : r.cells)
      if (c < 0 || c >= cells)
        throw std::invalid_argument("GridWorld: region cell out of range");

  desc_.id = "gridworld";
  desc_.state_dim = 1;
  desc_.obs_dim = cells;
  desc_.action_count = kActions;
  desc_.default_beta = spec_.beta;
  desc_.default_gamma = spec_.gamma;
  desc_.config = {{"width", spec_.width},
                  {"slip", spec_.slip},
                  {"beta", spec_.beta},
                  {"gamma", spec_.gamma}};
  // Region indicators can fire on many steps, so their discounted sums are
  // not confined to [0, 1]; terminal indicators fire at most once and are.
  for (const RegionFeature& r : spec_.regions)
    desc_.schema.features.push_back(
        FeatureSpec{r.name, FeatureKind::indicator, Act::linear, -1});
  desc_.schema.features.push_back(
      FeatureSpec{"goal", FeatureKind::terminal_indicator, Act::sigmoid, -1});
  desc_.schema.features.push_back(
      FeatureSpec{"fail", FeatureKind::terminal_indicator, Act::sigmoid, -1});
}

int GridWorld::cell_of(const Vector& state) const {
  check_state(state);
  int cell = static_cast<int>(state[0]);
  if (cell < 0 || cell >= spec_.width * spec_.height ||
      state[0] != static_cast<double>(cell))
    throw std::invalid_argument("GridWorld: state is not a valid cell index");
  return cell;
}

bool GridWorld::is_terminal_cell(int cell) const {
  return terminal_by_cell_.count(cell) > 0;
}

Vector GridWorld::reset(Rng& rng) const {
  int cell = spec_.start_cell;
  if (spec_.random_start) {
    do {
      cell = rng.uniform_int(spec_.width * spec_.height);
    } while (is_terminal_cell(cell));
  }
  Vector s(1);
  s[0] = cell;
  return s;
}

Vector GridWorld::observe(const Vector& state) const {
  int cell = cell_of(state);
  Vector obs = Vector::Zero(desc_.obs_dim);
  obs[cell] = 1.0;
  return obs;
}

int GridWorld::move(int cell, int action) const {
  int row = cell / spec_.width + kRowDelta[action];
  int col = cell % spec_.width + kColDelta[action];
  if (row < 0 || row >= spec_.height || col < 0 || col >= spec_.width)
    return cell;  // bump into the wall
  return row * spec_.width + col;
}

Vector GridWorld::features_on_enter(int cell, bool done) const {
  Vector f = Vector::Zero(desc_.schema.size());
  int i = 0;
  for (const RegionFeature& r : spec_.regions) {
    for (int c : r.cells)
      if (c == cell) f[i] = 1.0;
    ++i;
  }
  if (done) {
    auto it = terminal_by_cell_.find(cell);
    f[i] = it->second->is_goal ? 1.0 : 0.0;
    f[i + 1] = it->second->is_goal ? 0.0 : 1.0;
  }
  return f;
}

StepOutcome GridWorld::step(const Vector& state, int action, Rng& rng) const {
  check_action(action);
  int cell = cell_of(state);
  if (is_terminal_cell(cell))
    throw std::invalid_argument("GridWorld: step from terminal cell " +
                                std::to_string(cell));

  // With probability slip the move deflects to one of the two lateral
  // directions, half each; deflected moves still bump into walls.
  int dir = action;
  if (spec_.slip > 0.0) {
    double u = rng.uniform();
    if (u < spec_.slip / 2.0)
      dir = (action + 1) % kActions;
    else if (u < spec_.slip)
      dir = (action + 3) % kActions;
  }
  int next = move(cell, dir);

  StepOutcome out;
  out.next_state = Vector::Constant(1, next);
  out.done = is_terminal_cell(next);
  out.reward = out.done ? terminal_by_cell_.at(next)->reward : spec_.step_reward;
  out.features = features_on_enter(next, out.done);
  return out;
}

ExplicitMdp GridWorld::enumerate_mdp() const {
  const int S = spec_.width * spec_.height;
  const int A = kActions;
  const int n = desc_.schema.size();
  ExplicitMdp mdp;
  mdp.num_states = S;
  mdp.num_actions = A;
  mdp.feature_dim = n;
  mdp.beta = spec_.beta;
  mdp.gamma = spec_.gamma;
  mdp.T.assign(static_cast<size_t>(A), Matrix::Zero(S, S));
  mdp.R = Matrix::Zero(S, A);
  mdp.F = Matrix::Zero(S * A, n);
  mdp.terminal.assign(static_cast<size_t>(S), 0);
  for (const auto& [cell, t] : terminal_by_cell_)
    mdp.terminal[static_cast<size_t>(cell)] = 1;

  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      if (mdp.terminal[static_cast<size_t>(s)]) {
        mdp.T[static_cast<size_t>(a)](s, s) = 1.0;
        continue;
      }
      auto add = [&](int dir, double p) {
        int next = move(s, dir);
        bool done = is_terminal_cell(next);
        mdp.T[static_cast<size_t>(a)](s, next) += p;
        mdp.R(s, a) += p * (done ? terminal_by_cell_.at(next)->reward
                                 : spec_.step_reward);
        mdp.F.row(mdp.sa_index(s, a)) += p * features_on_enter(next, done).transpose();
      };
      add(a, 1.0 - spec_.slip);
      if (spec_.slip > 0.0) {
        add((a + 1) % kActions, spec_.slip / 2.0);
        add((a + 3) % kActions, spec_.slip / 2.0);
      }
    }
  }
  validate_mdp(mdp);
  return mdp;
}

}  // namespace esprl
