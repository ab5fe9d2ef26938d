#include "esprl/minitow.hpp"

#include <cmath>
#include <stdexcept>

namespace esprl {

namespace {

using L = MiniTowLayout;

constexpr double kCountEps = 1e-9;  // snap tiny fractional survivors to zero
constexpr int kTypes = 3;
constexpr int kCells = 4;

int bidx(int player, int lane, int type) {
  return L::buildings + player * 6 + lane * 3 + type;
}
int uidx(int player, int lane, int type, int cell) {
  return L::units + player * 24 + lane * 12 + type * 4 + cell;
}
int hidx(int player, int lane) { return L::hp + player * 2 + lane; }
int lidx(int base, int type) { return L::ledger + base * 3 + type; }

const char* kTypeNames[kTypes] = {"marine", "baneling", "immortal"};
const char* kBaseNames[4] = {"p1_top", "p1_bottom", "p2_top", "p2_bottom"};

}  // namespace

const char* opponent_name(Opponent o) {
  switch (o) {
    case Opponent::rusher: return "rusher";
    case Opponent::balanced: return "balanced";
    case Opponent::turtle: return "turtle";
  }
  throw std::logic_error("opponent_name: unknown opponent");
}

Opponent opponent_from_name(const std::string& name) {
  if (name == "rusher") return Opponent::rusher;
  if (name == "balanced") return Opponent::balanced;
  if (name == "turtle") return Opponent::turtle;
  throw std::invalid_argument("unknown minitow opponent: " + name);
}

MiniTow::MiniTow(MiniTowSpec spec) : spec_(spec) {
  if (spec_.build_cap < 1)
    throw std::invalid_argument("MiniTow: build_cap must be at least 1");
  if (spec_.max_waves < 1)
    throw std::invalid_argument("MiniTow: max_waves must be at least 1");

  // Action 0 saves; then every non-empty bundle of at most build_cap
  // buildings, top lane first, in (marine, baneling, immortal) lexicographic
  // order.
  actions_.push_back(Purchase{});
  for (int lane = 0; lane < 2; ++lane)
    for (int m = 0; m <= spec_.build_cap; ++m)
      for (int b = 0; b + m <= spec_.build_cap; ++b)
        for (int i = 0; i + b + m <= spec_.build_cap; ++i)
          if (m + b + i > 0) actions_.push_back(Purchase{lane, m, b, i});

  desc_.id = "minitow";
  desc_.state_dim = L::state_dim;
  desc_.obs_dim = 66;
  desc_.action_count = static_cast<int>(actions_.size());
  desc_.default_beta = spec_.beta;
  desc_.default_gamma = spec_.gamma;
  desc_.config = {{"opponent", opponent_name(spec_.opponent)},
                  {"build_cap", spec_.build_cap},
                  {"beta", spec_.beta},
                  {"gamma", spec_.gamma}};

  // Wave damage totals stay within one base's HP, so sigmoid heads fit; the
  // lowest-base one-hot is mutually exclusive and shares a softmax.
  for (const char* base : kBaseNames)
    for (const char* type : kTypeNames)
      desc_.schema.features.push_back(
          FeatureSpec{std::string("dmg_") + base + "_" + type,
                      FeatureKind::delta, Act::sigmoid, -1});
  for (const char* base : kBaseNames)
    desc_.schema.features.push_back(
        FeatureSpec{std::string("lowest_") + base,
                    FeatureKind::terminal_indicator, Act::linear, 0});
  desc_.schema.features.push_back(FeatureSpec{
      "tiebreak_coin", FeatureKind::terminal_indicator, Act::sigmoid, -1});
}

double MiniTow::rps(int a, int d) const {
  if (a == d) return 1.0;
  // marine > immortal > baneling > marine
  const bool advantaged =
      (a == 0 && d == 2) || (a == 2 && d == 1) || (a == 1 && d == 0);
  return advantaged ? spec_.rps_advantage : spec_.rps_disadvantage;
}

Purchase MiniTow::decode_action(int action) const {
  if (action < 0 || action >= static_cast<int>(actions_.size()))
    throw std::invalid_argument("MiniTow: action out of range");
  return actions_[static_cast<size_t>(action)];
}

int MiniTow::encode_action(const Purchase& p) const {
  for (size_t i = 0; i < actions_.size(); ++i) {
    const Purchase& q = actions_[i];
    if (q.lane == p.lane && q.marines == p.marines &&
        q.banelings == p.banelings && q.immortals == p.immortals)
      return static_cast<int>(i);
  }
  throw std::invalid_argument("MiniTow: purchase is not a legal action");
}

double MiniTow::purchase_cost(const Purchase& p) const {
  if (p.lane < 0) return 0.0;
  return p.marines * spec_.unit_cost[0] + p.banelings * spec_.unit_cost[1] +
         p.immortals * spec_.unit_cost[2];
}

Vector MiniTow::reset(Rng&) const {
  Vector s = Vector::Zero(L::state_dim);
  s[L::p1_currency] = spec_.start_currency;
  s[L::p2_currency] = spec_.start_currency;
  for (int p = 0; p < 2; ++p)
    for (int lane = 0; lane < 2; ++lane) s[hidx(p, lane)] = 1.0;
  s[L::outcome_base] = -1.0;
  return s;
}

bool MiniTow::is_terminal_state(const Vector& state) const {
  check_state(state);
  if (state[L::wave] >= spec_.max_waves) return true;
  for (int p = 0; p < 2; ++p)
    for (int lane = 0; lane < 2; ++lane)
      if (state[hidx(p, lane)] <= 0.0) return true;
  return false;
}

Vector MiniTow::observe(const Vector& state) const {
  check_state(state);
  Vector obs(desc_.obs_dim);
  int k = 0;
  obs[k++] = state[L::wave] / spec_.max_waves;
  obs[k++] = state[L::p1_currency] / 1000.0;  // opponent currency is hidden
  for (int i = 0; i < 12; ++i) obs[k++] = state[L::buildings + i] / 20.0;
  for (int i = 0; i < 48; ++i) obs[k++] = state[L::units + i] / 50.0;
  for (int i = 0; i < 4; ++i) obs[k++] = state[L::hp + i];
  return obs;
}

std::vector<uint8_t> MiniTow::action_mask(const Vector& state) const {
  check_state(state);
  const double cur = state[L::p1_currency];
  std::vector<uint8_t> mask(actions_.size(), 0);
  for (size_t i = 0; i < actions_.size(); ++i)
    mask[i] = purchase_cost(actions_[i]) <= cur + 1e-9 ? 1 : 0;
  return mask;
}

int MiniTow::front_cell(const Vector& s, int player, int lane) const {
  for (int cell = kCells - 1; cell >= 0; --cell) {
    double total = 0.0;
    for (int t = 0; t < kTypes; ++t) total += s[uidx(player, lane, t, cell)];
    if (total > 0.0) return cell;
  }
  return -1;
}

void MiniTow::strike_base(Vector& s, int attacker, int lane, int cell) const {
  const int defender = 1 - attacker;
  const int base = defender * 2 + lane;
  double raw = 0.0;
  for (int t = 0; t < kTypes; ++t)
    raw += s[uidx(attacker, lane, t, cell)] * spec_.base_dmg[t];
  if (raw > 0.0) {
    double& hp = s[hidx(defender, lane)];
    const double applied = std::min(raw, hp);
    const double scale = applied / raw;
    for (int t = 0; t < kTypes; ++t)
      s[lidx(base, t)] +=
          s[uidx(attacker, lane, t, cell)] * spec_.base_dmg[t] * scale;
    hp -= applied;
    if (hp < kCountEps) hp = 0.0;
  }
  for (int t = 0; t < kTypes; ++t) s[uidx(attacker, lane, t, cell)] = 0.0;
}

void MiniTow::advance_all(Vector& s, int player, int lane) const {
  strike_base(s, player, lane, kCells - 1);  // no-op when the last cell is empty
  for (int cell = kCells - 2; cell >= 0; --cell)
    for (int t = 0; t < kTypes; ++t) {
      s[uidx(player, lane, t, cell + 1)] += s[uidx(player, lane, t, cell)];
      s[uidx(player, lane, t, cell)] = 0.0;
    }
}

void MiniTow::advance_followers(Vector& s, int player, int lane, int front) const {
  for (int cell = front - 1; cell >= 0; --cell)
    for (int t = 0; t < kTypes; ++t) {
      s[uidx(player, lane, t, cell + 1)] += s[uidx(player, lane, t, cell)];
      s[uidx(player, lane, t, cell)] = 0.0;
    }
}

void MiniTow::fight(Vector& s, int lane, int cell1, int cell2) const {
  std::array<double, kTypes> a{}, d{};
  double sum_a = 0.0, sum_d = 0.0;
  for (int t = 0; t < kTypes; ++t) {
    a[t] = s[uidx(0, lane, t, cell1)];
    d[t] = s[uidx(1, lane, t, cell2)];
    sum_a += a[t];
    sum_d += d[t];
  }
  if (sum_a <= 0.0 || sum_d <= 0.0) return;

  // Simultaneous exchange. Each group's damage output is split over enemy
  // types in proportion to their headcount, then converted to kills.
  std::array<double, kTypes> dmg_to_d{}, dmg_to_a{};
  for (int j = 0; j < kTypes; ++j)
    for (int i = 0; i < kTypes; ++i) {
      dmg_to_d[j] += a[i] * spec_.unit_atk[i] * rps(i, j) * (d[j] / sum_d);
      dmg_to_a[j] += d[i] * spec_.unit_atk[i] * rps(i, j) * (a[j] / sum_a);
    }
  for (int t = 0; t < kTypes; ++t) {
    double na = a[t] - dmg_to_a[t] / spec_.unit_hp[t];
    double nd = d[t] - dmg_to_d[t] / spec_.unit_hp[t];
    s[uidx(0, lane, t, cell1)] = na > kCountEps ? na : 0.0;
    s[uidx(1, lane, t, cell2)] = nd > kCountEps ? nd : 0.0;
  }
}

void MiniTow::resolve_lane(Vector& s, int lane) const {
  for (int p = 0; p < 2; ++p)
    for (int t = 0; t < kTypes; ++t)
      s[uidx(p, lane, t, 0)] += s[bidx(p, lane, t)];

  int f1 = front_cell(s, 0, lane);
  int f2 = front_cell(s, 1, lane);
  if (f1 < 0 && f2 < 0) return;
  if (f2 < 0) {
    advance_all(s, 0, lane);
    return;
  }
  if (f1 < 0) {
    advance_all(s, 1, lane);
    return;
  }

  // Player 1's front at cell f1 and player 2's at physical cell 3 - f2;
  // gap is the number of empty cells between the fronts.
  const int gap = 3 - f2 - f1;
  if (gap >= 3) {
    advance_all(s, 0, lane);
    advance_all(s, 1, lane);
    return;
  }
  if (gap == 2) {
    // Meeting engagement: both sides step forward into contact.
    advance_all(s, 0, lane);
    advance_all(s, 1, lane);
    f1 = front_cell(s, 0, lane);
    f2 = front_cell(s, 1, lane);
    if (f1 >= 0 && f2 >= 0) fight(s, lane, f1, f2);
    return;
  }

  fight(s, lane, f1, f2);
  double alive1 = 0.0, alive2 = 0.0;
  for (int t = 0; t < kTypes; ++t) {
    alive1 += s[uidx(0, lane, t, f1)];
    alive2 += s[uidx(1, lane, t, f2)];
  }
  // A side that wipes the opposing front pursues immediately; otherwise the
  // fronts hold and the rear ranks close up.
  if (alive1 > 0.0 && alive2 <= 0.0) {
    advance_all(s, 0, lane);
    advance_followers(s, 1, lane, f2);
  } else if (alive2 > 0.0 && alive1 <= 0.0) {
    advance_all(s, 1, lane);
    advance_followers(s, 0, lane, f1);
  } else {
    advance_followers(s, 0, lane, f1);
    advance_followers(s, 1, lane, f2);
  }
}

int MiniTow::scripted_action(const Vector& s) const {
  const double cur = s[L::p2_currency];
  const int wave = static_cast<int>(s[L::wave]);
  Purchase p;  // defaults to save

  auto max_affordable = [&](int type) {
    return std::min(spec_.build_cap,
                    static_cast<int>(std::floor((cur + 1e-9) / spec_.unit_cost[type])));
  };

  switch (spec_.opponent) {
    case Opponent::rusher: {
      const int m = max_affordable(0);
      if (m > 0) p = Purchase{1, m, 0, 0};
      break;
    }
    case Opponent::balanced: {
      // Counter the type the opponent owns the most of, alternating lanes.
      double count[kTypes] = {0, 0, 0};
      for (int lane = 0; lane < 2; ++lane)
        for (int t = 0; t < kTypes; ++t) {
          count[t] += s[bidx(0, lane, t)];
          for (int cell = 0; cell < kCells; ++cell)
            count[t] += s[uidx(0, lane, t, cell)];
        }
      int top = 0;
      for (int t = 1; t < kTypes; ++t)
        if (count[t] > count[top]) top = t;
      static constexpr int kCounterOf[kTypes] = {1, 2, 0};
      const int counter = kCounterOf[top];
      int n = max_affordable(counter);
      if (n > 0) {
        p = Purchase{wave % 2, 0, 0, 0};
        if (counter == 0) p.marines = n;
        if (counter == 1) p.banelings = n;
        if (counter == 2) p.immortals = n;
      } else {
        const int m = max_affordable(0);
        if (m > 0) p = Purchase{wave % 2, m, 0, 0};
      }
      break;
    }
    case Opponent::turtle: {
      // Hoard, then buy immortal batches.
      if (cur >= 3.0 * spec_.unit_cost[2]) {
        const int n = max_affordable(2);
        if (n > 0) p = Purchase{wave % 2, 0, 0, n};
      }
      break;
    }
  }
  return encode_action(p);
}

StepOutcome MiniTow::step(const Vector& state, int action, Rng& rng) const {
  check_state(state);
  check_action(action);
  if (is_terminal_state(state))
    throw std::invalid_argument("MiniTow: step from a finished game");

  Vector s = state;
  for (int i = 0; i < 12; ++i) s[L::ledger + i] = 0.0;

  const Purchase own = decode_action(action);
  const Purchase theirs = decode_action(scripted_action(s));
  if (purchase_cost(own) > s[L::p1_currency] + 1e-9)
    throw std::invalid_argument("MiniTow: purchase costs " +
                                std::to_string(purchase_cost(own)) +
                                " but currency is " +
                                std::to_string(s[L::p1_currency]));
  auto apply = [&](int player, const Purchase& p, int currency_index) {
    if (p.lane < 0) return;
    s[currency_index] -= purchase_cost(p);
    s[bidx(player, p.lane, 0)] += p.marines;
    s[bidx(player, p.lane, 1)] += p.banelings;
    s[bidx(player, p.lane, 2)] += p.immortals;
  };
  apply(0, own, L::p1_currency);
  apply(1, theirs, L::p2_currency);

  resolve_lane(s, 0);
  resolve_lane(s, 1);

  s[L::wave] += 1.0;
  s[L::p1_currency] += spec_.income;
  s[L::p2_currency] += spec_.income;

  bool destroyed = false;
  for (int i = 0; i < 4; ++i)
    if (s[L::hp + i] <= 0.0) destroyed = true;
  const bool done = destroyed || s[L::wave] >= spec_.max_waves;

  StepOutcome out;
  out.done = done;
  out.features = Vector::Zero(desc_.schema.size());
  for (int i = 0; i < 12; ++i) out.features[i] = s[L::ledger + i];
  out.reward = 0.0;

  if (done) {
    const double min1 = std::min(s[hidx(0, 0)], s[hidx(0, 1)]);
    const double min2 = std::min(s[hidx(1, 0)], s[hidx(1, 1)]);
    const bool tie = min1 == min2;
    int loser;
    if (min1 < min2)
      loser = 0;
    else if (min2 < min1)
      loser = 1;
    else
      loser = rng.bernoulli(0.5) ? 0 : 1;
    const int lane_low = s[hidx(loser, 0)] <= s[hidx(loser, 1)] ? 0 : 1;
    const int base = loser * 2 + lane_low;
    s[L::outcome_base] = base;
    s[L::outcome_tie] = tie ? 1.0 : 0.0;
    out.features[12 + base] = 1.0;
    out.features[16] = tie ? 1.0 : 0.0;
    out.reward = loser == 1 ? 1.0 : 0.0;
  }
  out.next_state = std::move(s);
  return out;
}

}  // namespace esprl
