#pragma once

#include <array>
#include <string>

#include "esprl/env.hpp"

namespace esprl {

enum class Opponent { rusher, balanced, turtle };

const char* opponent_name(Opponent o);
Opponent opponent_from_name(const std::string& name);

// Offsets into the MiniTow state vector. Counts are stored as doubles and
// combat produces fractional unit counts by design.
struct MiniTowLayout {
  static constexpr int wave = 0;
  static constexpr int p1_currency = 1;
  static constexpr int p2_currency = 2;
  static constexpr int buildings = 3;   // + player * 6 + lane * 3 + type
  static constexpr int units = 15;      // + player * 24 + lane * 12 + type * 4 + cell
  static constexpr int hp = 63;         // + player * 2 + lane
  static constexpr int ledger = 67;     // + base * 3 + type, base = player * 2 + lane
  static constexpr int outcome_base = 79;  // lowest-HP base at the end, -1 before
  static constexpr int outcome_tie = 80;   // 1 if the coin flip decided the game
  static constexpr int state_dim = 81;
};

// Purchase bundle: a lane and a unit-building multiset. lane == -1 encodes
// the save action (buy nothing).
struct Purchase {
  int lane = -1;
  int marines = 0;
  int banelings = 0;
  int immortals = 0;

  int total() const { return marines + banelings + immortals; }
};

// Two-player, two-lane tower war. Each step is one wave: both players
// place a purchase bundle, every building spawns one unit, units advance
// along a four-cell lane and fight the opposing front with rock-paper-
// scissors damage multipliers, and units that advance past the last cell
// consume themselves to damage the defending base. The opponent seat is
// scripted. An episode ends when a base reaches zero HP (its owner loses)
// or after max_waves waves, when the owner of the lowest-HP base loses;
// exact HP ties are settled by a coin flip.
//
// Features: per-wave base damage split by (base, attacking unit type), a
// one-hot over which base ended lowest, and a tie-break indicator.
struct MiniTowSpec {
  Opponent opponent = Opponent::rusher;
  int build_cap = 10;  // max buildings per purchase bundle
  int max_waves = 40;

  double start_currency = 100.0;
  double income = 100.0;
  std::array<double, 3> unit_cost = {50.0, 75.0, 200.0};

  std::array<double, 3> unit_hp = {1.0, 0.8, 4.0};
  std::array<double, 3> unit_atk = {0.4, 0.8, 1.6};
  std::array<double, 3> base_dmg = {0.02, 0.03, 0.08};
  double rps_advantage = 3.0;
  double rps_disadvantage = 0.33;

  double beta = 0.9999;
  double gamma = 0.9999;
};

class MiniTow : public Env {
 public:
  explicit MiniTow(MiniTowSpec spec = {});

  const EnvDescriptor& descriptor() const override { return desc_; }
  Vector reset(Rng& rng) const override;
  StepOutcome step(const Vector& state, int action, Rng& rng) const override;
  Vector observe(const Vector& state) const override;
  std::vector<uint8_t> action_mask(const Vector& state) const override;

  const MiniTowSpec& spec() const { return spec_; }

  Purchase decode_action(int action) const;
  int encode_action(const Purchase& p) const;
  double purchase_cost(const Purchase& p) const;

  // Damage multiplier for attacker type a hitting defender type d.
  double rps(int a, int d) const;

  bool is_terminal_state(const Vector& state) const;

 private:
  int scripted_action(const Vector& state) const;
  void resolve_lane(Vector& s, int lane) const;
  void fight(Vector& s, int lane, int cell1, int cell2) const;
  void advance_all(Vector& s, int player, int lane) const;
  void advance_followers(Vector& s, int player, int lane, int front) const;
  void strike_base(Vector& s, int attacker, int lane, int cell) const;
  int front_cell(const Vector& s, int player, int lane) const;

  MiniTowSpec spec_;
  EnvDescriptor desc_;
  std::vector<Purchase> actions_;
};

}  // namespace esprl
