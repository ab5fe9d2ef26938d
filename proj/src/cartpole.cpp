#include "esprl/cartpole.hpp"

#include <cmath>
#include <stdexcept>

namespace esprl {

namespace {
constexpr int kX = 0, kXDot = 1, kTheta = 2, kThetaDot = 3, kStep = 4;
}

const char* feature_encoding_name(FeatureEncoding e) {
  switch (e) {
    case FeatureEncoding::discrete: return "discrete";
    case FeatureEncoding::delta: return "delta";
  }
  throw std::logic_error("feature_encoding_name: unknown encoding");
}

FeatureEncoding feature_encoding_from_name(const std::string& name) {
  if (name == "discrete") return FeatureEncoding::discrete;
  if (name == "delta") return FeatureEncoding::delta;
  throw std::invalid_argument("unknown cartpole feature encoding: " + name);
}

CartPole::CartPole(CartPoleSpec spec) : spec_(spec) {
  theta_limit_ = spec_.theta_limit_deg * M_PI / 180.0;
  safe_theta_ = spec_.safe_theta_deg * M_PI / 180.0;

  desc_.id = "cartpole";
  desc_.state_dim = 5;
  desc_.obs_dim = 4;
  desc_.action_count = 2;
  desc_.default_beta = spec_.beta;
  desc_.default_gamma = spec_.gamma;
  desc_.config = {{"encoding", feature_encoding_name(spec_.encoding)},
                  {"beta", spec_.beta},
                  {"gamma", spec_.gamma}};

  // Discounted sums of these cumulants are not confined to [0, 1] (the
  // unsafe indicators can fire on every step), so every head is linear.
  auto add = [&](const std::string& name, FeatureKind kind) {
    desc_.schema.features.push_back(FeatureSpec{name, kind, Act::linear, -1});
  };
  const char* vars[4] = {"x", "x_dot", "theta", "theta_dot"};
  if (spec_.encoding == FeatureEncoding::discrete) {
    for (const char* v : vars) {
      add(std::string(v) + "_unsafe_neg", FeatureKind::indicator);
      add(std::string(v) + "_unsafe_pos", FeatureKind::indicator);
    }
  } else {
    for (const char* v : vars) {
      add(std::string(v) + "_delta_neg", FeatureKind::delta);
      add(std::string(v) + "_delta_pos", FeatureKind::delta);
    }
    add("track_out_neg", FeatureKind::terminal_indicator);
    add("track_out_pos", FeatureKind::terminal_indicator);
    add("pole_fell_neg", FeatureKind::terminal_indicator);
    add("pole_fell_pos", FeatureKind::terminal_indicator);
  }
}

Vector CartPole::reset(Rng& rng) const {
  Vector s = Vector::Zero(5);
  for (int i = 0; i < 4; ++i)
    s[i] = rng.uniform(-spec_.start_range, spec_.start_range);
  return s;
}

Vector CartPole::features(const Vector& prev, const Vector& next,
                          bool done) const {
  Vector f = Vector::Zero(desc_.schema.size());
  if (spec_.encoding == FeatureEncoding::discrete) {
    const double lo[4] = {-spec_.safe_x, -spec_.safe_x_dot, -safe_theta_,
                          -spec_.safe_theta_dot};
    for (int i = 0; i < 4; ++i) {
      if (next[i] < lo[i]) f[2 * i] = 1.0;
      if (next[i] > -lo[i]) f[2 * i + 1] = 1.0;
    }
    return f;
  }
  for (int i = 0; i < 4; ++i) {
    double d = next[i] - prev[i];
    f[2 * i] = d < 0.0 ? -d : 0.0;
    f[2 * i + 1] = d > 0.0 ? d : 0.0;
  }
  if (done) {
    if (next[kX] < -spec_.x_limit) f[8] = 1.0;
    if (next[kX] > spec_.x_limit) f[9] = 1.0;
    if (next[kTheta] < -theta_limit_) f[10] = 1.0;
    if (next[kTheta] > theta_limit_) f[11] = 1.0;
  }
  return f;
}

StepOutcome CartPole::step(const Vector& state, int action, Rng&) const {
  check_state(state);
  check_action(action);
  if (state[kStep] >= spec_.max_steps)
    throw std::invalid_argument("CartPole: step past the episode cap");

  const double force = action == 1 ? spec_.force : -spec_.force;
  const double total_mass = spec_.cart_mass + spec_.pole_mass;
  const double pole_mass_length = spec_.pole_mass * spec_.half_length;
  const double cos_t = std::cos(state[kTheta]);
  const double sin_t = std::sin(state[kTheta]);

  const double temp =
      (force + pole_mass_length * state[kThetaDot] * state[kThetaDot] * sin_t) /
      total_mass;
  const double theta_acc =
      (spec_.gravity * sin_t - cos_t * temp) /
      (spec_.half_length *
       (4.0 / 3.0 - spec_.pole_mass * cos_t * cos_t / total_mass));
  const double x_acc = temp - pole_mass_length * theta_acc * cos_t / total_mass;

  Vector next(5);
  next[kX] = state[kX] + spec_.dt * state[kXDot];
  next[kXDot] = state[kXDot] + spec_.dt * x_acc;
  next[kTheta] = state[kTheta] + spec_.dt * state[kThetaDot];
  next[kThetaDot] = state[kThetaDot] + spec_.dt * theta_acc;
  next[kStep] = state[kStep] + 1.0;

  const bool failed = std::abs(next[kX]) > spec_.x_limit ||
                      std::abs(next[kTheta]) > theta_limit_;
  const bool done = failed || next[kStep] >= spec_.max_steps;

  StepOutcome out;
  out.next_state = next;
  out.done = done;
  out.reward = done ? 0.0 : 1.0;
  out.features = features(state, next, done);
  return out;
}

}  // namespace esprl
