#pragma once

#include <string>

#include "esprl/env.hpp"

namespace esprl {

enum class FeatureEncoding { discrete, delta };

const char* feature_encoding_name(FeatureEncoding e);
FeatureEncoding feature_encoding_from_name(const std::string& name);

// Classic cart-pole balancing with two actions (push left, push right) and
// explicit Euler integration. State is [x, x_dot, theta, theta_dot, t]; the
// step counter is internal and the model sees the first four entries.
//
// Feature encodings:
//   discrete: eight indicators, one per side of the four safe intervals,
//     evaluated on the state after the step (also at termination).
//   delta: positive and negative parts of each variable's change, then four
//     terminal indicators for leaving the track or dropping the pole on
//     either side.
struct CartPoleSpec {
  FeatureEncoding encoding = FeatureEncoding::discrete;

  double gravity = 9.8;
  double cart_mass = 1.0;
  double pole_mass = 0.1;
  double half_length = 0.5;
  double force = 10.0;
  double dt = 0.02;

  double x_limit = 2.4;
  double theta_limit_deg = 12.0;
  int max_steps = 500;

  // Safe-interval bounds for the discrete encoding.
  double safe_x = 1.2;
  double safe_x_dot = 1.0;
  double safe_theta_deg = 6.0;
  double safe_theta_dot = 1.0;

  double start_range = 0.05;  // uniform(-r, r) init on all four variables

  double beta = 0.99;
  double gamma = 0.99;
};

class CartPole : public Env {
 public:
  explicit CartPole(CartPoleSpec spec = {});

  const EnvDescriptor& descriptor() const override { return desc_; }
  Vector reset(Rng& rng) const override;
  StepOutcome step(const Vector& state, int action, Rng& rng) const override;

  const CartPoleSpec& spec() const { return spec_; }

 private:
  Vector features(const Vector& prev, const Vector& next, bool done) const;

  CartPoleSpec spec_;
  EnvDescriptor desc_;
  double theta_limit_ = 0.0;
  double safe_theta_ = 0.0;
};

}  // namespace esprl
