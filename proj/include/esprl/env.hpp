#pragma once

#include <cstdint>
#include <memory>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "esprl/rng.hpp"
#include "esprl/types.hpp"

namespace esprl {

// How a feature relates to the transition that produced it.
enum class FeatureKind { indicator, delta, terminal_indicator };

// One component of the cumulant vector, plus the output activation its GVF
// head should use. softmax_group >= 0 ties mutually exclusive terminal
// indicators together under one softmax.
struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::indicator;
  Act gvf_act = Act::linear;
  int softmax_group = -1;
};

const char* feature_kind_name(FeatureKind k);
FeatureKind feature_kind_from_name(const std::string& name);

struct FeatureSchema {
  std::vector<FeatureSpec> features;

  int size() const { return static_cast<int>(features.size()); }
  std::vector<std::string> names() const;
};

nlohmann::ordered_json schema_to_json(const FeatureSchema& schema);
FeatureSchema schema_from_json(const nlohmann::ordered_json& j);

struct EnvDescriptor {
  std::string id;
  int state_dim = 0;   // full internal state vector
  int obs_dim = 0;     // model input (prefix of the state vector)
  int action_count = 0;
  FeatureSchema schema;
  double default_beta = 0.99;   // reward discount
  double default_gamma = 0.99;  // feature accumulation discount
  // Factory overrides that rebuild this environment via make_env; stored in
  // checkpoints so a model file is enough to reconstruct its env.
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
};

struct StepOutcome {
  Vector next_state;
  double reward = 0.0;
  Vector features;
  bool done = false;
};

// Environments are pure transition functions over explicit state vectors:
// they hold parameters only, so any state can be injected mid-episode and
// rollouts from a shared env object are safe.
class Env {
 public:
  virtual ~Env() = default;

  virtual const EnvDescriptor& descriptor() const = 0;
  virtual Vector reset(Rng& rng) const = 0;
  virtual StepOutcome step(const Vector& state, int action, Rng& rng) const = 0;

  // Model input for a state. Default: leading obs_dim entries.
  virtual Vector observe(const Vector& state) const;

  // Per-action availability in a state; all actions by default.
  virtual std::vector<uint8_t> action_mask(const Vector& state) const;

 protected:
  void check_action(int action) const;
  void check_state(const Vector& state) const;
};

// Builds "gridworld", "cartpole" or "minitow", applying any recognized
// overrides from config. Unknown ids throw std::invalid_argument.
std::unique_ptr<Env> make_env(const std::string& id,
                              const nlohmann::ordered_json& config = {});

}  // namespace esprl
