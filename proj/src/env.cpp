#include "esprl/env.hpp"

#include <stdexcept>

#include "esprl/cartpole.hpp"
#include "esprl/gridworld.hpp"
#include "esprl/minitow.hpp"

namespace esprl {

const char* feature_kind_name(FeatureKind k) {
  switch (k) {
    case FeatureKind::indicator: return "indicator";
    case FeatureKind::delta: return "delta";
    case FeatureKind::terminal_indicator: return "terminal_indicator";
  }
  throw std::logic_error("feature_kind_name: unknown kind");
}

FeatureKind feature_kind_from_name(const std::string& name) {
  if (name == "indicator") return FeatureKind::indicator;
  if (name == "delta") return FeatureKind::delta;
  if (name == "terminal_indicator") return FeatureKind::terminal_indicator;
  throw std::invalid_argument("unknown feature kind: " + name);
}

std::vector<std::string> FeatureSchema::names() const {
  std::vector<std::string> out;
  out.reserve(features.size());
  for (const FeatureSpec& f : features) out.push_back(f.name);
  return out;
}

nlohmann::ordered_json schema_to_json(const FeatureSchema& schema) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const FeatureSpec& f : schema.features)
    j.push_back({{"name", f.name},
                 {"kind", feature_kind_name(f.kind)},
                 {"gvf_act", act_name(f.gvf_act)},
                 {"softmax_group", f.softmax_group}});
  return j;
}

FeatureSchema schema_from_json(const nlohmann::ordered_json& j) {
  FeatureSchema schema;
  for (const auto& fj : j) {
    FeatureSpec f;
    f.name = fj.at("name").get<std::string>();
    f.kind = feature_kind_from_name(fj.at("kind").get<std::string>());
    f.gvf_act = act_from_name(fj.at("gvf_act").get<std::string>());
    f.softmax_group = fj.at("softmax_group").get<int>();
    schema.features.push_back(std::move(f));
  }
  return schema;
}

Vector Env::observe(const Vector& state) const {
  check_state(state);
  return state.head(descriptor().obs_dim);
}

std::vector<uint8_t> Env::action_mask(const Vector& state) const {
  check_state(state);
  return std::vector<uint8_t>(static_cast<size_t>(descriptor().action_count), 1);
}

void Env::check_action(int action) const {
  if (action < 0 || action >= descriptor().action_count)
    throw std::invalid_argument(descriptor().id + ": action " +
                                std::to_string(action) + " out of range [0, " +
                                std::to_string(descriptor().action_count) + ")");
}

void Env::check_state(const Vector& state) const {
  if (state.size() != descriptor().state_dim)
    throw std::invalid_argument(descriptor().id + ": state size " +
                                std::to_string(state.size()) + " != expected " +
                                std::to_string(descriptor().state_dim));
}

std::unique_ptr<Env> make_env(const std::string& id,
                              const nlohmann::ordered_json& config) {
  if (id == "gridworld") {
    GridWorldSpec spec = corridor_spec();
    if (config.contains("width")) spec.width = config.at("width").get<int>();
    if (config.contains("slip")) spec.slip = config.at("slip").get<double>();
    if (config.contains("beta")) spec.beta = config.at("beta").get<double>();
    if (config.contains("gamma")) spec.gamma = config.at("gamma").get<double>();
    if (config.contains("width") || config.contains("slip")) {
      GridWorldSpec base = corridor_spec(spec.width, spec.slip);
      base.beta = spec.beta;
      base.gamma = spec.gamma;
      spec = base;
    }
    return std::make_unique<GridWorld>(spec);
  }
  if (id == "cartpole") {
    CartPoleSpec spec;
    if (config.contains("encoding"))
      spec.encoding = feature_encoding_from_name(config.at("encoding").get<std::string>());
    if (config.contains("beta")) spec.beta = config.at("beta").get<double>();
    if (config.contains("gamma")) spec.gamma = config.at("gamma").get<double>();
    return std::make_unique<CartPole>(spec);
  }
  if (id == "minitow") {
    MiniTowSpec spec;
    if (config.contains("opponent"))
      spec.opponent = opponent_from_name(config.at("opponent").get<std::string>());
    if (config.contains("build_cap"))
      spec.build_cap = config.at("build_cap").get<int>();
    if (config.contains("beta")) spec.beta = config.at("beta").get<double>();
    if (config.contains("gamma")) spec.gamma = config.at("gamma").get<double>();
    return std::make_unique<MiniTow>(spec);
  }
  throw std::invalid_argument("unknown environment id: " + id);
}

}  // namespace esprl
