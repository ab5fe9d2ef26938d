#pragma once

#include <string>
#include <vector>

#include "esprl/checkpoint.hpp"
#include "esprl/env.hpp"
#include "esprl/mlp.hpp"

namespace esprl {

// Embedded self-prediction model: a GVF network predicts, per action, the
// discounted accumulation of every feature; a combiner maps that prediction
// vector to a scalar action value. q_value always goes through combine on
// gvf_predict, so the two views can never drift apart.
struct EspModel {
  MlpParams gvf_net;       // obs_dim -> feature_count * action_count
  MlpParams combiner_net;  // feature_count -> 1
  EnvDescriptor env;
  double beta = 0.99;   // reward discount used for the combiner target
  double gamma = 0.99;  // feature discount used for the GVF target

  int feature_count() const { return env.schema.size(); }
  int action_count() const { return env.action_count; }
  int obs_dim() const { return env.obs_dim; }
};

// GVF head widths come from the schema: each action's slice repeats the
// per-feature activations, with terminal softmax groups kept intact.
ActivationMap gvf_output_activation(const FeatureSchema& schema, int action_count);

EspModel make_esp_model(const EnvDescriptor& env,
                        const std::vector<int>& gvf_hidden,
                        const std::vector<int>& combiner_hidden, double beta,
                        double gamma, Rng& rng);

// Predicted feature accumulation for one action, or all actions as columns.
Vector gvf_predict(const EspModel& model, const Vector& obs, int action);
Matrix gvf_predict_all(const EspModel& model, const Vector& obs);

double combine(const EspModel& model, const Vector& gvf);
double q_value(const EspModel& model, const Vector& obs, int action);
Vector q_values(const EspModel& model, const Vector& obs);

// Highest-q action among unmasked ones, lowest index on ties. Throws if
// every action is masked out.
int greedy_action(const EspModel& model, const Vector& obs,
                  const std::vector<uint8_t>& mask);
int greedy_action(const EspModel& model, const Vector& obs);

Json model_to_json(const EspModel& model);
EspModel model_from_json(const Json& j);
void save_model(const std::string& path, const EspModel& model);
EspModel load_model(const std::string& path);

}  // namespace esprl
