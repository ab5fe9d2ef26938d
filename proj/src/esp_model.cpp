#include "esprl/esp_model.hpp"

#include <limits>
#include <map>
#include <stdexcept>

namespace esprl {

ActivationMap gvf_output_activation(const FeatureSchema& schema,
                                    int action_count) {
  const int n = schema.size();
  if (n <= 0) throw std::invalid_argument("gvf_output_activation: empty schema");
  if (action_count <= 0)
    throw std::invalid_argument("gvf_output_activation: no actions");

  // Features sharing a softmax group id must be contiguous so the group can
  // be expressed as an index range.
  std::map<int, std::pair<int, int>> group_span;  // id -> [first, last]
  for (int i = 0; i < n; ++i) {
    int g = schema.features[static_cast<size_t>(i)].softmax_group;
    if (g < 0) continue;
    auto it = group_span.find(g);
    if (it == group_span.end())
      group_span.emplace(g, std::make_pair(i, i));
    else if (i == it->second.second + 1)
      it->second.second = i;
    else
      throw std::invalid_argument(
          "gvf_output_activation: softmax group " + std::to_string(g) +
          " is not contiguous in the schema");
  }

  ActivationMap map;
  map.unit.reserve(static_cast<size_t>(n * action_count));
  for (int a = 0; a < action_count; ++a) {
    for (int i = 0; i < n; ++i)
      map.unit.push_back(schema.features[static_cast<size_t>(i)].gvf_act);
    for (const auto& [g, span] : group_span)
      map.groups.push_back(
          SoftmaxGroup{a * n + span.first, a * n + span.second + 1});
  }
  return map;
}

EspModel make_esp_model(const EnvDescriptor& env,
                        const std::vector<int>& gvf_hidden,
                        const std::vector<int>& combiner_hidden, double beta,
                        double gamma, Rng& rng) {
  EspModel model;
  model.env = env;
  model.beta = beta;
  model.gamma = gamma;

  const int n = env.schema.size();
  std::vector<int> gvf_dims;
  gvf_dims.push_back(env.obs_dim);
  gvf_dims.insert(gvf_dims.end(), gvf_hidden.begin(), gvf_hidden.end());
  gvf_dims.push_back(n * env.action_count);
  Rng gvf_rng = rng.sub("init_gvf");
  model.gvf_net = make_mlp(gvf_dims, Act::relu,
                           gvf_output_activation(env.schema, env.action_count),
                           gvf_rng);

  std::vector<int> comb_dims;
  comb_dims.push_back(n);
  comb_dims.insert(comb_dims.end(), combiner_hidden.begin(),
                   combiner_hidden.end());
  comb_dims.push_back(1);
  Rng comb_rng = rng.sub("init_combiner");
  model.combiner_net =
      make_mlp(comb_dims, Act::relu, uniform_activation(Act::linear, 1),
               comb_rng);
  return model;
}

Vector gvf_predict(const EspModel& model, const Vector& obs, int action) {
  if (action < 0 || action >= model.action_count())
    throw std::invalid_argument("gvf_predict: action " +
                                std::to_string(action) + " out of range");
  Vector all = mlp_forward(model.gvf_net, obs);
  return all.segment(action * model.feature_count(), model.feature_count());
}

Matrix gvf_predict_all(const EspModel& model, const Vector& obs) {
  Vector all = mlp_forward(model.gvf_net, obs);
  const int n = model.feature_count();
  Matrix out(n, model.action_count());
  for (int a = 0; a < model.action_count(); ++a)
    out.col(a) = all.segment(a * n, n);
  return out;
}

double combine(const EspModel& model, const Vector& gvf) {
  return mlp_forward(model.combiner_net, gvf)[0];
}

double q_value(const EspModel& model, const Vector& obs, int action) {
  return combine(model, gvf_predict(model, obs, action));
}

Vector q_values(const EspModel& model, const Vector& obs) {
  Matrix gvf = gvf_predict_all(model, obs);
  Vector q(model.action_count());
  for (int a = 0; a < model.action_count(); ++a)
    q[a] = combine(model, gvf.col(a));
  return q;
}

int greedy_action(const EspModel& model, const Vector& obs,
                  const std::vector<uint8_t>& mask) {
  if (static_cast<int>(mask.size()) != model.action_count())
    throw std::invalid_argument("greedy_action: mask size mismatch");
  Vector q = q_values(model, obs);
  int best = -1;
  double best_q = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < model.action_count(); ++a) {
    if (!mask[static_cast<size_t>(a)]) continue;
    if (best < 0 || q[a] > best_q) {
      best = a;
      best_q = q[a];
    }
  }
  if (best < 0) throw std::runtime_error("greedy_action: every action is masked");
  return best;
}

int greedy_action(const EspModel& model, const Vector& obs) {
  return greedy_action(
      model, obs,
      std::vector<uint8_t>(static_cast<size_t>(model.action_count()), 1));
}

Json model_to_json(const EspModel& model) {
  Json env;
  env["id"] = model.env.id;
  env["state_dim"] = model.env.state_dim;
  env["obs_dim"] = model.env.obs_dim;
  env["action_count"] = model.env.action_count;
  env["default_beta"] = model.env.default_beta;
  env["default_gamma"] = model.env.default_gamma;
  env["config"] = model.env.config;
  env["schema"] = schema_to_json(model.env.schema);

  Json j;
  j["format_version"] = kCheckpointFormatVersion;
  j["kind"] = "esp_model";
  j["env"] = env;
  j["beta"] = model.beta;
  j["gamma"] = model.gamma;
  j["gvf_net"] = mlp_to_json(model.gvf_net);
  j["combiner_net"] = mlp_to_json(model.combiner_net);
  return j;
}

EspModel model_from_json(const Json& j) {
  const int version = j.at("format_version").get<int>();
  if (version != kCheckpointFormatVersion)
    throw std::runtime_error("unsupported checkpoint format version " +
                             std::to_string(version));
  EspModel model;
  const Json& env = j.at("env");
  model.env.id = env.at("id").get<std::string>();
  model.env.state_dim = env.at("state_dim").get<int>();
  model.env.obs_dim = env.at("obs_dim").get<int>();
  model.env.action_count = env.at("action_count").get<int>();
  model.env.default_beta = env.at("default_beta").get<double>();
  model.env.default_gamma = env.at("default_gamma").get<double>();
  model.env.config = env.at("config");
  model.env.schema = schema_from_json(env.at("schema"));
  model.beta = j.at("beta").get<double>();
  model.gamma = j.at("gamma").get<double>();
  model.gvf_net = mlp_from_json(j.at("gvf_net"));
  model.combiner_net = mlp_from_json(j.at("combiner_net"));

  if (model.gvf_net.input_dim() != model.env.obs_dim ||
      model.gvf_net.output_dim() !=
          model.feature_count() * model.action_count() ||
      model.combiner_net.input_dim() != model.feature_count() ||
      model.combiner_net.output_dim() != 1)
    throw std::runtime_error("checkpoint network shapes do not match its schema");
  return model;
}

void save_model(const std::string& path, const EspModel& model) {
  write_json_file(path, model_to_json(model));
}

EspModel load_model(const std::string& path) {
  return model_from_json(read_json_file(path));
}

}  // namespace esprl
