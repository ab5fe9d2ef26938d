#include "esprl/explain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace esprl {

Vector delta_f(const EspModel& model, const Vector& obs, int action_a,
               int action_b) {
  return gvf_predict(model, obs, action_a) - gvf_predict(model, obs, action_b);
}

Vector integrated_gradient(const MlpParams& combiner, const Vector& x_a,
                           const Vector& x_b, int steps) {
  if (steps <= 0)
    throw std::invalid_argument("integrated_gradient: steps must be positive");
  if (x_a.size() != x_b.size() || x_a.size() != combiner.input_dim())
    throw std::invalid_argument("integrated_gradient: endpoint size mismatch");

  const Vector diff = x_a - x_b;
  Vector theta = Vector::Zero(x_a.size());
  const Vector unit = Vector::Ones(1);
  for (int k = 0; k < steps; ++k) {
    const double alpha = (k + 0.5) / steps;
    ForwardTrace trace = mlp_forward_traced(combiner, x_b + alpha * diff);
    theta += mlp_backward(combiner, trace, unit, nullptr);
  }
  return theta / steps;
}

Explanation igx(const EspModel& model, const Vector& obs, int action_a,
                int action_b, int steps) {
  if (action_a == action_b)
    throw std::invalid_argument("igx: actions must differ");
  Explanation e;
  e.obs = obs;
  e.action_a = action_a;
  e.action_b = action_b;
  e.gvf_a = gvf_predict(model, obs, action_a);
  e.gvf_b = gvf_predict(model, obs, action_b);
  e.q_a = combine(model, e.gvf_a);
  e.q_b = combine(model, e.gvf_b);
  e.q_gap = e.q_a - e.q_b;
  e.delta = e.gvf_a - e.gvf_b;
  e.theta = integrated_gradient(model.combiner_net, e.gvf_a, e.gvf_b, steps);
  e.contributions = e.theta.cwiseProduct(e.delta);
  e.residual = e.q_gap - e.contributions.sum();
  e.riemann_steps = steps;
  if (e.q_gap > 0.0) e.msx = msx(e);
  return e;
}

std::vector<int> msx(const Explanation& e) {
  if (!(e.q_gap > 0.0))
    throw std::invalid_argument(
        "msx: action_a is not preferred (q_gap <= 0), nothing to justify");

  std::vector<int> positives;
  double opposing = 0.0;
  for (int i = 0; i < e.contributions.size(); ++i) {
    if (e.contributions[i] > 0.0)
      positives.push_back(i);
    else
      opposing += -e.contributions[i];
  }
  // Descending contribution, lower index on ties.
  std::sort(positives.begin(), positives.end(), [&](int a, int b) {
    if (e.contributions[a] != e.contributions[b])
      return e.contributions[a] > e.contributions[b];
    return a < b;
  });

  std::vector<int> selected;
  double sum = 0.0;
  for (int i : positives) {
    if (sum > opposing) break;
    selected.push_back(i);
    sum += e.contributions[i];
  }
  if (sum <= opposing) return {};  // positives cannot outweigh the opposition
  std::sort(selected.begin(), selected.end());
  return selected;
}

Json explanation_to_json(const Explanation& e, const FeatureSchema& schema) {
  if (schema.size() != e.delta.size())
    throw std::invalid_argument("explanation_to_json: schema size mismatch");
  auto vec = [](const Vector& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
  };
  Json j;
  j["format_version"] = kReportFormatVersion;
  j["state"] = vec(e.obs);
  j["action_a"] = e.action_a;
  j["action_b"] = e.action_b;
  j["q_a"] = e.q_a;
  j["q_b"] = e.q_b;
  j["q_gap"] = e.q_gap;
  j["gvf_a"] = vec(e.gvf_a);
  j["gvf_b"] = vec(e.gvf_b);
  j["delta"] = vec(e.delta);
  j["theta"] = vec(e.theta);
  j["contributions"] = vec(e.contributions);
  j["msx"] = e.msx;
  j["residual"] = e.residual;
  j["riemann_steps"] = e.riemann_steps;
  j["feature_names"] = schema.names();
  return j;
}

std::string explanation_text(const Explanation& e, const FeatureSchema& schema) {
  if (schema.size() != e.delta.size())
    throw std::invalid_argument("explanation_text: schema size mismatch");
  char buf[256];
  std::string out;
  std::snprintf(buf, sizeof(buf),
                "why action %d over action %d:  q_a=%.6g  q_b=%.6g  gap=%.6g\n",
                e.action_a, e.action_b, e.q_a, e.q_b, e.q_gap);
  out += buf;

  size_t name_w = 7;
  for (const FeatureSpec& f : schema.features)
    name_w = std::max(name_w, f.name.size());

  std::snprintf(buf, sizeof(buf), "%-*s %10s %10s %10s %10s %11s\n",
                static_cast<int>(name_w), "feature", "gvf_a", "gvf_b", "delta",
                "theta", "contrib");
  out += buf;

  const double max_abs =
      std::max(e.contributions.cwiseAbs().maxCoeff(), 1e-12);
  for (int i = 0; i < e.contributions.size(); ++i) {
    const bool in_msx =
        std::find(e.msx.begin(), e.msx.end(), i) != e.msx.end();
    std::snprintf(buf, sizeof(buf), "%-*s %10.4f %10.4f %10.4f %10.4f %11.5f ",
                  static_cast<int>(name_w),
                  schema.features[static_cast<size_t>(i)].name.c_str(),
                  e.gvf_a[i], e.gvf_b[i], e.delta[i], e.theta[i],
                  e.contributions[i]);
    out += buf;
    const int bar =
        static_cast<int>(std::round(20.0 * std::abs(e.contributions[i]) / max_abs));
    out += std::string(static_cast<size_t>(bar),
                       e.contributions[i] >= 0.0 ? '+' : '-');
    if (in_msx) out += "  [msx]";
    out += "\n";
  }

  double opposing = 0.0, support = 0.0;
  for (int i = 0; i < e.contributions.size(); ++i) {
    if (e.contributions[i] < 0.0) opposing += -e.contributions[i];
  }
  for (int i : e.msx) support += e.contributions[i];
  if (!e.msx.empty()) {
    out += "msx: {";
    for (size_t k = 0; k < e.msx.size(); ++k) {
      if (k) out += ", ";
      out += schema.features[static_cast<size_t>(e.msx[k])].name;
    }
    std::snprintf(buf, sizeof(buf), "}  support %.5f > opposing %.5f\n", support,
                  opposing);
    out += buf;
  } else if (e.q_gap > 0.0) {
    out += "msx: none (no positive set outweighs the opposition)\n";
  }
  std::snprintf(buf, sizeof(buf), "residual %.3g with %d integration steps\n",
                e.residual, e.riemann_steps);
  out += buf;
  return out;
}

}  // namespace esprl
