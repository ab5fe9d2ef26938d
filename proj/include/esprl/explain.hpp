#pragma once

#include <string>
#include <vector>

#include "esprl/checkpoint.hpp"
#include "esprl/esp_model.hpp"

namespace esprl {

inline constexpr int kDefaultRiemannSteps = 30;
inline constexpr int kReportFormatVersion = 1;

// Contrastive explanation of preferring action_a over action_b in one
// state. theta holds path-integrated combiner gradients along the straight
// line from the b-side GVF vector to the a-side one, so
// contributions = theta .* delta decomposes the q gap feature by feature
// up to the quadrature residual.
struct Explanation {
  Vector obs;
  int action_a = 0;
  int action_b = 0;
  double q_a = 0.0;
  double q_b = 0.0;
  double q_gap = 0.0;
  Vector gvf_a;
  Vector gvf_b;
  Vector delta;
  Vector theta;
  Vector contributions;
  double residual = 0.0;      // q_gap - sum(contributions)
  std::vector<int> msx;       // filled only when q_gap > 0
  int riemann_steps = kDefaultRiemannSteps;
};

Vector delta_f(const EspModel& model, const Vector& obs, int action_a,
               int action_b);

// Midpoint-rule integral of the combiner gradient along the straight path
// from x_b to x_a, using exact backpropagated gradients at each node.
Vector integrated_gradient(const MlpParams& combiner, const Vector& x_a,
                           const Vector& x_b, int steps = kDefaultRiemannSteps);

Explanation igx(const EspModel& model, const Vector& obs, int action_a,
                int action_b, int steps = kDefaultRiemannSteps);

// Minimal sufficient explanation: the smallest set of positive
// contributions whose sum strictly exceeds the total opposing (negative)
// weight. Greedy by descending contribution, lower index on ties; this is
// cardinality-minimal because any qualifying set of size k is dominated by
// the k largest contributions. Throws if q_gap <= 0.
std::vector<int> msx(const Explanation& e);

Json explanation_to_json(const Explanation& e, const FeatureSchema& schema);
std::string explanation_text(const Explanation& e, const FeatureSchema& schema);

}  // namespace esprl
