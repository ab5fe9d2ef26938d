#pragma once

#include <string>
#include <vector>

#include "esprl/mlp.hpp"
#include "esprl/types.hpp"

namespace esprl {

enum class OptKind { sgd, adam };

const char* opt_name(OptKind k);
OptKind opt_from_name(const std::string& name);

// Optimizer state for one network. Adam moment buffers are sized on first
// use so the same struct covers plain SGD without waste.
struct OptimizerState {
  OptKind kind = OptKind::sgd;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;

  std::vector<Matrix> m_w, v_w;
  std::vector<Vector> m_b, v_b;
};

OptimizerState make_sgd(double lr);
OptimizerState make_adam(double lr, double beta1 = 0.9, double beta2 = 0.999,
                         double eps = 1e-8);

// In-place update of mlp from grads. Throws std::runtime_error naming the
// layer if any gradient entry is non-finite.
void optimizer_step(OptimizerState& opt, MlpParams& mlp, const MlpGrads& grads);

}  // namespace esprl
