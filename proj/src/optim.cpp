#include "esprl/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace esprl {

const char* opt_name(OptKind k) {
  switch (k) {
    case OptKind::sgd: return "sgd";
    case OptKind::adam: return "adam";
  }
  throw std::logic_error("opt_name: unknown optimizer");
}

OptKind opt_from_name(const std::string& name) {
  if (name == "sgd") return OptKind::sgd;
  if (name == "adam") return OptKind::adam;
  throw std::invalid_argument("unknown optimizer name: " + name);
}

OptimizerState make_sgd(double lr) {
  OptimizerState opt;
  opt.kind = OptKind::sgd;
  opt.lr = lr;
  return opt;
}

OptimizerState make_adam(double lr, double beta1, double beta2, double eps) {
  OptimizerState opt;
  opt.kind = OptKind::adam;
  opt.lr = lr;
  opt.beta1 = beta1;
  opt.beta2 = beta2;
  opt.eps = eps;
  return opt;
}

void optimizer_step(OptimizerState& opt, MlpParams& mlp, const MlpGrads& grads) {
  const size_t L = mlp.layers.size();
  if (grads.weight.size() != L || grads.bias.size() != L)
    throw std::invalid_argument("optimizer_step: gradient layer count mismatch");
  for (size_t l = 0; l < L; ++l) {
    if (!grads.weight[l].allFinite() || !grads.bias[l].allFinite())
      throw std::runtime_error("optimizer_step: non-finite gradient in layer " +
                               std::to_string(l));
    if (grads.weight[l].rows() != mlp.layers[l].weight.rows() ||
        grads.weight[l].cols() != mlp.layers[l].weight.cols())
      throw std::invalid_argument("optimizer_step: gradient shape mismatch in layer " +
                                  std::to_string(l));
  }

  if (opt.kind == OptKind::sgd) {
    for (size_t l = 0; l < L; ++l) {
      mlp.layers[l].weight -= opt.lr * grads.weight[l];
      mlp.layers[l].bias -= opt.lr * grads.bias[l];
    }
    opt.step += 1;
    return;
  }

  // Adam with bias correction.
  if (opt.m_w.empty()) {
    for (size_t l = 0; l < L; ++l) {
      opt.m_w.push_back(Matrix::Zero(mlp.layers[l].weight.rows(),
                                     mlp.layers[l].weight.cols()));
      opt.v_w.push_back(Matrix::Zero(mlp.layers[l].weight.rows(),
                                     mlp.layers[l].weight.cols()));
      opt.m_b.push_back(Vector::Zero(mlp.layers[l].bias.size()));
      opt.v_b.push_back(Vector::Zero(mlp.layers[l].bias.size()));
    }
  }
  if (opt.m_w.size() != L)
    throw std::invalid_argument("optimizer_step: optimizer state layer count mismatch");

  opt.step += 1;
  const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step));
  const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step));
  for (size_t l = 0; l < L; ++l) {
    opt.m_w[l] = opt.beta1 * opt.m_w[l] + (1.0 - opt.beta1) * grads.weight[l];
    opt.v_w[l] = opt.beta2 * opt.v_w[l] +
                 (1.0 - opt.beta2) * grads.weight[l].cwiseProduct(grads.weight[l]);
    opt.m_b[l] = opt.beta1 * opt.m_b[l] + (1.0 - opt.beta1) * grads.bias[l];
    opt.v_b[l] = opt.beta2 * opt.v_b[l] +
                 (1.0 - opt.beta2) * grads.bias[l].cwiseProduct(grads.bias[l]);

    mlp.layers[l].weight.array() -=
        opt.lr * (opt.m_w[l].array() / c1) /
        ((opt.v_w[l].array() / c2).sqrt() + opt.eps);
    mlp.layers[l].bias.array() -=
        opt.lr * (opt.m_b[l].array() / c1) /
        ((opt.v_b[l].array() / c2).sqrt() + opt.eps);
  }
}

}  // namespace esprl
