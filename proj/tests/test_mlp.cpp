#include <doctest.h>

#include <cmath>
#include <vector>

#include "esprl/mlp.hpp"

using namespace esprl;

namespace {

// Finite-difference oracle for dL/dp where L = out_grad . mlp(x). Perturbs
// one scalar parameter with central differences.
double fd_weight_grad(MlpParams mlp, const Vector& x, const Vector& out_grad,
                      size_t layer, int r, int c, double h = 1e-6) {
  mlp.layers[layer].weight(r, c) += h;
  const double up = out_grad.dot(mlp_forward(mlp, x));
  mlp.layers[layer].weight(r, c) -= 2 * h;
  const double dn = out_grad.dot(mlp_forward(mlp, x));
  return (up - dn) / (2 * h);
}

double fd_bias_grad(MlpParams mlp, const Vector& x, const Vector& out_grad,
                    size_t layer, int r, double h = 1e-6) {
  mlp.layers[layer].bias[r] += h;
  const double up = out_grad.dot(mlp_forward(mlp, x));
  mlp.layers[layer].bias[r] -= 2 * h;
  const double dn = out_grad.dot(mlp_forward(mlp, x));
  return (up - dn) / (2 * h);
}

Vector fd_input_grad(const MlpParams& mlp, Vector x, const Vector& out_grad,
                     double h = 1e-6) {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    x[i] += h;
    const double up = out_grad.dot(mlp_forward(mlp, x));
    x[i] -= 2 * h;
    const double dn = out_grad.dot(mlp_forward(mlp, x));
    x[i] += h;
    g[i] = (up - dn) / (2 * h);
  }
  return g;
}

// Absolute-or-relative closeness suited to central-difference accuracy.
bool close(double got, double want, double tol) {
  return std::abs(got - want) <= tol * std::max(1.0, std::abs(want));
}

void check_all_grads(const MlpParams& mlp, const Vector& x,
                     const Vector& out_grad, double tol = 5e-6) {
  ForwardTrace trace = mlp_forward_traced(mlp, x);
  MlpGrads grads = zero_grads(mlp);
  const Vector dx = mlp_backward(mlp, trace, out_grad, &grads);

  const Vector fd_dx = fd_input_grad(mlp, x, out_grad);
  for (Eigen::Index i = 0; i < x.size(); ++i)
    CHECK_MESSAGE(close(dx[i], fd_dx[i], tol), "input grad ", i);

  for (size_t l = 0; l < mlp.layers.size(); ++l) {
    const Layer& layer = mlp.layers[l];
    for (int r = 0; r < layer.weight.rows(); ++r) {
      for (int c = 0; c < layer.weight.cols(); ++c) {
        const double fd = fd_weight_grad(mlp, x, out_grad, l, r, c);
        CHECK_MESSAGE(close(grads.weight[l](r, c), fd, tol), "layer ", l,
                      " weight (", r, ",", c, ")");
      }
      const double fd = fd_bias_grad(mlp, x, out_grad, l, r);
      CHECK_MESSAGE(close(grads.bias[l][r], fd, tol), "layer ", l, " bias ", r);
    }
  }
}

}  // namespace

TEST_CASE("hand-computed forward pass through a tiny relu-sigmoid net") {
  // Layer 1: 2 -> 2 relu, layer 2: 2 -> 1 sigmoid. All values chosen so the
  // expected output can be derived on paper.
  MlpParams mlp;
  Layer l1;
  l1.weight.resize(2, 2);
  l1.weight << 1.0, -1.0, 0.5, 0.5;
  l1.bias = Vector::Zero(2);
  l1.act = uniform_activation(Act::relu, 2);
  Layer l2;
  l2.weight.resize(1, 2);
  l2.weight << 2.0, -1.0;
  l2.bias = Vector::Constant(1, 0.25);
  l2.act = uniform_activation(Act::sigmoid, 1);
  mlp.layers = {l1, l2};
  validate_mlp(mlp);

  Vector x(2);
  x << 1.0, 2.0;
  // z1 = (1*1 - 1*2, 0.5*1 + 0.5*2) = (-1, 1.5); relu -> (0, 1.5)
  // z2 = 2*0 - 1*1.5 + 0.25 = -1.25; sigmoid(-1.25)
  const double expected = 1.0 / (1.0 + std::exp(1.25));
  const Vector y = mlp_forward(mlp, x);
  REQUIRE(y.size() == 1);
  CHECK(y[0] == doctest::Approx(expected).epsilon(1e-15));
}

TEST_CASE("softmax layer output sums to one and matches direct formula") {
  MlpParams mlp;
  Layer l;
  l.weight = Matrix::Identity(3, 3);
  l.bias = Vector::Zero(3);
  l.act = uniform_activation(Act::linear, 3);
  l.act.groups.push_back({0, 3});
  mlp.layers = {l};
  validate_mlp(mlp);

  Vector x(3);
  x << 1.0, 2.0, 3.0;
  const Vector y = mlp_forward(mlp, x);
  const double denom = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  CHECK(y.sum() == doctest::Approx(1.0).epsilon(1e-15));
  for (int i = 0; i < 3; ++i)
    CHECK(y[i] == doctest::Approx(std::exp(x[i]) / denom).epsilon(1e-12));
}

TEST_CASE("backward gradients match finite differences on a relu net") {
  Rng rng(42);
  MlpParams mlp = make_mlp({3, 5, 4, 2}, Act::relu,
                           uniform_activation(Act::linear, 2), rng);
  Vector x(3);
  x << 0.3, -0.7, 1.1;
  Vector g(2);
  g << 1.0, -0.5;
  check_all_grads(mlp, x, g);
}

TEST_CASE("backward gradients match finite differences with sigmoid outputs") {
  Rng rng(7);
  MlpParams mlp = make_mlp({4, 6, 3}, Act::relu,
                           uniform_activation(Act::sigmoid, 3), rng);
  Vector x(4);
  x << -0.2, 0.9, 0.4, -1.3;
  Vector g(3);
  g << 0.7, -1.2, 0.3;
  check_all_grads(mlp, x, g);
}

TEST_CASE("backward gradients match finite differences through softmax groups") {
  // Output layout: [sigmoid, softmax x3, linear], exercising the mixed
  // activation map used by the war-game feature heads.
  Rng rng(99);
  MlpParams mlp = make_mlp({3, 8, 5}, Act::relu,
                           uniform_activation(Act::sigmoid, 5), rng);
  ActivationMap& out = mlp.layers.back().act;
  out.unit[4] = Act::linear;
  out.groups.push_back({1, 4});
  validate_mlp(mlp);

  Vector x(3);
  x << 0.25, -0.5, 0.75;
  Vector g(5);
  g << 1.0, 0.5, -0.25, 0.125, -1.0;
  check_all_grads(mlp, x, g);
}

TEST_CASE("batched forward and backward agree with the per-sample path") {
  Rng rng(13);
  MlpParams mlp = make_mlp({4, 7, 6, 3}, Act::relu,
                           uniform_activation(Act::sigmoid, 3), rng);
  mlp.layers.back().act.unit[0] = Act::linear;
  mlp.layers.back().act.groups.push_back({1, 3});
  validate_mlp(mlp);

  const int batch = 9;
  Matrix xs(4, batch), gs(3, batch);
  Rng data(21);
  for (int j = 0; j < batch; ++j)
    for (int i = 0; i < 4; ++i) xs(i, j) = data.normal();
  for (int j = 0; j < batch; ++j)
    for (int i = 0; i < 3; ++i) gs(i, j) = data.normal();

  BatchTrace bt = mlp_forward_traced_batch(mlp, xs);
  MlpGrads batch_grads = zero_grads(mlp);
  const Matrix dxs = mlp_backward_batch(mlp, bt, gs, &batch_grads);

  MlpGrads sum_grads = zero_grads(mlp);
  for (int j = 0; j < batch; ++j) {
    ForwardTrace t = mlp_forward_traced(mlp, xs.col(j));
    for (size_t l = 0; l < mlp.layers.size(); ++l) {
      CHECK((t.post[l] - bt.post[l].col(j)).lpNorm<Eigen::Infinity>() < 1e-12);
    }
    const Vector dx = mlp_backward(mlp, t, gs.col(j), &sum_grads);
    CHECK((dx - dxs.col(j)).lpNorm<Eigen::Infinity>() < 1e-12);
  }
  for (size_t l = 0; l < mlp.layers.size(); ++l) {
    CHECK((sum_grads.weight[l] - batch_grads.weight[l])
              .lpNorm<Eigen::Infinity>() < 1e-10);
    CHECK((sum_grads.bias[l] - batch_grads.bias[l]).lpNorm<Eigen::Infinity>() <
          1e-10);
  }
}

TEST_CASE("initialization respects glorot uniform bounds") {
  Rng rng(1);
  MlpParams mlp = make_mlp({10, 20, 5}, Act::relu,
                           uniform_activation(Act::linear, 5), rng);
  REQUIRE(mlp.layers.size() == 2);
  const double b0 = std::sqrt(6.0 / (10 + 20));
  const double b1 = std::sqrt(6.0 / (20 + 5));
  CHECK(mlp.layers[0].weight.cwiseAbs().maxCoeff() <= b0);
  CHECK(mlp.layers[1].weight.cwiseAbs().maxCoeff() <= b1);
  // Weights actually spread over the interval rather than collapsing.
  CHECK(mlp.layers[0].weight.cwiseAbs().maxCoeff() > 0.5 * b0);
  CHECK(mlp.layers[0].bias.cwiseAbs().maxCoeff() == 0.0);
  CHECK(param_count(mlp) == 10 * 20 + 20 + 20 * 5 + 5);
}

TEST_CASE("validate_mlp rejects inconsistent shapes and bad groups") {
  Rng rng(2);
  MlpParams mlp = make_mlp({3, 4, 2}, Act::relu,
                           uniform_activation(Act::linear, 2), rng);
  SUBCASE("dimension mismatch between layers") {
    mlp.layers[1].weight.resize(2, 5);
    CHECK_THROWS_AS(validate_mlp(mlp), std::invalid_argument);
  }
  SUBCASE("bias length mismatch") {
    mlp.layers[0].bias = Vector::Zero(3);
    CHECK_THROWS_AS(validate_mlp(mlp), std::invalid_argument);
  }
  SUBCASE("softmax group out of range") {
    mlp.layers[1].act.groups.push_back({1, 3});
    CHECK_THROWS_AS(validate_mlp(mlp), std::invalid_argument);
  }
  SUBCASE("overlapping softmax groups") {
    mlp.layers[1].act.groups.push_back({0, 2});
    mlp.layers[1].act.groups.push_back({1, 2});
    CHECK_THROWS_AS(validate_mlp(mlp), std::invalid_argument);
  }
}
