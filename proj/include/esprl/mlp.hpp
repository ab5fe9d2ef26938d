#pragma once

#include <vector>

#include "esprl/rng.hpp"
#include "esprl/types.hpp"

namespace esprl {

// Half-open output index range that shares one softmax.
struct SoftmaxGroup {
  int begin = 0;
  int end = 0;
};

// Output nonlinearity of one layer. Each output has a unit activation;
// outputs covered by a softmax group ignore their unit entry and are
// normalized jointly instead. Groups must be disjoint and in range.
struct ActivationMap {
  std::vector<Act> unit;
  std::vector<SoftmaxGroup> groups;

  int size() const { return static_cast<int>(unit.size()); }
};

ActivationMap uniform_activation(Act a, int n);

struct Layer {
  Matrix weight;  // rows = outputs, cols = inputs
  Vector bias;
  ActivationMap act;
};

struct MlpParams {
  std::vector<Layer> layers;

  int input_dim() const;
  int output_dim() const;
};

// Throws std::invalid_argument naming the offending layer if shapes or
// activation maps are inconsistent.
void validate_mlp(const MlpParams& mlp);

long param_count(const MlpParams& mlp);

// Everything mlp_backward needs: input, pre-activations z and
// post-activations y per layer. post.back() is the network output.
struct ForwardTrace {
  Vector input;
  std::vector<Vector> pre;
  std::vector<Vector> post;
};

Vector mlp_forward(const MlpParams& mlp, const Vector& input);
ForwardTrace mlp_forward_traced(const MlpParams& mlp, const Vector& input);

struct MlpGrads {
  std::vector<Matrix> weight;
  std::vector<Vector> bias;
};

MlpGrads zero_grads(const MlpParams& mlp);
void accumulate(MlpGrads& into, const MlpGrads& from, double scale = 1.0);
void scale_grads(MlpGrads& grads, double scale);

// Backpropagates out_grad (dL/dy at the output) through the trace. Writes
// parameter gradients into *grads if non-null (accumulating) and returns
// dL/dx at the input. Throws if the trace does not match the network.
Vector mlp_backward(const MlpParams& mlp, const ForwardTrace& trace,
                    const Vector& out_grad, MlpGrads* grads);

// Batched variants treating matrix columns as independent samples. They
// agree with the per-sample path up to floating-point summation order and
// let one GEMM replace a loop of GEMVs.
struct BatchTrace {
  Matrix input;
  std::vector<Matrix> pre;
  std::vector<Matrix> post;
};

Matrix mlp_forward_batch(const MlpParams& mlp, const Matrix& inputs);
BatchTrace mlp_forward_traced_batch(const MlpParams& mlp, const Matrix& inputs);

// Parameter gradients are summed over columns; returns dL/dx per column.
Matrix mlp_backward_batch(const MlpParams& mlp, const BatchTrace& trace,
                          const Matrix& out_grads, MlpGrads* grads);

// Uniform(-b, b) init with b = sqrt(6 / (fan_in + fan_out)), biases zero.
// dims lists layer widths input-first; hidden layers get hidden_act and the
// last layer gets output_act.
MlpParams make_mlp(const std::vector<int>& dims, Act hidden_act,
                   const ActivationMap& output_act, Rng& rng);

}  // namespace esprl
