#include "esprl/mlp.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace esprl {

const char* act_name(Act a) {
  switch (a) {
    case Act::linear: return "linear";
    case Act::relu: return "relu";
    case Act::sigmoid: return "sigmoid";
  }
  throw std::logic_error("act_name: unknown activation");
}

Act act_from_name(const std::string& name) {
  if (name == "linear") return Act::linear;
  if (name == "relu") return Act::relu;
  if (name == "sigmoid") return Act::sigmoid;
  throw std::invalid_argument("unknown activation name: " + name);
}

ActivationMap uniform_activation(Act a, int n) {
  ActivationMap map;
  map.unit.assign(static_cast<size_t>(n), a);
  return map;
}

int MlpParams::input_dim() const {
  if (layers.empty()) throw std::logic_error("MlpParams: no layers");
  return static_cast<int>(layers.front().weight.cols());
}

int MlpParams::output_dim() const {
  if (layers.empty()) throw std::logic_error("MlpParams: no layers");
  return static_cast<int>(layers.back().weight.rows());
}

void validate_mlp(const MlpParams& mlp) {
  if (mlp.layers.empty()) throw std::invalid_argument("mlp has no layers");
  for (size_t l = 0; l < mlp.layers.size(); ++l) {
    const Layer& layer = mlp.layers[l];
    const std::string where = "layer " + std::to_string(l);
    if (layer.weight.rows() != layer.bias.size())
      throw std::invalid_argument(where + ": bias size " +
                                  std::to_string(layer.bias.size()) +
                                  " != output size " +
                                  std::to_string(layer.weight.rows()));
    if (l > 0 && mlp.layers[l - 1].weight.rows() != layer.weight.cols())
      throw std::invalid_argument(
          where + ": input size " + std::to_string(layer.weight.cols()) +
          " != previous output size " +
          std::to_string(mlp.layers[l - 1].weight.rows()));
    const ActivationMap& act = layer.act;
    if (act.size() != layer.weight.rows())
      throw std::invalid_argument(where + ": activation map covers " +
                                  std::to_string(act.size()) + " outputs, layer has " +
                                  std::to_string(layer.weight.rows()));
    int prev_end = -1;
    for (const SoftmaxGroup& g : act.groups) {
      if (g.begin < 0 || g.end > act.size() || g.begin >= g.end)
        throw std::invalid_argument(where + ": bad softmax group [" +
                                    std::to_string(g.begin) + ", " +
                                    std::to_string(g.end) + ")");
      if (g.begin < prev_end)
        throw std::invalid_argument(where + ": overlapping or unsorted softmax groups");
      prev_end = g.end;
    }
  }
}

long param_count(const MlpParams& mlp) {
  long n = 0;
  for (const Layer& layer : mlp.layers)
    n += layer.weight.size() + layer.bias.size();
  return n;
}

namespace {

Vector apply_activation(const ActivationMap& act, const Vector& z) {
  Vector y(z.size());
  for (int i = 0; i < z.size(); ++i) {
    switch (act.unit[static_cast<size_t>(i)]) {
      case Act::linear: y[i] = z[i]; break;
      case Act::relu: y[i] = z[i] > 0.0 ? z[i] : 0.0; break;
      case Act::sigmoid: y[i] = 1.0 / (1.0 + std::exp(-z[i])); break;
    }
  }
  for (const SoftmaxGroup& g : act.groups) {
    double zmax = z.segment(g.begin, g.end - g.begin).maxCoeff();
    double sum = 0.0;
    for (int i = g.begin; i < g.end; ++i) {
      y[i] = std::exp(z[i] - zmax);
      sum += y[i];
    }
    for (int i = g.begin; i < g.end; ++i) y[i] /= sum;
  }
  return y;
}

// dL/dz from dL/dy. Softmax groups use the full Jacobian restricted to the
// group: dz_i = y_i * (dy_i - sum_j dy_j y_j).
Vector activation_backward(const ActivationMap& act, const Vector& z,
                           const Vector& y, const Vector& dy) {
  Vector dz(z.size());
  for (int i = 0; i < z.size(); ++i) {
    switch (act.unit[static_cast<size_t>(i)]) {
      case Act::linear: dz[i] = dy[i]; break;
      case Act::relu: dz[i] = z[i] > 0.0 ? dy[i] : 0.0; break;
      case Act::sigmoid: dz[i] = dy[i] * y[i] * (1.0 - y[i]); break;
    }
  }
  for (const SoftmaxGroup& g : act.groups) {
    int n = g.end - g.begin;
    double dot = dy.segment(g.begin, n).dot(y.segment(g.begin, n));
    for (int i = g.begin; i < g.end; ++i) dz[i] = y[i] * (dy[i] - dot);
  }
  return dz;
}

Matrix apply_activation_batch(const ActivationMap& act, const Matrix& z) {
  Matrix y(z.rows(), z.cols());
  for (int i = 0; i < z.rows(); ++i) {
    switch (act.unit[static_cast<size_t>(i)]) {
      case Act::linear: y.row(i) = z.row(i); break;
      case Act::relu: y.row(i) = z.row(i).cwiseMax(0.0); break;
      case Act::sigmoid:
        y.row(i) = ((-z.row(i).array()).exp() + 1.0).inverse();
        break;
    }
  }
  for (const SoftmaxGroup& g : act.groups) {
    const int n = g.end - g.begin;
    for (int c = 0; c < z.cols(); ++c) {
      double zmax = z.col(c).segment(g.begin, n).maxCoeff();
      double sum = 0.0;
      for (int i = g.begin; i < g.end; ++i) {
        y(i, c) = std::exp(z(i, c) - zmax);
        sum += y(i, c);
      }
      for (int i = g.begin; i < g.end; ++i) y(i, c) /= sum;
    }
  }
  return y;
}

Matrix activation_backward_batch(const ActivationMap& act, const Matrix& z,
                                 const Matrix& y, const Matrix& dy) {
  Matrix dz(z.rows(), z.cols());
  for (int i = 0; i < z.rows(); ++i) {
    switch (act.unit[static_cast<size_t>(i)]) {
      case Act::linear: dz.row(i) = dy.row(i); break;
      case Act::relu:
        dz.row(i) = (z.row(i).array() > 0.0).select(dy.row(i), 0.0);
        break;
      case Act::sigmoid:
        dz.row(i) =
            dy.row(i).array() * y.row(i).array() * (1.0 - y.row(i).array());
        break;
    }
  }
  for (const SoftmaxGroup& g : act.groups) {
    const int n = g.end - g.begin;
    for (int c = 0; c < z.cols(); ++c) {
      double dot = dy.col(c).segment(g.begin, n).dot(y.col(c).segment(g.begin, n));
      for (int i = g.begin; i < g.end; ++i)
        dz(i, c) = y(i, c) * (dy(i, c) - dot);
    }
  }
  return dz;
}

}  // namespace

Vector mlp_forward(const MlpParams& mlp, const Vector& input) {
  if (input.size() != mlp.input_dim())
    throw std::invalid_argument("mlp_forward: input size " +
                                std::to_string(input.size()) + " != expected " +
                                std::to_string(mlp.input_dim()));
  Vector x = input;
  for (const Layer& layer : mlp.layers)
    x = apply_activation(layer.act, layer.weight * x + layer.bias);
  return x;
}

ForwardTrace mlp_forward_traced(const MlpParams& mlp, const Vector& input) {
  if (input.size() != mlp.input_dim())
    throw std::invalid_argument("mlp_forward_traced: input size " +
                                std::to_string(input.size()) + " != expected " +
                                std::to_string(mlp.input_dim()));
  ForwardTrace trace;
  trace.input = input;
  trace.pre.reserve(mlp.layers.size());
  trace.post.reserve(mlp.layers.size());
  const Vector* x = &trace.input;
  for (const Layer& layer : mlp.layers) {
    trace.pre.push_back(layer.weight * (*x) + layer.bias);
    trace.post.push_back(apply_activation(layer.act, trace.pre.back()));
    x = &trace.post.back();
  }
  return trace;
}

MlpGrads zero_grads(const MlpParams& mlp) {
  MlpGrads g;
  g.weight.reserve(mlp.layers.size());
  g.bias.reserve(mlp.layers.size());
  for (const Layer& layer : mlp.layers) {
    g.weight.push_back(Matrix::Zero(layer.weight.rows(), layer.weight.cols()));
    g.bias.push_back(Vector::Zero(layer.bias.size()));
  }
  return g;
}

void accumulate(MlpGrads& into, const MlpGrads& from, double scale) {
  if (into.weight.size() != from.weight.size())
    throw std::invalid_argument("accumulate: gradient layer count mismatch");
  for (size_t l = 0; l < into.weight.size(); ++l) {
    into.weight[l] += scale * from.weight[l];
    into.bias[l] += scale * from.bias[l];
  }
}

void scale_grads(MlpGrads& grads, double scale) {
  for (size_t l = 0; l < grads.weight.size(); ++l) {
    grads.weight[l] *= scale;
    grads.bias[l] *= scale;
  }
}

Vector mlp_backward(const MlpParams& mlp, const ForwardTrace& trace,
                    const Vector& out_grad, MlpGrads* grads) {
  const size_t L = mlp.layers.size();
  if (trace.pre.size() != L || trace.post.size() != L)
    throw std::invalid_argument("mlp_backward: trace has " +
                                std::to_string(trace.pre.size()) +
                                " layers, network has " + std::to_string(L));
  if (trace.input.size() != mlp.input_dim())
    throw std::invalid_argument("mlp_backward: trace input size mismatch");
  if (out_grad.size() != mlp.output_dim())
    throw std::invalid_argument("mlp_backward: out_grad size " +
                                std::to_string(out_grad.size()) +
                                " != output size " +
                                std::to_string(mlp.output_dim()));
  if (grads && grads->weight.size() != L)
    throw std::invalid_argument("mlp_backward: grads layer count mismatch");

  Vector dy = out_grad;
  for (size_t l = L; l-- > 0;) {
    const Layer& layer = mlp.layers[l];
    if (trace.pre[l].size() != layer.weight.rows())
      throw std::invalid_argument("mlp_backward: trace layer " +
                                  std::to_string(l) + " size mismatch");
    Vector dz = activation_backward(layer.act, trace.pre[l], trace.post[l], dy);
    const Vector& x = (l == 0) ? trace.input : trace.post[l - 1];
    if (grads) {
      grads->weight[l].noalias() += dz * x.transpose();
      grads->bias[l] += dz;
    }
    dy = layer.weight.transpose() * dz;
  }
  return dy;
}

Matrix mlp_forward_batch(const MlpParams& mlp, const Matrix& inputs) {
  if (inputs.rows() != mlp.input_dim())
    throw std::invalid_argument("mlp_forward_batch: input rows " +
                                std::to_string(inputs.rows()) + " != expected " +
                                std::to_string(mlp.input_dim()));
  Matrix x = inputs;
  for (const Layer& layer : mlp.layers)
    x = apply_activation_batch(
        layer.act, (layer.weight * x).colwise() + layer.bias);
  return x;
}

BatchTrace mlp_forward_traced_batch(const MlpParams& mlp, const Matrix& inputs) {
  if (inputs.rows() != mlp.input_dim())
    throw std::invalid_argument("mlp_forward_traced_batch: input rows " +
                                std::to_string(inputs.rows()) +
                                " != expected " + std::to_string(mlp.input_dim()));
  BatchTrace trace;
  trace.input = inputs;
  const Matrix* x = &trace.input;
  for (const Layer& layer : mlp.layers) {
    trace.pre.push_back((layer.weight * (*x)).colwise() + layer.bias);
    trace.post.push_back(apply_activation_batch(layer.act, trace.pre.back()));
    x = &trace.post.back();
  }
  return trace;
}

Matrix mlp_backward_batch(const MlpParams& mlp, const BatchTrace& trace,
                          const Matrix& out_grads, MlpGrads* grads) {
  const size_t L = mlp.layers.size();
  if (trace.pre.size() != L || trace.post.size() != L)
    throw std::invalid_argument("mlp_backward_batch: trace layer count mismatch");
  if (out_grads.rows() != mlp.output_dim() ||
      out_grads.cols() != trace.input.cols())
    throw std::invalid_argument("mlp_backward_batch: out_grads shape mismatch");
  if (grads && grads->weight.size() != L)
    throw std::invalid_argument("mlp_backward_batch: grads layer count mismatch");

  Matrix dy = out_grads;
  for (size_t l = L; l-- > 0;) {
    const Layer& layer = mlp.layers[l];
    Matrix dz =
        activation_backward_batch(layer.act, trace.pre[l], trace.post[l], dy);
    const Matrix& x = (l == 0) ? trace.input : trace.post[l - 1];
    if (grads) {
      grads->weight[l].noalias() += dz * x.transpose();
      grads->bias[l] += dz.rowwise().sum();
    }
    dy = layer.weight.transpose() * dz;
  }
  return dy;
}

MlpParams make_mlp(const std::vector<int>& dims, Act hidden_act,
                   const ActivationMap& output_act, Rng& rng) {
  if (dims.size() < 2)
    throw std::invalid_argument("make_mlp: need at least input and output dims");
  if (output_act.size() != dims.back())
    throw std::invalid_argument("make_mlp: output activation map size " +
                                std::to_string(output_act.size()) +
                                " != output dim " + std::to_string(dims.back()));
  MlpParams mlp;
  for (size_t l = 0; l + 1 < dims.size(); ++l) {
    int fan_in = dims[l];
    int fan_out = dims[l + 1];
    if (fan_in <= 0 || fan_out <= 0)
      throw std::invalid_argument("make_mlp: non-positive layer dim");
    double bound = std::sqrt(6.0 / (fan_in + fan_out));
    Layer layer;
    layer.weight.resize(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r)
      for (int c = 0; c < fan_in; ++c)
        layer.weight(r, c) = rng.uniform(-bound, bound);
    layer.bias = Vector::Zero(fan_out);
    layer.act = (l + 2 < dims.size()) ? uniform_activation(hidden_act, fan_out)
                                      : output_act;
    mlp.layers.push_back(std::move(layer));
  }
  validate_mlp(mlp);
  return mlp;
}

}  // namespace esprl
