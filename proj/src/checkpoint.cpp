#include "esprl/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

namespace esprl {

namespace {

Json matrix_to_json(const Matrix& m) {
  // Row-major flat array plus explicit shape.
  Json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  std::vector<double> data;
  data.reserve(static_cast<size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  j["data"] = data;
  return j;
}

Matrix matrix_from_json(const Json& j) {
  Matrix m(j.at("rows").get<Eigen::Index>(), j.at("cols").get<Eigen::Index>());
  const auto& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != m.size())
    throw std::runtime_error("matrix data length does not match shape");
  size_t k = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = data[k++].get<double>();
  return m;
}

Json vector_to_json(const Vector& v) {
  std::vector<double> data(v.data(), v.data() + v.size());
  return Json(data);
}

Vector vector_from_json(const Json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i)
    v[i] = j[static_cast<size_t>(i)].get<double>();
  return v;
}

Json activation_to_json(const ActivationMap& act) {
  Json j;
  Json units = Json::array();
  for (Act a : act.unit) units.push_back(act_name(a));
  j["unit"] = units;
  Json groups = Json::array();
  for (const SoftmaxGroup& g : act.groups)
    groups.push_back(Json{{"begin", g.begin}, {"end", g.end}});
  j["softmax_groups"] = groups;
  return j;
}

ActivationMap activation_from_json(const Json& j) {
  ActivationMap act;
  for (const auto& name : j.at("unit"))
    act.unit.push_back(act_from_name(name.get<std::string>()));
  for (const auto& g : j.at("softmax_groups"))
    act.groups.push_back(
        SoftmaxGroup{g.at("begin").get<int>(), g.at("end").get<int>()});
  return act;
}

}  // namespace

Json mlp_to_json(const MlpParams& mlp) {
  for (size_t l = 0; l < mlp.layers.size(); ++l)
    if (!mlp.layers[l].weight.allFinite() || !mlp.layers[l].bias.allFinite())
      throw std::runtime_error("mlp_to_json: non-finite parameter in layer " +
                               std::to_string(l));
  Json layers = Json::array();
  for (const Layer& layer : mlp.layers) {
    Json j;
    j["weight"] = matrix_to_json(layer.weight);
    j["bias"] = vector_to_json(layer.bias);
    j["activation"] = activation_to_json(layer.act);
    layers.push_back(std::move(j));
  }
  return Json{{"layers", layers}};
}

MlpParams mlp_from_json(const Json& j) {
  MlpParams mlp;
  for (const auto& lj : j.at("layers")) {
    Layer layer;
    layer.weight = matrix_from_json(lj.at("weight"));
    layer.bias = vector_from_json(lj.at("bias"));
    layer.act = activation_from_json(lj.at("activation"));
    mlp.layers.push_back(std::move(layer));
  }
  validate_mlp(mlp);
  return mlp;
}

Json optimizer_to_json(const OptimizerState& opt) {
  Json j;
  j["kind"] = opt_name(opt.kind);
  j["lr"] = opt.lr;
  j["beta1"] = opt.beta1;
  j["beta2"] = opt.beta2;
  j["eps"] = opt.eps;
  j["step"] = opt.step;
  Json moments = Json::array();
  for (size_t l = 0; l < opt.m_w.size(); ++l) {
    Json m;
    m["m_w"] = matrix_to_json(opt.m_w[l]);
    m["v_w"] = matrix_to_json(opt.v_w[l]);
    m["m_b"] = vector_to_json(opt.m_b[l]);
    m["v_b"] = vector_to_json(opt.v_b[l]);
    moments.push_back(std::move(m));
  }
  j["moments"] = moments;
  return j;
}

OptimizerState optimizer_from_json(const Json& j) {
  OptimizerState opt;
  opt.kind = opt_from_name(j.at("kind").get<std::string>());
  opt.lr = j.at("lr").get<double>();
  opt.beta1 = j.at("beta1").get<double>();
  opt.beta2 = j.at("beta2").get<double>();
  opt.eps = j.at("eps").get<double>();
  opt.step = j.at("step").get<long>();
  for (const auto& m : j.at("moments")) {
    opt.m_w.push_back(matrix_from_json(m.at("m_w")));
    opt.v_w.push_back(matrix_from_json(m.at("v_w")));
    opt.m_b.push_back(vector_from_json(m.at("m_b")));
    opt.v_b.push_back(vector_from_json(m.at("v_b")));
  }
  return opt;
}

Json rng_to_json(const Rng& rng) {
  return Json{{"seed", rng.seed()}, {"counter", rng.counter()}};
}

Rng rng_from_json(const Json& j) {
  Rng rng(j.at("seed").get<uint64_t>());
  rng.set_counter(j.at("counter").get<uint64_t>());
  return rng;
}

void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const std::exception& e) {
    throw std::runtime_error("invalid JSON in " + path + ": " + e.what());
  }
  return j;
}

}  // namespace esprl
