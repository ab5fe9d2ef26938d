#pragma once

#include <Eigen/Dense>
#include <string>

namespace esprl {

using Scalar = double;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Per-output nonlinearity. Softmax is not listed here because it couples
// outputs; it is expressed as an index group on the activation map instead.
enum class Act { linear, relu, sigmoid };

const char* act_name(Act a);
Act act_from_name(const std::string& name);

}  // namespace esprl
