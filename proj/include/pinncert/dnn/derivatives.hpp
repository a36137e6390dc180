#pragma once

#include <Eigen/Dense>

#include <functional>
#include <span>

#include "pinncert/dnn/jet.hpp"

namespace pinncert::dnn {

inline Eigen::MatrixXd as_column(const Eigen::VectorXd& x) { return x; }

/// Network outputs at one point.
inline Eigen::VectorXd forward(const Network& net, const Eigen::VectorXd& x) {
  require(x.size() == net.input_dim(), "point dimension does not match network input width");
  return propagate(net, as_column(x), JetSpec::values(net.input_dim())).output.data.col(0);
}

/// Outputs for a batch of points (dim x P) -> (outputs x P).
inline Eigen::MatrixXd forward_batch(const Network& net, const Eigen::MatrixXd& points) {
  return propagate(net, points, JetSpec::values(net.input_dim())).output.data;
}

/// Jacobian d(output_k)/d(x_i), outputs x dim.
inline Eigen::MatrixXd grad_x(const Network& net, const Eigen::VectorXd& x) {
  require(x.size() == net.input_dim(), "point dimension does not match network input width");
  const int d = net.input_dim();
  const auto tape = propagate(net, as_column(x), JetSpec::first(d));
  Eigen::MatrixXd jac(net.output_dim(), d);
  for (int k = 0; k < net.output_dim(); ++k)
    for (int i = 0; i < d; ++i) jac(k, i) = tape.output.d(k, i)(0);
  return jac;
}

inline Eigen::MatrixXd hessian_x(const Network& net, const Eigen::VectorXd& x, int output) {
  require(x.size() == net.input_dim(), "point dimension does not match network input width");
  require(output >= 0 && output < net.output_dim(), "output index out of range");
  const int d = net.input_dim();
  const auto tape = propagate(net, as_column(x), JetSpec::full(d));
  Eigen::MatrixXd hess(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) hess(i, j) = tape.output.d2(output, i, j)(0);
  return hess;
}

inline double laplacian_x(const Network& net, const Eigen::VectorXd& x, int output) {
  return hessian_x(net, x, output).trace();
}

/// A discrete loss contribution: a sum over a point batch of smooth terms in
/// the network output jets. `evaluate` returns the value and, when `adjoint`
/// is non-null, writes d(value)/d(jets) into it (pre-sized to zeros).
struct JetFunctional {
  Eigen::MatrixXd points;
  JetSpec spec;
  std::function<double(const Jets& jets, Jets* adjoint)> evaluate;
};

/// Exact gradient of a sum of jet functionals with respect to every parameter.
inline double param_grad(const Network& net, std::span<const JetFunctional> terms, ParamVector& grad) {
  grad = ParamVector::Zero(net.num_params());
  double total = 0.0;
  for (const auto& term : terms) {
    const auto tape = propagate(net, term.points, term.spec);
    Jets adjoint = Jets::zeros_like(tape.output);
    total += term.evaluate(tape.output, &adjoint);
    backprop(net, tape, adjoint, grad);
  }
  return total;
}

inline double evaluate_functionals(const Network& net, std::span<const JetFunctional> terms) {
  double total = 0.0;
  for (const auto& term : terms) {
    const auto tape = propagate(net, term.points, term.spec);
    total += term.evaluate(tape.output, nullptr);
  }
  return total;
}

}  // namespace pinncert::dnn
