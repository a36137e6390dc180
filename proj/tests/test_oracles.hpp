#pragma once

// Test-only reference implementations. Nothing here calls the jet engine
// except through the public single-point `forward`/`grad_x` entry points.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "pinncert/dnn.hpp"

namespace pinncert::testing {

/// Plain loop-by-loop evaluation of the layer compositions.
inline std::vector<double> naive_forward(const dnn::Network& net, const Eigen::VectorXd& x) {
  std::vector<double> h(x.data(), x.data() + x.size());
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const auto& layer = net.layer(l);
    std::vector<double> next(static_cast<std::size_t>(layer.weight.rows()));
    for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
      double a = layer.bias(i);
      for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) a += layer.weight(i, j) * h[static_cast<std::size_t>(j)];
      const bool hidden = l + 1 < net.num_layers();
      double s = a;
      if (hidden) {
        switch (net.activation()) {
          case dnn::Activation::tanh: s = std::tanh(a); break;
          case dnn::Activation::sigmoid: s = 1.0 / (1.0 + std::exp(-a)); break;
          case dnn::Activation::identity: break;
        }
      }
      next[static_cast<std::size_t>(i)] = s;
    }
    h = std::move(next);
  }
  return h;
}

/// max |a - b| / max(max |b|, floor): relative to the size of the object.
template <class A, class B>
double max_rel_error(const A& a, const B& b, double floor = 1e-8) {
  const double scale = std::max(b.cwiseAbs().maxCoeff(), floor);
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

inline Eigen::MatrixXd fd_jacobian(const dnn::Network& net, const Eigen::VectorXd& x, double h = 1e-4) {
  Eigen::MatrixXd jac(net.output_dim(), x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    jac.col(i) = (dnn::forward(net, xp) - dnn::forward(net, xm)) / (2 * h);
  }
  return jac;
}

inline Eigen::MatrixXd fd_hessian(const dnn::Network& net, const Eigen::VectorXd& x, int k, double h = 1e-4) {
  Eigen::MatrixXd hess(x.size(), x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    hess.row(i) = (dnn::grad_x(net, xp).row(k) - dnn::grad_x(net, xm).row(k)) / (2 * h);
  }
  return hess;
}

/// Central differences of a scalar functional of the parameters.
inline Eigen::VectorXd fd_param_grad(const std::function<double(const dnn::Network&)>& loss,
                                     const dnn::Network& net, double h = 1e-6) {
  const dnn::ParamVector theta = net.params();
  Eigen::VectorXd g(theta.size());
  dnn::Network work = net;
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    const double step = h * std::max(1.0, std::abs(theta(k)));
    dnn::ParamVector tp = theta, tm = theta;
    tp(k) += step;
    tm(k) -= step;
    work.set_params(tp);
    const double fp = loss(work);
    work.set_params(tm);
    const double fm = loss(work);
    g(k) = (fp - fm) / (2 * step);
  }
  return g;
}

inline Eigen::VectorXd fd_param_grad(const dnn::Network& net, std::span<const dnn::JetFunctional> terms,
                                     double h = 1e-6) {
  return fd_param_grad([&](const dnn::Network& n) { return dnn::evaluate_functionals(n, terms); }, net, h);
}

}  // namespace pinncert::testing
