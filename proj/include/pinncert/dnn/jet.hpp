#pragma once

// Batched second-order input-derivative propagation through a dense network,
// and the reverse pass that turns an adjoint on those derivatives into exact
// parameter gradients.
//
// Every quantity is stored as a (width x channels*points) matrix whose column
// block c holds channel c for all points: channel 0 is the value, channels
// 1..d the first partials, and the remaining channels the requested second
// partials d^2/dx_i dx_j (i <= j).

#include <Eigen/Dense>

#include <algorithm>
#include <utility>
#include <vector>

#include "pinncert/dnn/network.hpp"

namespace pinncert::dnn {

struct JetSpec {
  int dim = 2;
  int order = 0;
  std::vector<std::pair<int, int>> pairs;

  static JetSpec values(int dim) { return {dim, 0, {}}; }
  static JetSpec first(int dim) { return {dim, 1, {}}; }
  static JetSpec full(int dim) {
    JetSpec spec{dim, 2, {}};
    for (int i = 0; i < dim; ++i)
      for (int j = i; j < dim; ++j) spec.pairs.emplace_back(i, j);
    return spec;
  }
  static JetSpec with_pairs(int dim, std::vector<std::pair<int, int>> pairs) {
    for (auto& [i, j] : pairs) {
      require(i >= 0 && j >= 0 && i < dim && j < dim, "second-derivative pair out of range");
      if (i > j) std::swap(i, j);
    }
    return {dim, 2, std::move(pairs)};
  }

  int channels() const {
    return 1 + (order >= 1 ? dim : 0) + static_cast<int>(pairs.size());
  }
  int first_channel(int i) const { return 1 + i; }
  int pair_channel(int i, int j) const {
    if (i > j) std::swap(i, j);
    for (std::size_t k = 0; k < pairs.size(); ++k)
      if (pairs[k].first == i && pairs[k].second == j) return 1 + dim + static_cast<int>(k);
    return -1;
  }
};

/// Output (or adjoint) jets of a network over a point batch.
struct Jets {
  Eigen::MatrixXd data;  // outputs x channels*points
  JetSpec spec;
  Eigen::Index points = 0;

  static Jets zeros_like(const Jets& other) {
    return {Eigen::MatrixXd::Zero(other.data.rows(), other.data.cols()), other.spec, other.points};
  }

  auto channel(int k, int c) { return data.row(k).segment(c * points, points); }
  auto channel(int k, int c) const { return data.row(k).segment(c * points, points); }

  auto value(int k) { return channel(k, 0); }
  auto value(int k) const { return channel(k, 0); }
  auto d(int k, int i) {
    require(spec.order >= 1, "first derivatives were not propagated");
    return channel(k, spec.first_channel(i));
  }
  auto d(int k, int i) const {
    require(spec.order >= 1, "first derivatives were not propagated");
    return channel(k, spec.first_channel(i));
  }
  auto d2(int k, int i, int j) {
    const int c = spec.pair_channel(i, j);
    require(c >= 0, "second derivative pair was not propagated");
    return channel(k, c);
  }
  auto d2(int k, int i, int j) const {
    const int c = spec.pair_channel(i, j);
    require(c >= 0, "second derivative pair was not propagated");
    return channel(k, c);
  }
};

/// Everything the reverse pass needs from a forward propagation.
struct JetTape {
  JetSpec spec;
  Eigen::Index points = 0;
  std::vector<Eigen::MatrixXd> inputs;  // jets entering layer l
  std::vector<Eigen::MatrixXd> pre;     // pre-activation jets of hidden layer l
  std::vector<Eigen::ArrayXXd> s1, s2, s3;
  Jets output;
};

namespace detail {

inline Eigen::MatrixXd input_jets(const Eigen::MatrixXd& x, const JetSpec& spec) {
  const Eigen::Index p = x.cols();
  Eigen::MatrixXd in = Eigen::MatrixXd::Zero(x.rows(), spec.channels() * p);
  in.leftCols(p) = x;
  if (spec.order >= 1)
    for (int i = 0; i < spec.dim; ++i) in.row(i).segment(spec.first_channel(i) * p, p).setOnes();
  return in;
}

// Activation value and first three derivatives over a block of pre-activations.
template <class Derived>
void activation_arrays(Activation kind, const Eigen::ArrayBase<Derived>& a, Eigen::ArrayXXd& s0,
                       Eigen::ArrayXXd& s1, Eigen::ArrayXXd& s2, Eigen::ArrayXXd& s3) {
  switch (kind) {
    case Activation::tanh:
      // Written through exp, which Eigen vectorises; tanh() is scalar.
      s0 = 1.0 - 2.0 / ((2.0 * a).exp() + 1.0);
      s1 = 1.0 - s0.square();
      s2 = -2.0 * s0 * s1;
      s3 = s1 * (6.0 * s0.square() - 2.0);
      return;
    case Activation::sigmoid:
      s0 = 1.0 / (1.0 + (-a).exp());
      s1 = s0 * (1.0 - s0);
      s2 = s1 * (1.0 - 2.0 * s0);
      s3 = s1 * (1.0 - 6.0 * s0 + 6.0 * s0.square());
      return;
    case Activation::identity:
      s0 = a;
      s1 = Eigen::ArrayXXd::Ones(a.rows(), a.cols());
      s2 = Eigen::ArrayXXd::Zero(a.rows(), a.cols());
      s3 = Eigen::ArrayXXd::Zero(a.rows(), a.cols());
      return;
  }
}

}  // namespace detail

/// Forward pass over a batch of points (dim x P), recording the tape.
inline JetTape propagate(const Network& net, const Eigen::MatrixXd& points, const JetSpec& spec) {
  require(points.rows() == net.input_dim(), "point dimension does not match network input width");
  require(spec.dim == net.input_dim(), "jet spec dimension does not match network input width");
  JetTape tape;
  tape.spec = spec;
  tape.points = points.cols();
  const Eigen::Index p = points.cols();
  const int nc = spec.channels();
  const int d = spec.dim;
  const std::size_t nl = net.num_layers();

  Eigen::MatrixXd h = detail::input_jets(points, spec);
  for (std::size_t l = 0; l + 1 < nl; ++l) {
    const auto& layer = net.layer(l);
    Eigen::MatrixXd a = layer.weight * h;
    a.leftCols(p).colwise() += layer.bias;

    Eigen::ArrayXXd s0, s1, s2, s3;
    detail::activation_arrays(net.activation(), a.leftCols(p).array(), s0, s1, s2, s3);
    const Eigen::Index w = a.rows();

    Eigen::MatrixXd out(w, nc * p);
    out.leftCols(p) = s0.matrix();
    if (spec.order >= 1)
      for (int i = 0; i < d; ++i) {
        const int c = spec.first_channel(i);
        out.middleCols(c * p, p) = (s1 * a.middleCols(c * p, p).array()).matrix();
      }
    for (const auto& [i, j] : spec.pairs) {
      const int c = spec.pair_channel(i, j);
      const auto ai = a.middleCols(spec.first_channel(i) * p, p).array();
      const auto aj = a.middleCols(spec.first_channel(j) * p, p).array();
      out.middleCols(c * p, p) = (s2 * ai * aj + s1 * a.middleCols(c * p, p).array()).matrix();
    }

    tape.inputs.push_back(std::move(h));
    tape.pre.push_back(std::move(a));
    tape.s1.push_back(std::move(s1));
    tape.s2.push_back(std::move(s2));
    tape.s3.push_back(std::move(s3));
    h = std::move(out);
  }

  const auto& last = net.layer(nl - 1);
  Eigen::MatrixXd y = last.weight * h;
  y.leftCols(p).colwise() += last.bias;
  tape.inputs.push_back(std::move(h));
  tape.output = Jets{std::move(y), spec, p};
  return tape;
}

/// Reverse pass: accumulates d(loss)/d(theta) into `grad` given the adjoint
/// d(loss)/d(output jets). `grad` uses the Network::params() layout.
inline void backprop(const Network& net, const JetTape& tape, const Jets& adjoint, ParamVector& grad) {
  require(grad.size() == net.num_params(), "gradient vector length does not match architecture");
  require(adjoint.data.rows() == tape.output.data.rows() &&
              adjoint.data.cols() == tape.output.data.cols(),
          "adjoint shape does not match tape output");
  const auto& spec = tape.spec;
  const Eigen::Index p = tape.points;
  const int d = spec.dim;
  const std::size_t nl = net.num_layers();

  std::vector<Eigen::Index> offsets(nl);
  Eigen::Index k = 0;
  for (std::size_t l = 0; l < nl; ++l) {
    offsets[l] = k;
    k += net.layer(l).weight.size() + net.layer(l).bias.size();
  }
  auto accumulate = [&](std::size_t l, const Eigen::MatrixXd& a_bar) {
    const auto& layer = net.layer(l);
    Eigen::Map<Eigen::MatrixXd> gw(grad.data() + offsets[l], layer.weight.rows(), layer.weight.cols());
    gw.noalias() += a_bar * tape.inputs[l].transpose();
    grad.segment(offsets[l] + layer.weight.size(), layer.bias.size()) += a_bar.leftCols(p).rowwise().sum();
  };

  Eigen::MatrixXd a_bar = adjoint.data;
  accumulate(nl - 1, a_bar);
  if (nl == 1) return;
  Eigen::MatrixXd h_bar = net.layer(nl - 1).weight.transpose() * a_bar;

  for (std::size_t l = nl - 1; l-- > 0;) {
    const Eigen::MatrixXd& a = tape.pre[l];
    const auto& s1 = tape.s1[l];
    const auto& s2 = tape.s2[l];
    const auto& s3 = tape.s3[l];
    a_bar.resize(h_bar.rows(), h_bar.cols());

    auto blk = [p](auto& m, int c) { return m.middleCols(c * p, p).array(); };

    Eigen::ArrayXXd v_bar = s1 * blk(h_bar, 0);
    if (spec.order >= 1)
      for (int i = 0; i < d; ++i) {
        const int c = spec.first_channel(i);
        v_bar += s2 * blk(a, c) * blk(h_bar, c);
        blk(a_bar, c) = s1 * blk(h_bar, c);
      }
    for (const auto& [i, j] : spec.pairs) {
      const int c = spec.pair_channel(i, j);
      const int ci = spec.first_channel(i);
      const int cj = spec.first_channel(j);
      const auto hb = blk(h_bar, c);
      v_bar += (s3 * blk(a, ci) * blk(a, cj) + s2 * blk(a, c)) * hb;
      blk(a_bar, ci) += s2 * blk(a, cj) * hb;
      blk(a_bar, cj) += s2 * blk(a, ci) * hb;
      blk(a_bar, c) = s1 * hb;
    }
    blk(a_bar, 0) = v_bar;

    accumulate(l, a_bar);
    if (l > 0) h_bar = net.layer(l).weight.transpose() * a_bar;
  }
}

}  // namespace pinncert::dnn
