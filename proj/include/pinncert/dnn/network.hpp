#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "pinncert/dnn/activation.hpp"
#include "pinncert/error.hpp"

namespace pinncert::dnn {

/// Flat parameter vector. Layout: for each layer, W (column-major) then b.
using ParamVector = Eigen::VectorXd;

/// Half-width of the admissible box for all weights and the final bias.
struct WeightBound {
  double half_width = 50.0;

  static WeightBound unbounded() { return {std::numeric_limits<double>::infinity()}; }
};

inline void validate(const WeightBound& bound) {
  require(!std::isnan(bound.half_width) && bound.half_width >= 0.0,
          "weight bound must be a non-negative number");
}

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

/// Dense feed-forward network x -> W_L s(... s(W_1 x + b_1) ...) + b_L.
/// Hidden layers apply the activation; the output layer is affine.
class Network {
 public:
  Network() = default;

  Network(std::vector<int> widths, Activation activation)
      : widths_(std::move(widths)), activation_(activation) {
    require(widths_.size() >= 2, "network needs at least input and output widths");
    for (int w : widths_) require(w >= 1, "layer widths must be >= 1");
    require(widths_.front() <= 3, "input dimension must be 1, 2 or 3");
    for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
      layers_.push_back({Eigen::MatrixXd::Zero(widths_[l + 1], widths_[l]),
                         Eigen::VectorXd::Zero(widths_[l + 1])});
    }
  }

  int input_dim() const { return widths_.front(); }
  int output_dim() const { return widths_.back(); }
  const std::vector<int>& widths() const { return widths_; }
  Activation activation() const { return activation_; }
  std::size_t num_layers() const { return layers_.size(); }

  const DenseLayer& layer(std::size_t l) const { return layers_[l]; }
  DenseLayer& layer(std::size_t l) { return layers_[l]; }

  Eigen::Index num_params() const {
    Eigen::Index n = 0;
    for (const auto& layer : layers_) n += layer.weight.size() + layer.bias.size();
    return n;
  }

  ParamVector params() const {
    ParamVector theta(num_params());
    Eigen::Index k = 0;
    for (const auto& layer : layers_) {
      theta.segment(k, layer.weight.size()) =
          Eigen::Map<const Eigen::VectorXd>(layer.weight.data(), layer.weight.size());
      k += layer.weight.size();
      theta.segment(k, layer.bias.size()) = layer.bias;
      k += layer.bias.size();
    }
    return theta;
  }

  void set_params(const ParamVector& theta) {
    require(theta.size() == num_params(), "parameter vector length does not match architecture");
    Eigen::Index k = 0;
    for (auto& layer : layers_) {
      Eigen::Map<Eigen::VectorXd>(layer.weight.data(), layer.weight.size()) =
          theta.segment(k, layer.weight.size());
      k += layer.weight.size();
      layer.bias = theta.segment(k, layer.bias.size());
      k += layer.bias.size();
    }
  }

  /// True for entries that the weight bound constrains: every weight and the
  /// final bias. Hidden biases are free.
  std::vector<bool> bounded_mask() const {
    std::vector<bool> mask;
    mask.reserve(static_cast<std::size_t>(num_params()));
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      mask.insert(mask.end(), static_cast<std::size_t>(layers_[l].weight.size()), true);
      mask.insert(mask.end(), static_cast<std::size_t>(layers_[l].bias.size()),
                  l + 1 == layers_.size());
    }
    return mask;
  }

  bool operator==(const Network& other) const {
    if (widths_ != other.widths_ || activation_ != other.activation_) return false;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      if (layers_[l].weight != other.layers_[l].weight) return false;
      if (layers_[l].bias != other.layers_[l].bias) return false;
    }
    return true;
  }

 private:
  std::vector<int> widths_;
  Activation activation_ = Activation::tanh;
  std::vector<DenseLayer> layers_;
};

namespace detail {

// Portable uniform double in [0,1) from a 64-bit engine.
inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace detail

/// Clip weights and the final bias into [-B, B]. Hidden biases are untouched.
inline Network project_params(Network net, const WeightBound& bound) {
  validate(bound);
  const double b = bound.half_width;
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    auto& layer = net.layer(l);
    layer.weight = layer.weight.cwiseMax(-b).cwiseMin(b);
    if (l + 1 == net.num_layers()) layer.bias = layer.bias.cwiseMax(-b).cwiseMin(b);
  }
  return net;
}

/// Glorot-uniform weights, zero biases, then clipped to the bound box.
inline Network init_network(const std::vector<int>& widths, std::uint64_t seed,
                            const WeightBound& bound, Activation activation = Activation::tanh) {
  validate(bound);
  Network net(widths, activation);
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    auto& w = net.layer(l).weight;
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i)
        w(i, j) = limit * (2.0 * detail::unit_uniform(rng) - 1.0);
  }
  return project_params(std::move(net), bound);
}

inline double max_bounded_abs(const Network& net) {
  const ParamVector theta = net.params();
  const auto mask = net.bounded_mask();
  double m = 0.0;
  for (Eigen::Index k = 0; k < theta.size(); ++k)
    if (mask[static_cast<std::size_t>(k)]) m = std::max(m, std::abs(theta[k]));
  return m;
}

}  // namespace pinncert::dnn
