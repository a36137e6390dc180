#pragma once

#include <cmath>
#include <string>
#include <string_view>

#include "pinncert/error.hpp"

namespace pinncert::dnn {

// Only C-infinity activations are offered; second input-derivatives of the
// network must exist everywhere.
enum class Activation { tanh, sigmoid, identity };

/// sigma and its first three derivatives at one pre-activation value.
struct ActivationJet {
  double s0, s1, s2, s3;
};

inline ActivationJet activation_jet(Activation kind, double a) {
  switch (kind) {
    case Activation::tanh: {
      const double t = std::tanh(a);
      const double d1 = 1.0 - t * t;
      return {t, d1, -2.0 * t * d1, d1 * (6.0 * t * t - 2.0)};
    }
    case Activation::sigmoid: {
      const double s = 1.0 / (1.0 + std::exp(-a));
      const double d1 = s * (1.0 - s);
      return {s, d1, d1 * (1.0 - 2.0 * s), d1 * (1.0 - 6.0 * s + 6.0 * s * s)};
    }
    case Activation::identity:
      return {a, 1.0, 0.0, 0.0};
  }
  return {0.0, 0.0, 0.0, 0.0};
}

inline double activate(Activation kind, double a) { return activation_jet(kind, a).s0; }

inline std::string to_string(Activation kind) {
  switch (kind) {
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
    case Activation::identity: return "identity";
  }
  return "?";
}

inline Activation parse_activation(std::string_view name) {
  if (name == "tanh") return Activation::tanh;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "identity" || name == "linear") return Activation::identity;
  if (name == "relu" || name == "ReLU")
    throw ConfigError("activation 'relu' is not smooth; second input-derivatives would not exist");
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

}  // namespace pinncert::dnn
