#pragma once

// Quadrature Sobolev norms of network outputs or closed-form fields: L2, H1, H2
// on the domain, L2 and H^{1/2} on the boundary, and time composites
// (L2 in space-time, L4 in time of a spatial norm).

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "pinncert/dnn.hpp"
#include "pinncert/geometry.hpp"

namespace pinncert::norms {

using dnn::Jets;
using dnn::JetSpec;

enum class NormKind { l2_domain, h1_domain, h2_domain, l2_boundary, h12_boundary, l2_space_time, l4_time };

inline std::string to_string(NormKind kind) {
  switch (kind) {
    case NormKind::l2_domain: return "L2";
    case NormKind::h1_domain: return "H1";
    case NormKind::h2_domain: return "H2";
    case NormKind::l2_boundary: return "L2(bdry)";
    case NormKind::h12_boundary: return "H1/2(bdry)";
    case NormKind::l2_space_time: return "L2(space-time)";
    case NormKind::l4_time: return "L4(time)";
  }
  return "?";
}

/// Derivative order a spatial norm needs.
inline int required_order(NormKind kind) {
  switch (kind) {
    case NormKind::h1_domain: return 1;
    case NormKind::h2_domain: return 2;
    default: return 0;
  }
}

/// Jet request covering the spatial derivatives of `order` for inputs of
/// dimension dim (the first two inputs are space; a third is time).
inline JetSpec spatial_spec(int dim, int order) {
  if (order == 0) return JetSpec::values(dim);
  if (order == 1) return JetSpec::first(dim);
  return JetSpec::with_pairs(dim, {{0, 0}, {0, 1}, {1, 1}});
}

/// Values and derivatives of a closed-form field at one point.
struct PointJet {
  Eigen::VectorXd value;              // components
  Eigen::MatrixXd grad;               // components x dim
  std::vector<Eigen::MatrixXd> hess;  // per component, dim x dim
};

/// A (possibly vector-valued) field that can be evaluated as jets on a batch.
struct FieldView {
  int components = 1;
  int dim = 2;
  std::function<Jets(const Eigen::MatrixXd& points, const JetSpec& spec)> eval;

  Jets operator()(const Eigen::MatrixXd& points, const JetSpec& spec) const { return eval(points, spec); }
};

/// Selected outputs of a network.
inline FieldView of_network(const dnn::Network& net, std::vector<int> outputs = {}) {
  if (outputs.empty())
    for (int k = 0; k < net.output_dim(); ++k) outputs.push_back(k);
  for (int k : outputs) require(k >= 0 && k < net.output_dim(), "network output index out of range");
  FieldView f;
  f.components = static_cast<int>(outputs.size());
  f.dim = net.input_dim();
  f.eval = [net, outputs](const Eigen::MatrixXd& points, const JetSpec& spec) {
    auto jets = dnn::propagate(net, points, spec).output;
    if (static_cast<int>(outputs.size()) == jets.data.rows()) {
      bool identity = true;
      for (std::size_t k = 0; k < outputs.size(); ++k) identity = identity && outputs[k] == static_cast<int>(k);
      if (identity) return jets;
    }
    Jets sel{Eigen::MatrixXd(outputs.size(), jets.data.cols()), spec, jets.points};
    for (std::size_t k = 0; k < outputs.size(); ++k) sel.data.row(static_cast<Eigen::Index>(k)) = jets.data.row(outputs[k]);
    return sel;
  };
  return f;
}

/// Field given pointwise by closed forms; `fn(x, order)` must fill derivatives up to `order`.
inline FieldView from_pointwise(int components, int dim, std::function<PointJet(const Eigen::VectorXd&, int)> fn) {
  FieldView f;
  f.components = components;
  f.dim = dim;
  f.eval = [components, fn](const Eigen::MatrixXd& points, const JetSpec& spec) {
    const int order = spec.pairs.empty() ? std::min(spec.order, 1) : 2;
    Jets jets{Eigen::MatrixXd::Zero(components, spec.channels() * points.cols()), spec, points.cols()};
    for (Eigen::Index q = 0; q < points.cols(); ++q) {
      const PointJet pj = fn(points.col(q), order);
      for (int k = 0; k < components; ++k) {
        jets.value(k)(q) = pj.value(k);
        if (spec.order >= 1)
          for (int i = 0; i < spec.dim; ++i) jets.d(k, i)(q) = pj.grad(k, i);
        for (const auto& [i, j] : spec.pairs) jets.d2(k, i, j)(q) = pj.hess[static_cast<std::size_t>(k)](i, j);
      }
    }
    return jets;
  };
  return f;
}

inline FieldView zero_field(int components, int dim) {
  FieldView f;
  f.components = components;
  f.dim = dim;
  f.eval = [components](const Eigen::MatrixXd& points, const JetSpec& spec) {
    return Jets{Eigen::MatrixXd::Zero(components, spec.channels() * points.cols()), spec, points.cols()};
  };
  return f;
}

/// a*f + b*g, evaluated channel by channel.
inline FieldView combine(double a, const FieldView& f, double b, const FieldView& g) {
  require(f.components == g.components && f.dim == g.dim, "fields must have matching shapes");
  FieldView h;
  h.components = f.components;
  h.dim = f.dim;
  h.eval = [a, b, f, g](const Eigen::MatrixXd& points, const JetSpec& spec) {
    Jets jf = f(points, spec);
    jf.data = a * jf.data + b * g(points, spec).data;
    return jf;
  };
  return h;
}

inline FieldView difference(const FieldView& f, const FieldView& g) { return combine(1.0, f, -1.0, g); }
inline FieldView scaled(double c, const FieldView& f) { return combine(c, f, 0.0, f); }

/// Sum over components of the squared channels a spatial norm integrates, per point.
inline Eigen::ArrayXd norm_density(const Jets& jets, NormKind kind) {
  const int order = required_order(kind);
  Eigen::ArrayXd dens = Eigen::ArrayXd::Zero(jets.points);
  for (Eigen::Index k = 0; k < jets.data.rows(); ++k) {
    const int kk = static_cast<int>(k);
    dens += jets.value(kk).array().square().transpose();
    if (order >= 1)
      for (int i = 0; i < 2; ++i) dens += jets.d(kk, i).array().square().transpose();
    if (order >= 2) {
      dens += jets.d2(kk, 0, 0).array().square().transpose() + jets.d2(kk, 1, 1).array().square().transpose();
      dens += 2.0 * jets.d2(kk, 0, 1).array().square().transpose();
    }
  }
  return dens;
}

/// Periodic H^{1/2} norm on the arc-length boundary circle of length L with n
/// equispaced samples: |g|^2 = L * sum_{|k|<=K} (1+k^2)^{1/2} |c_k|^2, which
/// equals the boundary L2 norm on constants. Stored as the quadratic form
/// g^T Q g so losses can differentiate it.
struct H12Form {
  Eigen::MatrixXd q;
  double length = 0.0;
  int modes = 0;

  H12Form() = default;
  H12Form(Eigen::Index n, double len, int k_max = -1) : length(len) {
    modes = k_max < 0 ? geometry::nyquist_modes(n) : k_max;
    require(2 * static_cast<Eigen::Index>(modes) + 1 <= n,
            "H^{1/2} mode count " + std::to_string(modes) + " exceeds the Nyquist limit of " + std::to_string(n) +
                " boundary samples");
    Eigen::VectorXd kernel = Eigen::VectorXd::Constant(n, 1.0);  // w_0 = 1
    for (Eigen::Index m = 0; m < n; ++m)
      for (int k = 1; k <= modes; ++k)
        kernel(m) += 2.0 * std::sqrt(1.0 + double(k) * k) *
                     std::cos(2.0 * std::numbers::pi * k * static_cast<double>(m) / static_cast<double>(n));
    kernel *= len / (static_cast<double>(n) * static_cast<double>(n));
    q.resize(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index l = 0; l < n; ++l) q(j, l) = kernel((j - l + n) % n);
  }

  double squared(const Eigen::VectorXd& g) const { return g.dot(q * g); }
};

/// Mode-by-mode evaluation of the same norm (used as a cross-check of the form).
inline double h12_squared_from_coeffs(const std::vector<std::complex<double>>& c, double length) {
  const int modes = static_cast<int>(c.size() - 1) / 2;
  double s = 0.0;
  for (int k = -modes; k <= modes; ++k) s += std::sqrt(1.0 + double(k) * k) * std::norm(c[static_cast<std::size_t>(k + modes)]);
  return length * s;
}

struct NormRules {
  geometry::InteriorRule interior{geometry::RuleKind::gauss_legendre, 16};
  geometry::BoundaryRule boundary{geometry::RuleKind::trapezoid, 16, 256};
  int modes = -1;  // H^{1/2} cutoff K; -1 means the Nyquist limit of the boundary samples
  geometry::SpaceTimeSampler time{};
  NormKind inner = NormKind::h1_domain;  // spatial norm inside the time composites
};

namespace detail {

inline Eigen::MatrixXd with_time(const Eigen::MatrixXd& spatial, int dim, double t) {
  if (dim == 2) return spatial;
  require(dim == 3, "norms need fields of (x1, x2) or (x1, x2, t)");
  Eigen::MatrixXd pts(3, spatial.cols());
  pts.topRows(2) = spatial.topRows(2);
  pts.row(2).setConstant(t);
  return pts;
}

// Squared spatial norm on each time slice of a space-time batch.
struct SliceSquares {
  Eigen::VectorXd squares;
  Eigen::VectorXd time_weights;
};

inline SliceSquares slice_squares(const FieldView& f, NormKind inner, const geometry::Domain& domain,
                                  const NormRules& rules) {
  require(f.dim == 3, "time composites need a field of (x1, x2, t)");
  const bool boundary = inner == NormKind::l2_boundary || inner == NormKind::h12_boundary;
  require(boundary || inner == NormKind::l2_domain || inner == NormKind::h1_domain || inner == NormKind::h2_domain,
          "time composites take a spatial inner norm");
  Eigen::VectorXd out;
  geometry::SpaceTimeSet storage;
  if (boundary) {
    const auto b = geometry::sample_boundary(domain, rules.boundary);
    storage = geometry::space_time(b, rules.time);
    const Jets jets = f(storage.points, JetSpec::values(3));
    const Eigen::Index p = storage.slice_size;
    out = Eigen::VectorXd::Zero(storage.slices());
    H12Form form;
    if (inner == NormKind::h12_boundary) {
      require(b.uniform, "H^{1/2} norms need an equispaced (trapezoid) boundary rule");
      form = H12Form(p, b.length, rules.modes);
    }
    for (Eigen::Index s = 0; s < storage.slices(); ++s)
      for (int k = 0; k < f.components; ++k) {
        const Eigen::VectorXd g = jets.value(k).segment(s * p, p).transpose();
        out(s) += inner == NormKind::h12_boundary ? form.squared(g) : g.cwiseAbs2().dot(b.weights);
      }
  } else {
    const auto spatial = geometry::sample_interior(domain, rules.interior);
    storage = geometry::space_time(spatial, rules.time);
    const Jets jets = f(storage.points, spatial_spec(3, required_order(inner)));
    const Eigen::ArrayXd dens = norm_density(jets, inner);
    const Eigen::Index p = storage.slice_size;
    out.resize(storage.slices());
    for (Eigen::Index s = 0; s < storage.slices(); ++s)
      out(s) = dens.segment(s * p, p).matrix().dot(spatial.weights);
  }
  return {out, storage.time_weights};
}

}  // namespace detail

/// Squared spatial norm of f at time t (t ignored for fields of x only).
inline double squared_norm(const FieldView& f, NormKind kind, const geometry::Domain& domain, const NormRules& rules,
                           double t = 0.0) {
  switch (kind) {
    case NormKind::l2_domain:
    case NormKind::h1_domain:
    case NormKind::h2_domain: {
      const auto set = geometry::sample_interior(domain, rules.interior);
      const auto pts = detail::with_time(set.points, f.dim, t);
      const Jets jets = f(pts, spatial_spec(f.dim, required_order(kind)));
      return norm_density(jets, kind).matrix().dot(set.weights);
    }
    case NormKind::l2_boundary:
    case NormKind::h12_boundary: {
      const auto b = geometry::sample_boundary(domain, rules.boundary);
      const Jets jets = f(detail::with_time(b.points, f.dim, t), JetSpec::values(f.dim));
      double s = 0.0;
      if (kind == NormKind::h12_boundary) {
        require(b.uniform, "H^{1/2} norms need an equispaced (trapezoid) boundary rule");
        const H12Form form(b.size(), b.length, rules.modes);
        for (int k = 0; k < f.components; ++k) s += form.squared(jets.value(k).transpose());
      } else {
        for (int k = 0; k < f.components; ++k) s += jets.value(k).array().square().matrix().dot(b.weights);
      }
      return s;
    }
    case NormKind::l2_space_time: {
      const auto sq = detail::slice_squares(f, NormKind::l2_domain, domain, rules);
      return sq.squares.dot(sq.time_weights);
    }
    case NormKind::l4_time: {
      const auto sq = detail::slice_squares(f, rules.inner, domain, rules);
      // squared L4-in-time norm
      return std::sqrt(sq.squares.array().square().matrix().dot(sq.time_weights));
    }
  }
  return 0.0;
}

inline double norm(const FieldView& f, NormKind kind, const geometry::Domain& domain, const NormRules& rules = {},
                   double t = 0.0) {
  return std::sqrt(std::max(0.0, squared_norm(f, kind, domain, rules, t)));
}

/// Full H2 norm of one network output (value, gradient, all second derivatives).
inline double h2_norm_of_network(const dnn::Network& net, const geometry::Domain& domain,
                                 const geometry::InteriorRule& rule = {geometry::RuleKind::gauss_legendre, 16},
                                 int output = 0) {
  NormRules rules;
  rules.interior = rule;
  return norm(of_network(net, {output}), NormKind::h2_domain, domain, rules);
}

}  // namespace pinncert::norms
