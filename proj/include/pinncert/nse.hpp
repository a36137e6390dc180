#pragma once

// 2D incompressible Navier-Stokes on Omega x [0, T] with a velocity-pressure
// network (x1, x2, t) -> (u1, u2, p), and the five-term loss
//   |u|_bdry|^4_{L4 H1/2} + |u(.,0) - u0|^2_{L2} + |residual|^2_{L2(Omega x [0,T])}
//   + |div u|^4_{L4 L2} + lambda |u|^4_{L4 H1}.

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cmath>
#include <functional>
#include <numbers>
#include <string>

#include "pinncert/dnn.hpp"
#include "pinncert/geometry.hpp"
#include "pinncert/norms.hpp"

namespace pinncert::nse {

using geometry::Point2;
using norms::PointJet;

struct NSEProblem {
  std::string name;
  geometry::Domain domain;
  double horizon = 0.25;
  std::function<Eigen::Vector2d(const Point2&, double)> forcing;
  std::function<Eigen::Vector2d(const Point2&)> u0;
  std::function<PointJet(const Eigen::VectorXd&, int)> exact;  // optional (u1, u2, p) of (x1, x2, t)

  bool has_exact() const { return static_cast<bool>(exact); }
  norms::FieldView exact_field() const {
    require(has_exact(), "problem '" + name + "' has no exact solution");
    return norms::from_pointwise(3, 3, exact);
  }
};

namespace mms {

/// Velocity = rotated gradient of psi = sin^2(pi x1) sin^2(pi x2) exp(-t),
/// pressure = cos(pi x1) cos(pi x2) + shift . x.
inline PointJet stream(const Eigen::VectorXd& x, const Eigen::Vector2d& shift) {
  constexpr double pi = std::numbers::pi;
  const auto S = [](double z) { return std::pow(std::sin(pi * z), 2); };
  const auto S1 = [](double z) { return pi * std::sin(2 * pi * z); };
  const auto S2 = [](double z) { return 2 * pi * pi * std::cos(2 * pi * z); };
  const auto S3 = [](double z) { return -4 * pi * pi * pi * std::sin(2 * pi * z); };
  const double a = x(0), b = x(1), E = std::exp(-x(2));

  PointJet pj{Eigen::VectorXd(3), Eigen::MatrixXd::Zero(3, 3), std::vector<Eigen::MatrixXd>(3, Eigen::Matrix3d::Zero())};
  // u1 = S(a) S'(b) E
  pj.value(0) = S(a) * S1(b) * E;
  pj.grad.row(0) << S1(a) * S1(b) * E, S(a) * S2(b) * E, -pj.value(0);
  pj.hess[0].topLeftCorner<2, 2>() << S2(a) * S1(b) * E, S1(a) * S2(b) * E, S1(a) * S2(b) * E, S(a) * S3(b) * E;
  // u2 = -S'(a) S(b) E
  pj.value(1) = -S1(a) * S(b) * E;
  pj.grad.row(1) << -S2(a) * S(b) * E, -S1(a) * S1(b) * E, -pj.value(1);
  pj.hess[1].topLeftCorner<2, 2>() << -S3(a) * S(b) * E, -S2(a) * S1(b) * E, -S2(a) * S1(b) * E, -S1(a) * S2(b) * E;
  for (int k = 0; k < 2; ++k) {
    pj.hess[k](0, 2) = pj.hess[k](2, 0) = -pj.grad(k, 0);
    pj.hess[k](1, 2) = pj.hess[k](2, 1) = -pj.grad(k, 1);
    pj.hess[k](2, 2) = pj.value(k);
  }
  const double ca = std::cos(pi * a), cb = std::cos(pi * b), sa = std::sin(pi * a), sb = std::sin(pi * b);
  pj.value(2) = ca * cb + shift.dot(x.head<2>());
  pj.grad.row(2) << -pi * sa * cb + shift(0), -pi * ca * sb + shift(1), 0.0;
  pj.hess[2].topLeftCorner<2, 2>() << -pi * pi * ca * cb, pi * pi * sa * sb, pi * pi * sa * sb, -pi * pi * ca * cb;
  return pj;
}

/// du/dt - lap u + (u . grad) u + grad p for a closed-form jet.
inline Eigen::Vector2d momentum_operator(const PointJet& pj) {
  Eigen::Vector2d r;
  for (int i = 0; i < 2; ++i)
    r(i) = pj.grad(i, 2) - (pj.hess[i](0, 0) + pj.hess[i](1, 1)) + pj.value(0) * pj.grad(i, 0) +
           pj.value(1) * pj.grad(i, 1) + pj.grad(2, i);
  return r;
}

}  // namespace mms

/// Stream-function manufactured problem on the unit square. A constant
/// `forcing_shift` is added to f; the exact pressure absorbs it as shift . x.
inline NSEProblem make_problem(const std::string& preset, double horizon = 0.25,
                               const Eigen::Vector2d& forcing_shift = Eigen::Vector2d::Zero()) {
  require(horizon > 0.0, "time horizon T must be positive");
  if (preset != "mms-stream") throw ConfigError("unknown Navier-Stokes preset '" + preset + "' (mms-stream)");
  NSEProblem p;
  p.name = preset;
  p.domain = geometry::Domain::unit_square();
  p.horizon = horizon;
  const Eigen::Vector2d shift = forcing_shift;
  p.exact = [shift](const Eigen::VectorXd& x, int) { return mms::stream(x, shift); };
  p.forcing = [](const Point2& x, double t) {
    return mms::momentum_operator(mms::stream(Eigen::Vector3d(x.x(), x.y(), t), Eigen::Vector2d::Zero()));
  };
  if (shift.squaredNorm() > 0.0) {
    auto base = p.forcing;
    p.forcing = [base, shift](const Point2& x, double t) { return (base(x, t) + shift).eval(); };
  }
  p.u0 = [](const Point2& x) {
    const PointJet pj = mms::stream(Eigen::Vector3d(x.x(), x.y(), 0.0), Eigen::Vector2d::Zero());
    return Eigen::Vector2d(pj.value(0), pj.value(1));
  };
  return p;
}

/// Max |div u0| and max |u0| on the boundary, from the exact solution's jets at t = 0.
inline std::pair<double, double> check_initial_data(const NSEProblem& p, int samples = 200) {
  require(p.has_exact(), "initial-data check needs the exact solution");
  double div = 0.0, trace = 0.0;
  const auto in = geometry::sample_interior(p.domain, {geometry::RuleKind::monte_carlo, 0, samples, 1});
  for (Eigen::Index j = 0; j < in.size(); ++j) {
    const auto pj = p.exact(Eigen::Vector3d(in.points(0, j), in.points(1, j), 0.0), 1);
    div = std::max(div, std::abs(pj.grad(0, 0) + pj.grad(1, 1)));
  }
  const auto bd = geometry::sample_boundary(p.domain, {geometry::RuleKind::trapezoid, 0, samples});
  for (Eigen::Index j = 0; j < bd.size(); ++j) trace = std::max(trace, p.u0(bd.points.col(j)).norm());
  return {div, trace};
}

inline void validate_vpnet(const dnn::Network& net) {
  require(net.input_dim() == 3 && net.output_dim() == 3,
          "a velocity-pressure network maps (x1, x2, t) to (u1, u2, p)");
}

inline dnn::JetSpec momentum_spec() { return dnn::JetSpec::with_pairs(3, {{0, 0}, {1, 1}}); }

/// Momentum residual per point from jets carrying first derivatives and pairs (0,0), (1,1).
inline Eigen::Array2Xd momentum_residual(const dnn::Jets& j, const Eigen::Array2Xd& f) {
  Eigen::Array2Xd r(2, j.points);
  const auto u1 = j.value(0).array(), u2 = j.value(1).array();
  for (int i = 0; i < 2; ++i)
    r.row(i) = j.d(i, 2).array() - j.d2(i, 0, 0).array() - j.d2(i, 1, 1).array() + u1 * j.d(i, 0).array() +
               u2 * j.d(i, 1).array() + j.d(2, i).array() - f.row(i);
  return r;
}

/// du/dt - lap u + (u . grad) u + grad p - f at (x, t) for a network.
inline Eigen::Vector2d momentum_residual(const dnn::Network& net, const NSEProblem& problem, const Point2& x,
                                         double t) {
  validate_vpnet(net);
  const Eigen::MatrixXd pt = Eigen::Vector3d(x.x(), x.y(), t);
  Eigen::Array2Xd f(2, 1);
  f.col(0) = problem.forcing(x, t).array();
  return momentum_residual(dnn::propagate(net, pt, momentum_spec()).output, f).col(0).matrix();
}

inline Eigen::Array2Xd momentum_residual(const norms::FieldView& view, const NSEProblem& problem,
                                         const Eigen::MatrixXd& points) {
  Eigen::Array2Xd f(2, points.cols());
  for (Eigen::Index q = 0; q < points.cols(); ++q)
    f.col(q) = problem.forcing(points.col(q).head<2>(), points(2, q)).array();
  return momentum_residual(view(points, momentum_spec()), f);
}

/// div u at a batch of (x1, x2, t) points; the view's first two components are the velocity.
inline Eigen::ArrayXd divergence_field(const norms::FieldView& view, const Eigen::MatrixXd& points) {
  const auto j = view(points, dnn::JetSpec::first(view.dim));
  return (j.d(0, 0) + j.d(1, 1)).transpose().array();
}

inline double divergence_field(const dnn::Network& net, const Point2& x, double t) {
  validate_vpnet(net);
  return divergence_field(norms::of_network(net), Eigen::Vector3d(x.x(), x.y(), t))(0);
}

struct NSELossBreakdown {
  double boundary = 0.0;    // |u|_bdry|^4 in L4(0,T; H^{1/2})
  double initial = 0.0;     // |u(.,0) - u0|^2 in L2
  double residual = 0.0;    // |momentum residual|^2 in L2(Omega x [0,T])
  double divergence = 0.0;  // |div u|^4 in L4(0,T; L2)
  double penalty = 0.0;     // lambda |u|^4 in L4(0,T; H1)
  double total = 0.0;

  /// Sum of the four terms that vanish at the exact solution.
  double epsilon_sq() const { return boundary + initial + residual + divergence; }

  nlohmann::json to_json() const {
    return {{"boundary", boundary}, {"initial", initial},   {"residual", residual},
            {"divergence", divergence}, {"penalty", penalty}, {"total", total}};
  }
};

struct NSERules {
  geometry::InteriorRule interior{geometry::RuleKind::gauss_legendre, 16};
  geometry::BoundaryRule boundary{geometry::RuleKind::trapezoid, 0, 64};
  geometry::SpaceTimeSampler time{0.25, geometry::RuleKind::gauss_legendre, 8};
  int modes = -1;
};

class NSELoss {
 public:
  NSELoss(NSEProblem problem, double lambda, NSERules rules) : problem_(std::move(problem)), lambda_(lambda), rules_(rules) {
    require(lambda > 0.0, "penalty weight lambda must be positive");
    require(rules_.boundary.kind == geometry::RuleKind::trapezoid,
            "the H^{1/2} boundary term needs a trapezoid boundary rule");
    rules_.time.horizon = problem_.horizon;
    rebuild();
  }

  const NSEProblem& problem() const { return problem_; }
  double lambda() const { return lambda_; }
  const NSERules& rules() const { return rules_; }
  const geometry::SpaceTimeSet& interior() const { return interior_; }

  bool stochastic() const { return rules_.interior.kind == geometry::RuleKind::monte_carlo; }

  void resample(std::uint64_t seed) {
    if (!stochastic()) return;
    rules_.interior.seed = seed;
    rebuild();
  }

  NSELossBreakdown evaluate(const norms::FieldView& u) const {
    require(u.components == 3 && u.dim == 3, "velocity-pressure fields have 3 inputs and 3 outputs");
    return combine(u(interior_.points, momentum_spec()), u(initial_points_, dnn::JetSpec::values(3)),
                   u(boundary_.points, dnn::JetSpec::values(3)), nullptr);
  }

  NSELossBreakdown evaluate(const dnn::Network& net) const {
    validate_vpnet(net);
    return combine(dnn::propagate(net, interior_.points, momentum_spec()).output,
                   dnn::propagate(net, initial_points_, dnn::JetSpec::values(3)).output,
                   dnn::propagate(net, boundary_.points, dnn::JetSpec::values(3)).output, nullptr);
  }

  /// Loss terms and the gradient of total (or of total - penalty when `with_penalty` is false).
  NSELossBreakdown value_and_grad(const dnn::Network& net, dnn::ParamVector& grad, bool with_penalty = true) const {
    validate_vpnet(net);
    grad = dnn::ParamVector::Zero(net.num_params());
    const auto ti = dnn::propagate(net, interior_.points, momentum_spec());
    const auto t0 = dnn::propagate(net, initial_points_, dnn::JetSpec::values(3));
    const auto tb = dnn::propagate(net, boundary_.points, dnn::JetSpec::values(3));
    Adjoints adj{dnn::Jets::zeros_like(ti.output), dnn::Jets::zeros_like(t0.output), dnn::Jets::zeros_like(tb.output),
                 with_penalty};
    const auto out = combine(ti.output, t0.output, tb.output, &adj);
    dnn::backprop(net, ti, adj.interior, grad);
    dnn::backprop(net, t0, adj.initial, grad);
    dnn::backprop(net, tb, adj.boundary, grad);
    return out;
  }

 private:
  struct Adjoints {
    dnn::Jets interior, initial, boundary;
    bool with_penalty = true;
  };

  void rebuild() {
    spatial_ = geometry::sample_interior(problem_.domain, rules_.interior);
    interior_ = geometry::space_time(spatial_, rules_.time);
    const auto b = geometry::sample_boundary(problem_.domain, rules_.boundary);
    boundary_ = geometry::space_time(b, rules_.time);
    form_ = norms::H12Form(b.size(), b.length, rules_.modes);
    initial_points_.resize(3, spatial_.size());
    initial_points_.topRows(2) = spatial_.points;
    initial_points_.row(2).setZero();

    forcing_.resize(2, interior_.points.cols());
    for (Eigen::Index q = 0; q < interior_.points.cols(); ++q)
      forcing_.col(q) = problem_.forcing(interior_.points.col(q).head<2>(), interior_.points(2, q)).array();
    u0_.resize(2, spatial_.size());
    for (Eigen::Index j = 0; j < spatial_.size(); ++j) u0_.col(j) = problem_.u0(spatial_.point(j)).array();
  }

  NSELossBreakdown combine(const dnn::Jets& ji, const dnn::Jets& j0, const dnn::Jets& jb, Adjoints* adj) const {
    NSELossBreakdown out;
    const Eigen::Index p = interior_.slice_size;
    const Eigen::Index nt = interior_.slices();
    const Eigen::ArrayXd& wt = interior_.time_weights.array();
    const Eigen::ArrayXd& ws = spatial_.weights.array();

    // momentum residual
    const Eigen::Array2Xd r = momentum_residual(ji, forcing_);
    const Eigen::ArrayXd& w = interior_.weights.array();
    out.residual = (r.square().colwise().sum().transpose() * w).sum();
    if (adj) {
      auto& a = adj->interior;
      for (int i = 0; i < 2; ++i) {
        const Eigen::RowVectorXd s = (2.0 * w * r.row(i).transpose()).matrix().transpose();
        a.d(i, 2) += s;
        a.d2(i, 0, 0) -= s;
        a.d2(i, 1, 1) -= s;
        a.value(0) += s.cwiseProduct(ji.d(i, 0));
        a.value(1) += s.cwiseProduct(ji.d(i, 1));
        a.d(i, 0) += s.cwiseProduct(ji.value(0));
        a.d(i, 1) += s.cwiseProduct(ji.value(1));
        a.d(2, i) += s;
      }
    }

    // divergence, L4 in time of the spatial L2 norm
    const Eigen::ArrayXd div = (ji.d(0, 0) + ji.d(1, 1)).transpose().array();
    Eigen::ArrayXd dsq(nt);
    for (Eigen::Index k = 0; k < nt; ++k) dsq(k) = (ws * div.segment(k * p, p).square()).sum();
    out.divergence = (wt * dsq.square()).sum();
    if (adj)
      for (Eigen::Index k = 0; k < nt; ++k) {
        const Eigen::RowVectorXd s = (4.0 * wt(k) * dsq(k) * ws * div.segment(k * p, p)).matrix().transpose();
        adj->interior.d(0, 0).segment(k * p, p) += s;
        adj->interior.d(1, 1).segment(k * p, p) += s;
      }

    // H1 penalty, L4 in time
    Eigen::ArrayXd h1(nt);
    for (Eigen::Index k = 0; k < nt; ++k) {
      double s = 0.0;
      for (int c = 0; c < 2; ++c) {
        s += (ws * ji.value(c).segment(k * p, p).transpose().array().square()).sum();
        for (int i = 0; i < 2; ++i) s += (ws * ji.d(c, i).segment(k * p, p).transpose().array().square()).sum();
      }
      h1(k) = s;
    }
    out.penalty = lambda_ * (wt * h1.square()).sum();
    if (adj && adj->with_penalty)
      for (Eigen::Index k = 0; k < nt; ++k) {
        const Eigen::RowVectorXd s = (4.0 * lambda_ * wt(k) * h1(k) * ws).matrix().transpose();
        for (int c = 0; c < 2; ++c) {
          adj->interior.value(c).segment(k * p, p) += s.cwiseProduct(ji.value(c).segment(k * p, p));
          for (int i = 0; i < 2; ++i)
            adj->interior.d(c, i).segment(k * p, p) += s.cwiseProduct(ji.d(c, i).segment(k * p, p));
        }
      }

    // initial condition
    for (int c = 0; c < 2; ++c) {
      const Eigen::ArrayXd e = j0.value(c).transpose().array() - u0_.row(c).transpose();
      out.initial += (ws * e.square()).sum();
      if (adj) adj->initial.value(c) += (2.0 * ws * e).matrix().transpose();
    }

    // boundary trace, L4 in time of the H^{1/2} norm
    const Eigen::Index pb = boundary_.slice_size;
    for (Eigen::Index k = 0; k < nt; ++k) {
      double bk = 0.0;
      Eigen::VectorXd qg[2];
      for (int c = 0; c < 2; ++c) {
        const Eigen::VectorXd g = jb.value(c).segment(k * pb, pb).transpose();
        qg[c] = form_.q * g;
        bk += g.dot(qg[c]);
      }
      out.boundary += wt(k) * bk * bk;
      if (adj)
        for (int c = 0; c < 2; ++c) adj->boundary.value(c).segment(k * pb, pb) += (4.0 * wt(k) * bk * qg[c]).transpose();
    }

    out.total = out.boundary + out.initial + out.residual + out.divergence + out.penalty;
    return out;
  }

  NSEProblem problem_;
  double lambda_;
  NSERules rules_;
  geometry::PointSet spatial_;
  geometry::SpaceTimeSet interior_;
  geometry::SpaceTimeSet boundary_;
  Eigen::MatrixXd initial_points_;
  Eigen::Array2Xd forcing_;
  Eigen::Array2Xd u0_;
  norms::H12Form form_;
};

inline NSELossBreakdown loss_nse(const dnn::Network& net, const NSEProblem& problem, double lambda,
                                 const NSERules& rules) {
  return NSELoss(problem, lambda, rules).evaluate(net);
}

/// Space-time mean of the pressure output (reporting only; losses see grad p).
inline double fix_pressure_gauge(const norms::FieldView& u, const geometry::SpaceTimeSet& set) {
  const auto j = u(set.points, dnn::JetSpec::values(3));
  return j.value(2).dot(set.weights) / set.weights.sum();
}

inline double fix_pressure_gauge(const dnn::Network& net, const geometry::SpaceTimeSet& set) {
  validate_vpnet(net);
  return fix_pressure_gauge(norms::of_network(net), set);
}

/// Velocity components of a velocity-pressure field.
inline norms::FieldView velocity(const norms::FieldView& u) {
  norms::FieldView v;
  v.components = 2;
  v.dim = u.dim;
  v.eval = [u](const Eigen::MatrixXd& points, const dnn::JetSpec& spec) {
    dnn::Jets j = u(points, spec);
    j.data = j.data.topRows(2).eval();
    return j;
  };
  return v;
}

}  // namespace pinncert::nse
