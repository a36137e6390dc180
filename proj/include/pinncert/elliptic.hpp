#pragma once

// Second-order elliptic problems L u = f with zero boundary data, their
// residuals, and the network loss functionals (integral L2 form, H^{1/2}
// boundary form, plain collocation sums) with an H2 budget penalty.

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "pinncert/dnn.hpp"
#include "pinncert/geometry.hpp"
#include "pinncert/norms.hpp"

namespace pinncert::elliptic {

using geometry::Point2;
using norms::PointJet;

/// L u = -sum_ij a_ij d_ij u - sum_i (sum_j d_j a_ij) d_i u + sum_i b_i d_i u + c u,
/// i.e. the divergence form expanded for differentiable a.
struct EllipticOperator {
  std::string name = "laplace";
  std::function<Eigen::Matrix2d(const Point2&)> a = [](const Point2&) { return Eigen::Matrix2d::Identity().eval(); };
  std::function<Eigen::Vector2d(const Point2&)> div_a = [](const Point2&) { return Eigen::Vector2d::Zero().eval(); };
  std::function<Eigen::Vector2d(const Point2&)> b = [](const Point2&) { return Eigen::Vector2d::Zero().eval(); };
  std::function<double(const Point2&)> c = [](const Point2&) { return 0.0; };
  bool has_mixed = false;  // a_12 may be nonzero

  static EllipticOperator laplace() { return {}; }

  /// a = (1 + amp sin(pi x1) cos(pi x2)) I.
  static EllipticOperator variable_a(double amp = 0.5) {
    require(std::abs(amp) < 1.0, "variable-a amplitude must be below 1 for ellipticity");
    constexpr double pi = std::numbers::pi;
    EllipticOperator op;
    op.name = "variable-a";
    op.a = [amp](const Point2& x) {
      return ((1.0 + amp * std::sin(pi * x.x()) * std::cos(pi * x.y())) * Eigen::Matrix2d::Identity()).eval();
    };
    op.div_a = [amp](const Point2& x) {
      return Eigen::Vector2d(amp * pi * std::cos(pi * x.x()) * std::cos(pi * x.y()),
                             -amp * pi * std::sin(pi * x.x()) * std::sin(pi * x.y()));
    };
    return op;
  }

  static EllipticOperator reaction(double c0 = 1.0) {
    EllipticOperator op;
    op.name = "reaction";
    op.c = [c0](const Point2&) { return c0; };
    return op;
  }

  /// L applied to a closed-form jet at x.
  double apply(const Point2& x, const PointJet& u) const {
    const Eigen::Matrix2d A = a(x);
    const Eigen::Vector2d g = u.grad.row(0).head<2>().transpose();
    const Eigen::Matrix2d H = u.hess[0].topLeftCorner<2, 2>();
    return -(A.cwiseProduct(H)).sum() + (b(x) - div_a(x)).dot(g) + c(x) * u.value(0);
  }

  /// Smallest eigenvalue of a over the given points.
  double min_ellipticity(const Eigen::MatrixXd& points) const {
    double theta = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < points.cols(); ++j) {
      const Eigen::Matrix2d A = a(points.col(j).head<2>());
      require(std::abs(A(0, 1) - A(1, 0)) <= 1e-12 * (1.0 + A.norm()), "coefficient matrix a must be symmetric");
      theta = std::min(theta, Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(A).eigenvalues().minCoeff());
    }
    return theta;
  }
};

/// L u = f in the domain, u = 0 on its boundary.
struct EllipticProblem {
  std::string name;
  EllipticOperator op;
  std::function<double(const Point2&)> f;
  geometry::Domain domain;
  std::function<PointJet(const Eigen::VectorXd&, int)> exact;  // optional manufactured solution

  bool has_exact() const { return static_cast<bool>(exact); }
  norms::FieldView exact_field() const {
    require(has_exact(), "problem '" + name + "' has no exact solution");
    return norms::from_pointwise(1, 2, exact);
  }
};

namespace mms {

inline PointJet sine_bump(const Eigen::VectorXd& x, int) {
  constexpr double pi = std::numbers::pi;
  const double s1 = std::sin(pi * x(0)), s2 = std::sin(pi * x(1));
  const double c1 = std::cos(pi * x(0)), c2 = std::cos(pi * x(1));
  PointJet pj{Eigen::VectorXd::Constant(1, s1 * s2), Eigen::MatrixXd(1, 2), {Eigen::Matrix2d()}};
  pj.grad << pi * c1 * s2, pi * s1 * c2;
  pj.hess[0] << -pi * pi * s1 * s2, pi * pi * c1 * c2, pi * pi * c1 * c2, -pi * pi * s1 * s2;
  return pj;
}

/// (1 - |x|^2) exp(x1): vanishes on the unit circle.
inline PointJet disk_bump(const Eigen::VectorXd& x, int) {
  const double e = std::exp(x(0));
  const double q = 1.0 - x(0) * x(0) - x(1) * x(1);
  PointJet pj{Eigen::VectorXd::Constant(1, q * e), Eigen::MatrixXd(1, 2), {Eigen::Matrix2d()}};
  pj.grad << e * (q - 2.0 * x(0)), -2.0 * x(1) * e;
  const double h12 = -2.0 * x(1) * e;
  pj.hess[0] << e * (q - 4.0 * x(0) - 2.0), h12, h12, -2.0 * e;
  return pj;
}

}  // namespace mms

/// Manufactured problems: poisson, variable-a, reaction on the unit square
/// with u = sin(pi x1) sin(pi x2); poisson-disk on the unit disk with
/// u = (1 - |x|^2) exp(x1).
inline EllipticProblem make_problem(const std::string& preset) {
  constexpr double pi = std::numbers::pi;
  EllipticProblem p;
  p.name = preset;
  p.domain = geometry::Domain::unit_square();
  p.exact = mms::sine_bump;
  const auto u = [](const Point2& x) { return std::sin(pi * x.x()) * std::sin(pi * x.y()); };
  if (preset == "poisson") {
    p.f = [u](const Point2& x) { return 2.0 * pi * pi * u(x); };
  } else if (preset == "variable-a") {
    p.op = EllipticOperator::variable_a(0.5);
    p.f = [u](const Point2& x) {
      const double phi = 1.0 + 0.5 * std::sin(pi * x.x()) * std::cos(pi * x.y());
      return 2.0 * pi * pi * phi * u(x) -
             0.5 * pi * pi * std::sin(pi * x.y()) * std::cos(pi * x.y()) * std::cos(2.0 * pi * x.x());
    };
  } else if (preset == "reaction") {
    p.op = EllipticOperator::reaction(1.0);
    p.f = [u](const Point2& x) { return (2.0 * pi * pi + 1.0) * u(x); };
  } else if (preset == "poisson-disk") {
    p.domain = geometry::Domain::disk();
    p.exact = mms::disk_bump;
    p.f = [](const Point2& x) {
      const double q = 1.0 - x.squaredNorm();
      return -std::exp(x.x()) * (q - 4.0 * x.x() - 4.0);
    };
  } else {
    throw ConfigError("unknown elliptic preset '" + preset + "' (poisson, variable-a, reaction, poisson-disk)");
  }
  return p;
}

/// Coefficients and source sampled at a fixed point batch.
struct SampledOperator {
  Eigen::ArrayXd a11, a12, a22, b1, b2, c, f;

  SampledOperator() = default;
  SampledOperator(const EllipticProblem& problem, const Eigen::MatrixXd& points) {
    const Eigen::Index n = points.cols();
    for (auto* arr : {&a11, &a12, &a22, &b1, &b2, &c, &f}) arr->resize(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const Point2 x = points.col(j).head<2>();
      const Eigen::Matrix2d A = problem.op.a(x);
      const Eigen::Vector2d beff = problem.op.b(x) - problem.op.div_a(x);
      a11(j) = A(0, 0);
      a12(j) = A(0, 1);
      a22(j) = A(1, 1);
      b1(j) = beff(0);
      b2(j) = beff(1);
      c(j) = problem.op.c(x);
      f(j) = problem.f(x);
    }
  }

  /// (L u - f) at every point from output-0 jets carrying pairs (0,0), (1,1) and, if a12 != 0, (0,1).
  Eigen::ArrayXd residual(const dnn::Jets& u) const {
    Eigen::ArrayXd r = -a11 * u.d2(0, 0, 0).transpose().array() - a22 * u.d2(0, 1, 1).transpose().array() +
                       b1 * u.d(0, 0).transpose().array() + b2 * u.d(0, 1).transpose().array() +
                       c * u.value(0).transpose().array() - f;
    if (u.spec.pair_channel(0, 1) >= 0) r -= 2.0 * a12 * u.d2(0, 0, 1).transpose().array();
    return r;
  }

  /// Adds sum_j s_j * d(r_j)/d(jets) into the adjoint.
  void residual_adjoint(const Eigen::ArrayXd& s, dnn::Jets& adj) const {
    adj.d2(0, 0, 0) += (-a11 * s).matrix().transpose();
    adj.d2(0, 1, 1) += (-a22 * s).matrix().transpose();
    adj.d(0, 0) += (b1 * s).matrix().transpose();
    adj.d(0, 1) += (b2 * s).matrix().transpose();
    adj.value(0) += (c * s).matrix().transpose();
    if (adj.spec.pair_channel(0, 1) >= 0) adj.d2(0, 0, 1) += (-2.0 * a12 * s).matrix().transpose();
  }
};

inline dnn::JetSpec residual_spec(bool mixed) {
  return mixed ? dnn::JetSpec::full(2) : dnn::JetSpec::with_pairs(2, {{0, 0}, {1, 1}});
}

/// (L u_N - f)(x) for a network.
inline double residual(const dnn::Network& net, const EllipticProblem& problem, const Point2& x) {
  const Eigen::MatrixXd pt = x;
  const SampledOperator op(problem, pt);
  return op.residual(dnn::propagate(net, pt, dnn::JetSpec::full(2)).output)(0);
}

/// Residuals of any field at a batch of points (2 x P).
inline Eigen::ArrayXd residual(const norms::FieldView& u, const EllipticProblem& problem,
                               const Eigen::MatrixXd& points) {
  const SampledOperator op(problem, points);
  return op.residual(u(points, dnn::JetSpec::full(2)));
}

struct LossWeights {
  double alpha = 1.0;
  double beta = 1.0;

  void validate() const { require(alpha > 0.0 && beta > 0.0, "loss weights alpha and beta must be positive"); }
};

/// Soft H2 cap: penalty mu * max(0, |u|_{H2} - m_tilde)^2.
struct H2Budget {
  double m_tilde = std::numeric_limits<double>::infinity();
  double mu = 0.0;

  void validate() const {
    require(m_tilde > 0.0, "H2 budget must be positive");
    require(mu >= 0.0, "penalty weight mu must be non-negative");
  }
  bool active() const { return mu > 0.0 && std::isfinite(m_tilde); }
};

struct LossBreakdown {
  double residual = 0.0;
  double boundary = 0.0;
  double penalty = 0.0;
  double total = 0.0;
  double h2_norm = std::numeric_limits<double>::quiet_NaN();  // only when the penalty is active

  nlohmann::json to_json() const {
    nlohmann::json j{{"residual", residual}, {"boundary", boundary}, {"penalty", penalty}, {"total", total}};
    if (!std::isnan(h2_norm)) j["h2_norm"] = h2_norm;
    return j;
  }
};

enum class BoundaryTerm { l2, h12 };

inline std::string to_string(BoundaryTerm b) { return b == BoundaryTerm::l2 ? "l2" : "h12"; }

/// A discretised elliptic loss on fixed point sets. With quadrature weights
/// this is the integral form; with unit weights it is the collocation sum.
class EllipticLoss {
 public:
  EllipticLoss(EllipticProblem problem, LossWeights weights, H2Budget budget, BoundaryTerm boundary_term,
               geometry::InteriorRule interior, geometry::BoundaryRule boundary, int modes = -1)
      : problem_(std::move(problem)),
        weights_(weights),
        budget_(budget),
        boundary_term_(boundary_term),
        interior_rule_(interior),
        boundary_rule_(boundary),
        modes_(modes) {
    weights_.validate();
    budget_.validate();
    if (boundary_term_ == BoundaryTerm::h12)
      require(boundary.kind == geometry::RuleKind::trapezoid, "the H^{1/2} boundary term needs a trapezoid boundary rule");
    rebuild();
  }

  /// Loss on explicit point sets.
  EllipticLoss(EllipticProblem problem, LossWeights weights, H2Budget budget, geometry::PointSet interior,
               geometry::BoundarySet boundary)
      : problem_(std::move(problem)), weights_(weights), budget_(budget), boundary_term_(BoundaryTerm::l2) {
    weights_.validate();
    budget_.validate();
    interior_ = std::move(interior);
    boundary_ = std::move(boundary);
    sampled_ = SampledOperator(problem_, interior_.points);
  }

  const EllipticProblem& problem() const { return problem_; }
  const LossWeights& weights() const { return weights_; }
  const H2Budget& budget() const { return budget_; }
  BoundaryTerm boundary_term() const { return boundary_term_; }
  const geometry::PointSet& interior() const { return interior_; }
  const geometry::BoundarySet& boundary() const { return boundary_; }

  bool stochastic() const {
    return interior_rule_.kind == geometry::RuleKind::monte_carlo ||
           boundary_rule_.kind == geometry::RuleKind::monte_carlo;
  }

  /// Draw fresh Monte Carlo points (no effect on deterministic rules).
  void resample(std::uint64_t seed) {
    if (!stochastic()) return;
    interior_rule_.seed = seed;
    boundary_rule_.seed = seed ^ 0x9e3779b97f4a7c15ULL;
    rebuild();
  }

  LossBreakdown evaluate(const norms::FieldView& u) const {
    const auto spec = interior_spec();
    const dnn::Jets ji = u(interior_.points, spec);
    const dnn::Jets jb = u(boundary_.points, dnn::JetSpec::values(2));
    return combine(ji, jb, nullptr, nullptr);
  }

  LossBreakdown evaluate(const dnn::Network& net) const {
    const auto ti = dnn::propagate(net, interior_.points, interior_spec());
    const auto tb = dnn::propagate(net, boundary_.points, dnn::JetSpec::values(2));
    return combine(ti.output, tb.output, nullptr, nullptr);
  }

  LossBreakdown value_and_grad(const dnn::Network& net, dnn::ParamVector& grad) const {
    grad = dnn::ParamVector::Zero(net.num_params());
    const auto ti = dnn::propagate(net, interior_.points, interior_spec());
    const auto tb = dnn::propagate(net, boundary_.points, dnn::JetSpec::values(2));
    dnn::Jets ai = dnn::Jets::zeros_like(ti.output);
    dnn::Jets ab = dnn::Jets::zeros_like(tb.output);
    const auto out = combine(ti.output, tb.output, &ai, &ab);
    dnn::backprop(net, ti, ai, grad);
    dnn::backprop(net, tb, ab, grad);
    return out;
  }

 private:
  dnn::JetSpec interior_spec() const { return residual_spec(problem_.op.has_mixed || budget_.active()); }

  void rebuild() {
    interior_ = geometry::sample_interior(problem_.domain, interior_rule_);
    boundary_ = geometry::sample_boundary(problem_.domain, boundary_rule_);
    sampled_ = SampledOperator(problem_, interior_.points);
    if (boundary_term_ == BoundaryTerm::h12) form_ = norms::H12Form(boundary_.size(), boundary_.length, modes_);
  }

  LossBreakdown combine(const dnn::Jets& ji, const dnn::Jets& jb, dnn::Jets* ai, dnn::Jets* ab) const {
    LossBreakdown out;
    const double a2 = weights_.alpha * weights_.alpha, b2 = weights_.beta * weights_.beta;
    const Eigen::ArrayXd r = sampled_.residual(ji);
    const Eigen::ArrayXd& w = interior_.weights.array();
    out.residual = a2 * (w * r.square()).sum();
    if (ai) sampled_.residual_adjoint(2.0 * a2 * w * r, *ai);

    const Eigen::VectorXd g = jb.value(0).transpose();
    if (boundary_term_ == BoundaryTerm::h12) {
      const Eigen::VectorXd qg = form_.q * g;
      out.boundary = b2 * g.dot(qg);
      if (ab) ab->value(0) += (2.0 * b2 * qg).transpose();
    } else {
      out.boundary = b2 * g.cwiseAbs2().dot(boundary_.weights);
      if (ab) ab->value(0) += (2.0 * b2 * boundary_.weights.cwiseProduct(g)).transpose();
    }

    if (budget_.active()) {
      const double h2sq = norms::norm_density(ji, norms::NormKind::h2_domain).matrix().dot(interior_.weights);
      const double h2 = std::sqrt(h2sq);
      out.h2_norm = h2;
      const double excess = h2 - budget_.m_tilde;
      if (excess > 0.0) {
        out.penalty = budget_.mu * excess * excess;
        if (ai) {
          // d penalty / d(h2^2) = mu * excess / h2
          const Eigen::RowVectorXd s = (budget_.mu * excess / h2 * 2.0 * interior_.weights).transpose();
          ai->value(0) += s.cwiseProduct(ji.value(0));
          ai->d(0, 0) += s.cwiseProduct(ji.d(0, 0));
          ai->d(0, 1) += s.cwiseProduct(ji.d(0, 1));
          ai->d2(0, 0, 0) += s.cwiseProduct(ji.d2(0, 0, 0));
          ai->d2(0, 1, 1) += s.cwiseProduct(ji.d2(0, 1, 1));
          ai->d2(0, 0, 1) += 2.0 * s.cwiseProduct(ji.d2(0, 0, 1));
        }
      }
    }
    out.total = out.residual + out.boundary + out.penalty;
    return out;
  }

  EllipticProblem problem_;
  LossWeights weights_;
  H2Budget budget_;
  BoundaryTerm boundary_term_;
  geometry::InteriorRule interior_rule_{};
  geometry::BoundaryRule boundary_rule_{};
  int modes_ = -1;
  geometry::PointSet interior_;
  geometry::BoundarySet boundary_;
  SampledOperator sampled_;
  norms::H12Form form_;
};

/// alpha^2 int (L u - f)^2 + beta^2 int_bdry u^2 + penalty.
inline LossBreakdown loss_l2(const dnn::Network& net, const EllipticProblem& problem, LossWeights weights,
                             H2Budget budget, const geometry::InteriorRule& interior,
                             const geometry::BoundaryRule& boundary) {
  return EllipticLoss(problem, weights, budget, BoundaryTerm::l2, interior, boundary).evaluate(net);
}

/// As loss_l2 with the boundary term replaced by beta^2 |u|^2_{H^{1/2}}.
inline LossBreakdown loss_h12(const dnn::Network& net, const EllipticProblem& problem, LossWeights weights,
                              H2Budget budget, const geometry::InteriorRule& interior,
                              const geometry::BoundaryRule& boundary, int modes = -1) {
  return EllipticLoss(problem, weights, budget, BoundaryTerm::h12, interior, boundary, modes).evaluate(net);
}

/// Unweighted sums over the given points: sum alpha^2 r(x_j)^2 + sum beta^2 u(y_j)^2.
inline double loss_collocation(const dnn::Network& net, const EllipticProblem& problem, LossWeights weights,
                               const Eigen::MatrixXd& interior_points, const Eigen::MatrixXd& boundary_points) {
  require(interior_points.cols() > 0 && boundary_points.cols() > 0, "collocation point lists must be nonempty");
  geometry::PointSet in{interior_points, Eigen::VectorXd::Ones(interior_points.cols())};
  geometry::BoundarySet bd;
  bd.points = boundary_points;
  bd.weights = Eigen::VectorXd::Ones(boundary_points.cols());
  return EllipticLoss(problem, weights, H2Budget{}, std::move(in), std::move(bd)).evaluate(net).total;
}

}  // namespace pinncert::elliptic
