#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "pinncert/nse.hpp"
#include "test_oracles.hpp"

using namespace pinncert;
using namespace pinncert::nse;
using geometry::RuleKind;
using norms::FieldView;

namespace {

constexpr double pi = std::numbers::pi;

// (u1, u2, p) given by closed-form values and first derivatives; second derivatives zero.
FieldView linear_view(std::function<Eigen::Vector3d(const Eigen::VectorXd&)> value, Eigen::Matrix3d grad) {
  return norms::from_pointwise(3, 3, [value, grad](const Eigen::VectorXd& x, int) {
    return PointJet{value(x), grad, std::vector<Eigen::MatrixXd>(3, Eigen::Matrix3d::Zero())};
  });
}

NSERules small_rules() {
  NSERules r;
  r.interior = {RuleKind::gauss_legendre, 4};
  r.boundary = {RuleKind::trapezoid, 0, 16};
  r.time = {0.25, RuleKind::gauss_legendre, 3};
  return r;
}

dnn::Network random_vpnet(std::uint64_t seed) {
  auto net = dnn::init_network({3, 10, 8, 3}, seed, dnn::WeightBound{});
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  for (std::size_t l = 0; l < net.num_layers(); ++l)
    for (Eigen::Index i = 0; i < net.layer(l).bias.size(); ++i) net.layer(l).bias(i) = 0.3 * n01(rng);
  return net;
}

Eigen::MatrixXd random_space_time(int n, double T, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  Eigen::MatrixXd pts(3, n);
  for (int j = 0; j < n; ++j) pts.col(j) << u(rng), u(rng), T * u(rng);
  return pts;
}

}  // namespace

TEST(Manufactured, ResidualDivergenceAndData) {
  const auto p = make_problem("mms-stream");
  const auto pts = random_space_time(100, p.horizon, 3);
  EXPECT_LE(momentum_residual(p.exact_field(), p, pts).abs().maxCoeff(), 1e-9);
  EXPECT_LE(divergence_field(p.exact_field(), pts).abs().maxCoeff(), 1e-10);
  const auto [div, trace] = check_initial_data(p);
  EXPECT_LE(div, 1e-8);
  EXPECT_LE(trace, 1e-8);

  // closed-form jets against differencing
  for (Eigen::Index j = 0; j < 10; ++j) {
    const Eigen::VectorXd x = pts.col(j);
    const auto pj = p.exact(x, 2);
    for (int i = 0; i < 3; ++i) {
      Eigen::VectorXd xp = x, xm = x;
      const double h = 1e-5;
      xp(i) += h;
      xm(i) -= h;
      const auto jp = p.exact(xp, 2), jm = p.exact(xm, 2);
      for (int c = 0; c < 3; ++c) {
        EXPECT_NEAR(pj.grad(c, i), (jp.value(c) - jm.value(c)) / (2 * h), 1e-7);
        for (int k = 0; k < 3; ++k)
          EXPECT_NEAR(pj.hess[c](i, k), (jp.grad(c, k) - jm.grad(c, k)) / (2 * h), 1e-6) << c << i << k;
      }
    }
  }
  EXPECT_THROW(make_problem("taylor-green"), ConfigError);
}

TEST(Manufactured, ForcingShiftMovesPressure) {
  const auto p = make_problem("mms-stream", 0.25, Eigen::Vector2d(0.1, 0.0));
  const auto pts = random_space_time(50, p.horizon, 4);
  EXPECT_LE(momentum_residual(p.exact_field(), p, pts).abs().maxCoeff(), 1e-9);
  const auto base = make_problem("mms-stream");
  const Point2 x(0.3, 0.4);
  EXPECT_NEAR((p.forcing(x, 0.1) - base.forcing(x, 0.1))(0), 0.1, 1e-14);
}

TEST(Residual, ZeroNetworkAndSteadyFields) {
  auto p = make_problem("mms-stream");
  p.forcing = [](const Point2&, double) { return Eigen::Vector2d(1.0, 0.0); };
  const dnn::Network zero({3, 6, 3}, dnn::Activation::tanh);
  const auto r = momentum_residual(zero, p, Point2(0.2, 0.3), 0.1);
  EXPECT_EQ(r(0), -1.0);
  EXPECT_EQ(r(1), 0.0);

  // steady rotation u = (x2, -x1), p = 0, f = 0: residual is (u . grad) u = (-x1, -x2)
  p.forcing = [](const Point2&, double) { return Eigen::Vector2d::Zero().eval(); };
  Eigen::Matrix3d g = Eigen::Matrix3d::Zero();
  g(0, 1) = 1.0;
  g(1, 0) = -1.0;
  const auto rot = linear_view([](const Eigen::VectorXd& x) { return Eigen::Vector3d(x(1), -x(0), 0.0); }, g);
  const auto pts = random_space_time(20, 0.25, 5);
  const auto rr = momentum_residual(rot, p, pts);
  for (Eigen::Index j = 0; j < pts.cols(); ++j) {
    EXPECT_NEAR(rr(0, j), -pts(0, j), 1e-15);
    EXPECT_NEAR(rr(1, j), -pts(1, j), 1e-15);
  }
  EXPECT_EQ(divergence_field(rot, pts).abs().maxCoeff(), 0.0);

  Eigen::Matrix3d gx = Eigen::Matrix3d::Zero();
  gx(0, 0) = 1.0;
  const auto stretch = linear_view([](const Eigen::VectorXd& x) { return Eigen::Vector3d(x(0), 0.0, 0.0); }, gx);
  EXPECT_TRUE((divergence_field(stretch, pts) == 1.0).all());
}

TEST(Residual, NetworkMatchesPointwise) {
  const auto p = make_problem("mms-stream");
  const auto net = random_vpnet(2);
  const Eigen::Vector3d x(0.3, 0.6, 0.1);
  const auto jac = dnn::grad_x(net, x);
  const auto y = dnn::forward(net, x);
  Eigen::Vector2d expect;
  for (int i = 0; i < 2; ++i) {
    const auto h = dnn::hessian_x(net, x, i);
    expect(i) = jac(i, 2) - h(0, 0) - h(1, 1) + y(0) * jac(i, 0) + y(1) * jac(i, 1) + jac(2, i);
  }
  expect -= p.forcing(x.head<2>(), x(2));
  EXPECT_LE((momentum_residual(net, p, x.head<2>(), x(2)) - expect).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(divergence_field(net, x.head<2>(), x(2)), jac(0, 0) + jac(1, 1), 1e-14);
  EXPECT_THROW(momentum_residual(dnn::Network({2, 3, 1}, dnn::Activation::tanh), p, x.head<2>(), 0.0), ConfigError);
}

TEST(LossNSE, ExactSolutionLeavesOnlyPenalty) {
  const auto p = make_problem("mms-stream");
  const double lambda = 1e-2;
  const NSELoss loss(p, lambda, NSERules{});
  const auto l = loss.evaluate(p.exact_field());
  EXPECT_LE(l.boundary, 1e-9);
  EXPECT_LE(l.initial, 1e-9);
  EXPECT_LE(l.residual, 1e-9);
  EXPECT_LE(l.divergence, 1e-9);
  // |u*|^2_{H1}(t) = pi^2 (3 + 16 pi^2) exp(-2t) / 8
  const double a = pi * pi * (3 + 16 * pi * pi) / 8;
  const double expected = lambda * a * a * (1 - std::exp(-4 * p.horizon)) / 4;
  EXPECT_NEAR(l.penalty, expected, 1e-8 * expected);
  EXPECT_NEAR(l.total, l.epsilon_sq() + l.penalty, 1e-12 * l.total);
}

TEST(LossNSE, ZeroNetworkClosedForm) {
  const auto p = make_problem("mms-stream");
  const NSELoss loss(p, 1e-2, NSERules{});
  const auto l = loss.evaluate(dnn::Network({3, 8, 3}, dnn::Activation::tanh));
  EXPECT_NEAR(l.initial, 3 * pi * pi / 8, 1e-10);
  // independent fine quadrature of |f|^2 over the space-time cylinder
  const auto st = geometry::space_time(geometry::sample_interior(p.domain, {RuleKind::gauss_legendre, 30}),
                                       {p.horizon, RuleKind::gauss_legendre, 12});
  double fsq = 0.0;
  for (Eigen::Index q = 0; q < st.points.cols(); ++q)
    fsq += st.weights(q) * p.forcing(st.points.col(q).head<2>(), st.points(2, q)).squaredNorm();
  EXPECT_NEAR(l.total, 3 * pi * pi / 8 + fsq, 1e-8 * l.total);
  EXPECT_EQ(l.penalty, 0.0);
  EXPECT_EQ(l.boundary, 0.0);
}

TEST(LossNSE, LambdaLinearityAndPressureShift) {
  const auto p = make_problem("mms-stream");
  const auto net = random_vpnet(5);
  const auto a = NSELoss(p, 1e-2, small_rules()).evaluate(net);
  const auto b = NSELoss(p, 2e-2, small_rules()).evaluate(net);
  EXPECT_NEAR(b.penalty, 2 * a.penalty, 1e-14 * a.penalty);
  EXPECT_EQ(a.residual, b.residual);
  EXPECT_EQ(a.boundary, b.boundary);
  EXPECT_EQ(a.initial, b.initial);
  EXPECT_EQ(a.divergence, b.divergence);
  EXPECT_THROW(NSELoss(p, 0.0, small_rules()), ConfigError);

  auto shifted = net;
  shifted.layer(net.num_layers() - 1).bias(2) += 3.5;
  const auto c = NSELoss(p, 1e-2, small_rules()).evaluate(shifted);
  EXPECT_EQ(c.residual, a.residual);
  EXPECT_EQ(c.total, a.total);
}

TEST(LossNSE, HomotopyEndpoints) {
  const auto p = make_problem("mms-stream");
  const NSELoss loss(p, 1e-2, NSERules{});
  const auto at0 = loss.evaluate(norms::scaled(0.0, p.exact_field()));
  const auto at1 = loss.evaluate(p.exact_field());
  EXPECT_LE(at1.boundary, at0.boundary + 1e-12);
  EXPECT_LE(at1.initial, at0.initial + 1e-12);
  EXPECT_LE(at1.residual, at0.residual + 1e-12);
  EXPECT_LE(at1.divergence, at0.divergence + 1e-12);
}

TEST(LossNSE, GradientMatchesFiniteDifferences) {
  const auto p = make_problem("mms-stream");
  const NSELoss loss(p, 0.3, small_rules());
  for (bool with_penalty : {true, false}) {
    const auto net = random_vpnet(with_penalty ? 7 : 8);
    dnn::ParamVector g;
    const auto val = loss.value_and_grad(net, g, with_penalty);
    EXPECT_EQ(val.total, loss.evaluate(net).total);
    const auto fd = pinncert::testing::fd_param_grad(
        [&](const dnn::Network& n) {
          const auto l = loss.evaluate(n);
          return with_penalty ? l.total : l.epsilon_sq();
        },
        net);
    EXPECT_LE(pinncert::testing::max_rel_error(g, fd), 1e-6);
  }
}

TEST(Gauge, PressureMean) {
  const auto set = geometry::space_time(geometry::sample_interior(geometry::Domain::unit_square(), {}),
                                        {0.25, RuleKind::gauss_legendre, 4});
  EXPECT_EQ(fix_pressure_gauge(dnn::Network({3, 4, 3}, dnn::Activation::tanh), set), 0.0);
  Eigen::Matrix3d g = Eigen::Matrix3d::Zero();
  g(2, 0) = 1.0;
  const auto px = linear_view([](const Eigen::VectorXd& x) { return Eigen::Vector3d(0.0, 0.0, x(0)); }, g);
  EXPECT_NEAR(fix_pressure_gauge(px, set), 0.5, 1e-14);
}
