#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "pinncert/norms.hpp"

using namespace pinncert;
using namespace pinncert::norms;
using geometry::Domain;
using geometry::RuleKind;

namespace {

constexpr double pi = std::numbers::pi;

// sin(pi x1) sin(pi x2) * exp(-t) (time factor only when dim == 3)
FieldView sine_bump(int dim = 2) {
  return from_pointwise(1, dim, [dim](const Eigen::VectorXd& x, int) {
    const double e = dim == 3 ? std::exp(-x(2)) : 1.0;
    const double s1 = std::sin(pi * x(0)), s2 = std::sin(pi * x(1));
    const double c1 = std::cos(pi * x(0)), c2 = std::cos(pi * x(1));
    PointJet pj;
    pj.value = Eigen::VectorXd::Constant(1, s1 * s2 * e);
    pj.grad = Eigen::MatrixXd::Zero(1, dim);
    pj.grad(0, 0) = pi * c1 * s2 * e;
    pj.grad(0, 1) = pi * s1 * c2 * e;
    if (dim == 3) pj.grad(0, 2) = -s1 * s2 * e;
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
    h(0, 0) = h(1, 1) = -pi * pi * s1 * s2 * e;
    h(0, 1) = h(1, 0) = pi * pi * c1 * c2 * e;
    pj.hess = {h};
    return pj;
  });
}

// Boundary trace cos(k theta) on the unit disk, extended as r^k cos(k theta).
FieldView disk_mode(int k) {
  return from_pointwise(1, 2, [k](const Eigen::VectorXd& x, int) {
    PointJet pj;
    const double r = x.norm(), th = std::atan2(x(1), x(0));
    pj.value = Eigen::VectorXd::Constant(1, std::pow(r, k) * std::cos(k * th));
    pj.grad = Eigen::MatrixXd::Zero(1, 2);
    pj.hess = {Eigen::MatrixXd::Zero(2, 2)};
    return pj;
  });
}

dnn::Network x1_network() {
  dnn::Network net({2, 1, 1}, dnn::Activation::identity);
  net.layer(0).weight << 1.0, 0.0;
  net.layer(1).weight << 1.0;
  return net;
}

}  // namespace

TEST(Norms, ZeroField) {
  NormRules rules;
  const auto sq = Domain::unit_square();
  for (auto kind : {NormKind::l2_domain, NormKind::h1_domain, NormKind::h2_domain, NormKind::l2_boundary,
                    NormKind::h12_boundary})
    EXPECT_EQ(norm(zero_field(2, 2), kind, sq, rules), 0.0);
  EXPECT_EQ(norm(zero_field(2, 3), NormKind::l4_time, sq, rules), 0.0);
  EXPECT_EQ(h2_norm_of_network(dnn::Network({2, 4, 1}, dnn::Activation::tanh), sq), 0.0);
}

TEST(Norms, SineBumpClosedForms) {
  const auto sq = Domain::unit_square();
  NormRules rules;
  const auto u = sine_bump();
  EXPECT_NEAR(norm(u, NormKind::l2_domain, sq, rules), 0.5, 1e-12);
  EXPECT_NEAR(norm(u, NormKind::h1_domain, sq, rules), std::sqrt(0.25 + pi * pi / 2), 1e-12);
  EXPECT_NEAR(norm(u, NormKind::h2_domain, sq, rules), std::sqrt(0.25 + pi * pi / 2 + std::pow(pi, 4)), 1e-11);
}

TEST(Norms, TimeComposites) {
  const auto sq = Domain::unit_square();
  NormRules rules;
  rules.time = {0.25, RuleKind::gauss_legendre, 8};
  const auto u = sine_bump(3);
  const double T = 0.25;
  const double h1sq = 0.25 + pi * pi / 2;
  rules.inner = NormKind::h1_domain;
  const double l4 = norm(u, NormKind::l4_time, sq, rules);
  EXPECT_NEAR(l4, std::pow(h1sq * h1sq * (1 - std::exp(-4 * T)) / 4, 0.25), 1e-12);
  EXPECT_NEAR(norm(u, NormKind::l2_space_time, sq, rules), std::sqrt(0.25 * (1 - std::exp(-2 * T)) / 2), 1e-12);
  // spatial norm at a fixed time
  EXPECT_NEAR(norm(u, NormKind::l2_domain, sq, rules, 0.1), 0.5 * std::exp(-0.1), 1e-12);
}

TEST(Norms, AffineNetwork) {
  const auto sq = Domain::unit_square();
  const double h2 = h2_norm_of_network(x1_network(), sq);
  EXPECT_NEAR(h2, std::sqrt(1.0 / 3 + 1.0), 1e-12);
  EXPECT_NEAR(h2, 1.1547, 1e-4);
  EXPECT_NEAR(norm(of_network(x1_network()), NormKind::h1_domain, sq), h2, 1e-14);
}

TEST(Norms, BoundaryModesOnDisk) {
  const auto disk = Domain::disk();
  NormRules rules;
  rules.boundary = {RuleKind::trapezoid, 0, 128};
  const double c1 = norm(disk_mode(1), NormKind::h12_boundary, disk, rules);
  EXPECT_NEAR(c1 * c1, std::sqrt(2.0) * pi, 1e-12);
  for (int k = 0; k <= 10; ++k) {
    const double n2 = squared_norm(disk_mode(k), NormKind::h12_boundary, disk, rules);
    // L * sum over +-k of (1+k^2)^{1/2} |c_k|^2, c_{+-k} = 1/2 (c_0 = 1)
    const double expected = k == 0 ? 2 * pi : 2 * pi * std::sqrt(1.0 + k * k) * 0.5;
    EXPECT_LE(std::abs(n2 - expected) / expected, 1e-8) << k;
  }
}

TEST(Norms, H12FormMatchesCoefficients) {
  const auto b = geometry::sample_boundary(Domain::unit_square(), {RuleKind::trapezoid, 0, 40});
  const auto g = [](double s) { return std::exp(std::sin(2 * pi * s / 4)) + s * (4 - s); };
  Eigen::VectorXd samples(b.size());
  for (Eigen::Index j = 0; j < b.size(); ++j) samples(j) = g(b.arc(j));
  const H12Form form(b.size(), b.length, 12);
  const auto c = geometry::boundary_fourier_coeffs(g, 12, b);
  EXPECT_NEAR(form.squared(samples), h12_squared_from_coeffs(c, b.length), 1e-11);
  EXPECT_THROW(H12Form(b.size(), b.length, 20), ConfigError);
}

TEST(Norms, ConstantTraceH12EqualsL2) {
  const auto sq = Domain::unit_square();
  const auto c = from_pointwise(1, 2, [](const Eigen::VectorXd&, int) {
    return PointJet{Eigen::VectorXd::Constant(1, 1.7), Eigen::MatrixXd::Zero(1, 2), {Eigen::MatrixXd::Zero(2, 2)}};
  });
  NormRules rules;
  EXPECT_NEAR(norm(c, NormKind::h12_boundary, sq, rules), norm(c, NormKind::l2_boundary, sq, rules), 1e-12);
  EXPECT_NEAR(norm(c, NormKind::l2_boundary, sq, rules), 1.7 * 2.0, 1e-12);
}

TEST(Norms, NestingHomogeneityTriangle) {
  const auto sq = Domain::unit_square();
  NormRules rules;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto a = of_network(dnn::init_network({2, 12, 1}, seed, dnn::WeightBound{}));
    const auto b = of_network(dnn::init_network({2, 12, 1}, seed + 50, dnn::WeightBound{}));
    const double l2 = norm(a, NormKind::l2_domain, sq, rules);
    const double h1 = norm(a, NormKind::h1_domain, sq, rules);
    const double h2 = norm(a, NormKind::h2_domain, sq, rules);
    EXPECT_LE(l2, h1);
    EXPECT_LE(h1, h2);
    for (auto kind : {NormKind::l2_domain, NormKind::h1_domain, NormKind::h2_domain, NormKind::l2_boundary,
                      NormKind::h12_boundary}) {
      const double na = norm(a, kind, sq, rules), nb = norm(b, kind, sq, rules);
      EXPECT_NEAR(norm(scaled(-2.5, a), kind, sq, rules), 2.5 * na, 1e-12 * na);
      EXPECT_LE(norm(combine(1.0, a, 1.0, b), kind, sq, rules), na + nb + 1e-12);
    }
  }
}
