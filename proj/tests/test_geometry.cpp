#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "pinncert/geometry.hpp"

using namespace pinncert;
using namespace pinncert::geometry;

constexpr double pi = std::numbers::pi;

TEST(GaussLegendre, IntegratesPolynomialsExactly) {
  for (int q : {1, 2, 5, 16, 40}) {
    const auto g = gauss_legendre(q, 0.0, 2.0);
    EXPECT_NEAR(g.weights.sum(), 2.0, 1e-13);
    // degree 2q-1 is integrated exactly
    const int p = 2 * q - 1;
    double s = 0.0;
    for (int i = 0; i < q; ++i) s += g.weights(i) * std::pow(g.nodes(i), p);
    EXPECT_NEAR(s, std::pow(2.0, p + 1) / (p + 1), 1e-12 * std::pow(2.0, p + 1));
  }
  EXPECT_THROW(gauss_legendre(0), ConfigError);
}

TEST(Interior, MeasureAndMoments) {
  const auto sq = Domain::unit_square();
  const auto gl4 = sample_interior(sq, {RuleKind::gauss_legendre, 4});
  EXPECT_NEAR(quad_integrate([](const Point2&) { return 1.0; }, gl4), 1.0, 1e-12);
  EXPECT_NEAR(quad_integrate([](const Point2& x) { return x.x(); }, gl4), 0.5, 1e-14);

  const auto gl8 = sample_interior(sq, {RuleKind::gauss_legendre, 8});
  const double s = quad_integrate([](const Point2& x) { return std::sin(pi * x.x()) * std::sin(pi * x.y()); }, gl8);
  EXPECT_NEAR(s, 4.0 / (pi * pi), 1e-10);

  const auto rect = Domain::rectangle(-1.0, 2.0, 0.5, 1.0);
  const auto r = sample_interior(rect, {RuleKind::gauss_legendre, 6});
  EXPECT_NEAR(r.weights.sum(), 1.5, 1e-12);
  // x^3 y^5 integrates exactly at order 6
  const double exact = (std::pow(2.0, 4) - 1.0) / 4.0 * (1.0 - std::pow(0.5, 6)) / 6.0;
  EXPECT_NEAR(quad_integrate([](const Point2& x) { return std::pow(x.x(), 3) * std::pow(x.y(), 5); }, r), exact,
              1e-13);
}

TEST(Interior, DiskRule) {
  const auto disk = Domain::disk();
  const auto set = sample_interior(disk, {RuleKind::gauss_legendre, 16});
  EXPECT_NEAR(set.weights.sum(), pi, 1e-12);
  // integral of |x|^2 over the unit disk is pi/2
  EXPECT_NEAR(quad_integrate([](const Point2& x) { return x.squaredNorm(); }, set), pi / 2, 1e-12);
  for (Eigen::Index j = 0; j < set.size(); ++j) EXPECT_TRUE(disk.contains(set.point(j)));
}

TEST(Interior, MonteCarloDeterministicAndExactMass) {
  for (const auto& dom : {Domain::unit_square(), Domain::disk(0.5, -0.5, 2.0)}) {
    InteriorRule rule{RuleKind::monte_carlo, 0, 500, 42};
    const auto a = sample_interior(dom, rule);
    const auto b = sample_interior(dom, rule);
    EXPECT_EQ(a.points, b.points);
    EXPECT_NEAR(a.weights.sum(), dom.measure(), 1e-12);
    for (Eigen::Index j = 0; j < a.size(); ++j) EXPECT_TRUE(dom.contains(a.point(j)));
    rule.seed = 43;
    EXPECT_NE(sample_interior(dom, rule).points, a.points);
  }
}

TEST(Boundary, LengthsAndNormals) {
  const auto sq = Domain::unit_square();
  EXPECT_DOUBLE_EQ(sq.perimeter(), 4.0);
  for (auto rule : {BoundaryRule{RuleKind::trapezoid, 0, 64}, BoundaryRule{RuleKind::gauss_legendre, 8},
                    BoundaryRule{RuleKind::monte_carlo, 0, 100, 3}}) {
    const auto b = sample_boundary(sq, rule);
    EXPECT_NEAR(b.weights.sum(), 4.0, 1e-12);
    for (Eigen::Index j = 0; j < b.size(); ++j) {
      EXPECT_NEAR(b.normals.col(j).norm(), 1.0, 1e-15);
      EXPECT_TRUE(sq.contains(b.points.col(j)));
    }
  }
  const auto disk = Domain::disk(0.0, 0.0, 1.5);
  const auto bd = sample_boundary(disk, {RuleKind::trapezoid, 0, 50});
  EXPECT_NEAR(bd.weights.sum(), 3.0 * pi, 1e-12);
  EXPECT_THROW(sample_boundary(disk, {RuleKind::gauss_legendre, 8}), ConfigError);
}

TEST(Boundary, NormalsOrthogonalToTangent) {
  for (const auto& dom : {Domain::rectangle(0.0, 2.0, -1.0, 0.5), Domain::disk(1.0, 1.0, 0.7)}) {
    const double len = dom.perimeter();
    for (int j = 0; j < 97; ++j) {
      const double s = len * (j + 0.37) / 97.0;
      const double h = 1e-6;
      const auto a = dom.boundary_at(s - h), b = dom.boundary_at(s + h);
      const Point2 t = (b.x - a.x) / (2 * h);
      const auto bp = dom.boundary_at(s);
      EXPECT_LE(std::abs(bp.normal.dot(t)), 1e-8);
      // outward: a small step along the normal leaves the domain
      EXPECT_FALSE(dom.contains(bp.x + 1e-6 * bp.normal, 0.0));
    }
  }
}

TEST(Boundary, ParametrisationIsPeriodic) {
  const auto sq = Domain::unit_square();
  EXPECT_TRUE(sq.boundary_at(0.3).x.isApprox(sq.boundary_at(4.3).x));
  EXPECT_TRUE(sq.boundary_at(-0.5).x.isApprox(Point2(0.0, 0.5)));
}

TEST(Fourier, ElementaryModes) {
  const auto disk = Domain::disk();
  const auto b = sample_boundary(disk, {RuleKind::trapezoid, 0, 64});
  const int K = 8;

  auto c = boundary_fourier_coeffs([](double) { return 1.0; }, K, b);
  for (int k = -K; k <= K; ++k) EXPECT_NEAR(std::abs(c[k + K] - (k == 0 ? 1.0 : 0.0)), 0.0, 1e-12);

  c = boundary_fourier_coeffs([](double th) { return std::cos(th); }, K, b);
  for (int k = -K; k <= K; ++k) EXPECT_NEAR(std::abs(c[k + K] - (std::abs(k) == 1 ? 0.5 : 0.0)), 0.0, 1e-12);

  c = boundary_fourier_coeffs([](double th) { return std::sin(3 * th); }, K, b);
  for (int k = -K; k <= K; ++k) {
    if (std::abs(k) == 3)
      EXPECT_NEAR(std::abs(c[k + K]), 0.5, 1e-12);
    else
      EXPECT_NEAR(std::abs(c[k + K]), 0.0, 1e-12);
  }
}

TEST(Fourier, NyquistAndUniformity) {
  const auto b = sample_boundary(Domain::unit_square(), {RuleKind::trapezoid, 0, 16});
  EXPECT_NO_THROW(boundary_fourier_coeffs([](double) { return 0.0; }, nyquist_modes(16), b));
  EXPECT_THROW(boundary_fourier_coeffs([](double) { return 0.0; }, 8, b), ConfigError);
  const auto mc = sample_boundary(Domain::unit_square(), {RuleKind::monte_carlo, 0, 16, 1});
  EXPECT_THROW(boundary_fourier_coeffs([](double) { return 0.0; }, 2, mc), ConfigError);
}

TEST(SpaceTime, SliceLayout) {
  const auto spatial = sample_interior(Domain::unit_square(), {RuleKind::gauss_legendre, 4});
  const auto st = space_time(spatial, {0.25, RuleKind::gauss_legendre, 5});
  EXPECT_EQ(st.slices(), 5);
  EXPECT_EQ(st.points.cols(), 16 * 5);
  EXPECT_NEAR(st.weights.sum(), 0.25, 1e-14);
  for (Eigen::Index k = 0; k < st.slices(); ++k) {
    EXPECT_GE(st.times(k), 0.0);
    EXPECT_LE(st.times(k), 0.25);
    for (Eigen::Index j = 0; j < 16; ++j) {
      EXPECT_EQ(st.points(2, k * 16 + j), st.times(k));
      EXPECT_EQ(st.points(0, k * 16 + j), spatial.points(0, j));
    }
  }
  // integral of t over [0, T] x unit square is T^2/2
  EXPECT_NEAR(st.points.row(2).dot(st.weights), 0.25 * 0.25 / 2, 1e-15);

  const auto tr = space_time(spatial, {1.0, RuleKind::trapezoid, 3});
  EXPECT_EQ(tr.times(0), 0.0);
  EXPECT_EQ(tr.times(2), 1.0);
  EXPECT_NEAR(tr.weights.sum(), 1.0, 1e-14);
  EXPECT_THROW(space_time(spatial, {0.0, RuleKind::gauss_legendre, 3}), ConfigError);
}
