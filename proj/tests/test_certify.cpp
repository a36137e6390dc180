#include <gtest/gtest.h>

#include <cmath>

#include "pinncert/certify.hpp"
#include "pinncert/nse.hpp"

using namespace pinncert;
using namespace pinncert::certify;

TEST(Rates, Examples) {
  for (auto v : {EllipticVariant::l2, EllipticVariant::h12})
    for (const auto& r : elliptic_rates(0.0, 3.0, 4.0, v)) EXPECT_EQ(r.rate_value, 0.0);
  const auto l2 = elliptic_rates(1e-4, 1.0, 1.0, EllipticVariant::l2);
  ASSERT_EQ(l2.size(), 2u);
  EXPECT_EQ(l2[0].norm, "H1");
  EXPECT_NEAR(l2[0].rate_value, 1.41421e-2, 1e-7);
  EXPECT_NEAR(l2[1].rate_value, 2.714e-3, 1e-6);
  const auto h12 = elliptic_rates(1e-3, 1.0, 1.0, EllipticVariant::h12);
  ASSERT_EQ(h12.size(), 1u);
  EXPECT_DOUBLE_EQ(h12[0].rate_value, 1e-3);
  EXPECT_THROW(elliptic_rates(-1.0, 1.0, 1.0, EllipticVariant::l2), ConfigError);

  EXPECT_EQ(nse_rate(0.0, 1e-2).rate_value, 0.0);
  EXPECT_NEAR(nse_rate(1e-4, 1e-2).rate_value, 1.0316e-2, 1e-6);
  EXPECT_NEAR(nse_rate(1e-4, 1e300).rate_value, 1e-2, 1e-15);
  EXPECT_EQ(stability_rate(0.0, 1e-2, 0.0, 0.0).rate_value, 0.0);
  EXPECT_DOUBLE_EQ(stability_rate(0.0, 1e-2, 0.1, 0.0).rate_value, 0.1);
  EXPECT_NEAR(stability_rate(1e-4, 1e-2, 1e-3, 1e-3).rate_value, 1.2316e-2, 1e-6);

  // monotone in eps
  double prev = -1.0;
  for (double e : {1e-6, 1e-4, 1e-2, 1.0}) {
    const double v = elliptic_rates(e, 1.0, 2.0, EllipticVariant::l2)[1].rate_value + nse_rate(e, 0.1).rate_value;
    EXPECT_GT(v, prev);
    prev = v;
  }
}

TEST(Calibrate, PowerLaws) {
  const std::vector<double> eps{0.3, 0.1, 0.03, 0.01};
  std::vector<double> err, lin, rate;
  for (double e : eps) {
    err.push_back(2.0 * std::pow(e, 2.0 / 3.0));
    lin.push_back(e);
    rate.push_back(std::pow(e, 2.0 / 3.0));
  }
  const auto c = calibrate(eps, err, rate);
  EXPECT_NEAR(c.c, 2.0, 1e-6);
  EXPECT_NEAR(c.exponent, 2.0 / 3.0, 1e-6);
  EXPECT_LE(c.residual, 1e-12);
  EXPECT_NEAR(c.ratio_min, 2.0, 1e-12);
  EXPECT_NEAR(c.ratio_max, 2.0, 1e-12);
  EXPECT_NEAR(calibrate(eps, lin).exponent, 1.0, 1e-6);

  EXPECT_THROW(calibrate({0.1}, {0.2}), ConfigError);
  EXPECT_THROW(calibrate({0.1, 0.1, 0.1}, {0.2, 0.3, 0.4}), ConfigError);

  SweepRecord sweep;
  for (std::size_t i = 0; i < eps.size(); ++i)
    sweep.points.push_back({eps[i] * eps[i], eps[i] * eps[i], true, {{"L2", err[i]}}, {}});
  sweep.points.push_back({1e-8, 1e-3, false, {{"L2", 5.0}}, {}});
  const auto s = calibrate(sweep, "L2", [](double e) { return std::pow(e, 2.0 / 3.0); });
  EXPECT_EQ(s.points, 4);
  EXPECT_NEAR(s.exponent, 2.0 / 3.0, 1e-6);
  EXPECT_THROW(calibrate(sweep, "H1", [](double e) { return e; }), ConfigError);
}

TEST(Certificate, JsonRoundTripAndBudgetFlag) {
  auto cert = elliptic_certificate(1e-2, 5.0, 10.0, 1.0, 1.0, EllipticVariant::l2, 10.5);
  EXPECT_DOUBLE_EQ(cert.budget_excess, 0.5);
  Calibration cal;
  cal.ratio_max = 3.0;
  attach_calibration(cert, "L2", cal);
  const auto j = cert.to_json();
  EXPECT_EQ(j["kind"], "elliptic-L2");
  EXPECT_TRUE(j["budget_exceeded"].get<bool>());
  EXPECT_EQ(j["bounds"][1]["fitted_C"], 3.0);
  EXPECT_TRUE(j["bounds"][0]["fitted_C"].is_null());
  const auto back = certificate_from_json(j);
  EXPECT_EQ(back.to_json().dump(), j.dump());
  EXPECT_THROW(certificate_from_json(nlohmann::json{{"kind", "x"}}), ConfigError);

  const auto ok = elliptic_certificate(1e-2, 5.0, 10.0, 1.0, 1.0, EllipticVariant::l2, 9.0);
  EXPECT_FALSE(ok.to_json()["budget_exceeded"].get<bool>());
  EXPECT_EQ(nse_certificate(0.0, 1e-2).bounds[0].rate_value, 0.0);
}

TEST(HodgeScaling, ExactAndPerturbedFields) {
  const auto p = nse::make_problem("mms-stream");
  const auto grid = hodge::Grid::unit_square(32);
  const geometry::SpaceTimeSampler sampler{p.horizon, geometry::RuleKind::gauss_legendre, 3};
  // gradient of q = x(1-x)y(1-y)(1+t), zero on the boundary
  const auto grad_q = norms::from_pointwise(3, 3, [](const Eigen::VectorXd& x, int) {
    norms::PointJet pj;
    const double a = x(0) * (1 - x(0)), b = x(1) * (1 - x(1)), s = 1 + x(2);
    pj.value = Eigen::Vector3d((1 - 2 * x(0)) * b * s, a * (1 - 2 * x(1)) * s, 0.0);
    return pj;
  });
  EXPECT_LE(gradient_part_l4h1(p.exact_field(), grid, sampler), 1e-4);

  std::vector<double> eps{1e-1, 1e-2, 1e-3, 1e-4};
  std::vector<norms::FieldView> fields;
  for (double e : eps) fields.push_back(norms::combine(1.0, p.exact_field(), std::sqrt(e), grad_q));
  const auto r = hodge_scaling_check(eps, fields, grid, sampler);
  ASSERT_TRUE(r.fit.has_value());
  EXPECT_NEAR(r.fit->exponent, 0.5, 0.1);
}
