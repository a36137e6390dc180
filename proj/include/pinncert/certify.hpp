#pragma once

// Error-rate bounds implied by an achieved loss, and their calibration
// against measured errors from sweeps.

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pinncert/error.hpp"
#include "pinncert/geometry.hpp"
#include "pinncert/hodge.hpp"
#include "pinncert/norms.hpp"

namespace pinncert::certify {

struct RateBound {
  std::string norm;
  double rate_value = 0.0;  // constant-free
  std::optional<double> fitted_c;
  double exponent = 0.0;  // power of epsilon in the leading term

  nlohmann::json to_json() const {
    return {{"norm", norm},
            {"rate_value", rate_value},
            {"fitted_C", fitted_c ? nlohmann::json(*fitted_c) : nlohmann::json(nullptr)},
            {"exponent", exponent}};
  }
};

enum class EllipticVariant { l2, h12 };

inline std::vector<RateBound> elliptic_rates(double eps, double m, double m_tilde, EllipticVariant variant) {
  require(eps >= 0.0 && m >= 0.0 && m_tilde >= 0.0, "rate inputs must be nonnegative");
  if (variant == EllipticVariant::h12) return {{"L2", eps, std::nullopt, 1.0}};
  const double s = m + m_tilde;
  return {{"H1", std::sqrt(s) * std::sqrt(eps), std::nullopt, 0.5},
          {"L2", std::cbrt(s) * std::pow(eps, 2.0 / 3.0), std::nullopt, 2.0 / 3.0}};
}

inline RateBound nse_rate(double eps, double lambda) {
  require(eps >= 0.0 && lambda > 0.0, "NSE rate needs eps >= 0 and lambda > 0");
  return {"L4L2", std::sqrt(eps) + eps * std::pow(lambda, -0.25), std::nullopt, 0.5};
}

inline RateBound stability_rate(double eps, double lambda, double delta_u0, double delta_f) {
  require(delta_u0 >= 0.0 && delta_f >= 0.0, "data distances must be nonnegative");
  auto r = nse_rate(eps, lambda);
  r.rate_value += delta_u0 + delta_f;
  return r;
}

struct SweepPoint {
  double target = 0.0;    // requested eps^2
  double achieved = 0.0;  // achieved eps^2
  bool target_met = false;
  std::map<std::string, double> errors;
  nlohmann::json meta;

  double eps() const { return std::sqrt(std::max(0.0, achieved)); }

  nlohmann::json to_json() const {
    return {{"target", target}, {"achieved", achieved}, {"target_met", target_met}, {"errors", errors}, {"meta", meta}};
  }
};

struct SweepRecord {
  std::vector<SweepPoint> points;

  std::vector<SweepPoint> met() const {
    std::vector<SweepPoint> out;
    std::copy_if(points.begin(), points.end(), std::back_inserter(out), [](const auto& p) { return p.target_met; });
    return out;
  }
  nlohmann::json to_json() const {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& p : points) j.push_back(p.to_json());
    return j;
  }
};

struct Calibration {
  double c = 0.0;         // fitted constant of error = C eps^p
  double exponent = 0.0;  // fitted p
  double residual = 0.0;  // RMS of the log-log fit
  int points = 0;
  // ratios error / rate_value, when rate values are given
  double ratio_min = std::numeric_limits<double>::quiet_NaN();
  double ratio_max = std::numeric_limits<double>::quiet_NaN();

  nlohmann::json to_json() const {
    const auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    return {{"C", num(c)},
            {"exponent", num(exponent)},
            {"residual", num(residual)},
            {"points", points},
            {"ratio_min", num(ratio_min)},
            {"ratio_max", num(ratio_max)}};
  }
};

/// Least squares of log(error) = log C + p log(eps). Needs three points and two distinct eps.
inline Calibration calibrate(const std::vector<double>& eps, const std::vector<double>& errors,
                             const std::vector<double>& rate_values = {}) {
  require(eps.size() == errors.size(), "calibration needs one error per epsilon");
  require(eps.size() >= 3, "calibration needs at least 3 sweep points");
  require(rate_values.empty() || rate_values.size() == eps.size(), "calibration needs one rate value per point");
  const auto n = static_cast<Eigen::Index>(eps.size());
  Eigen::MatrixXd a(n, 2);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    require(eps[i] > 0.0 && errors[i] > 0.0, "calibration needs positive eps and errors");
    a(i, 0) = 1.0;
    a(i, 1) = std::log(eps[i]);
    b(i) = std::log(errors[i]);
  }
  const double spread = a.col(1).maxCoeff() - a.col(1).minCoeff();
  require(spread > 1e-12, "degenerate sweep: all eps are equal");
  const Eigen::Vector2d sol = a.colPivHouseholderQr().solve(b);
  Calibration c;
  c.c = std::exp(sol(0));
  c.exponent = sol(1);
  c.residual = std::sqrt((a * sol - b).squaredNorm() / static_cast<double>(n));
  c.points = static_cast<int>(n);
  if (!rate_values.empty()) {
    c.ratio_min = std::numeric_limits<double>::infinity();
    c.ratio_max = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double r = errors[i] / rate_values[i];
      c.ratio_min = std::min(c.ratio_min, r);
      c.ratio_max = std::max(c.ratio_max, r);
    }
  }
  return c;
}

/// Calibrates one error norm over the met targets of a sweep; `rate` maps eps to the rate value.
template <class Rate>
Calibration calibrate(const SweepRecord& sweep, const std::string& norm, Rate&& rate) {
  std::vector<double> e, err, rv;
  for (const auto& p : sweep.met()) {
    const auto it = p.errors.find(norm);
    require(it != p.errors.end(), "sweep point lacks error norm '" + norm + "'");
    e.push_back(p.eps());
    err.push_back(it->second);
    rv.push_back(rate(p.eps()));
  }
  return calibrate(e, err, rv);
}

struct Certificate {
  std::string kind;  // elliptic-L2, elliptic-H12, NSE
  double epsilon = 0.0;
  std::map<std::string, double> constants;
  std::vector<RateBound> bounds;
  double budget_excess = 0.0;  // |u_N|_{H^2} - M~ when positive

  nlohmann::json to_json() const {
    nlohmann::json b = nlohmann::json::array();
    for (const auto& r : bounds) b.push_back(r.to_json());
    nlohmann::json j{{"kind", kind}, {"epsilon", epsilon}, {"constants", constants}, {"bounds", b}};
    j["budget_exceeded"] = budget_excess > 0.0;
    if (budget_excess > 0.0) j["budget_exceeded_by"] = budget_excess;
    return j;
  }
};

/// `h2_norm` is the network's measured H^2 norm (NaN when no budget applies).
inline Certificate elliptic_certificate(double eps, double m, double m_tilde, double alpha, double beta,
                                        EllipticVariant variant, double h2_norm = std::nan("")) {
  Certificate c;
  c.kind = variant == EllipticVariant::l2 ? "elliptic-L2" : "elliptic-H12";
  c.epsilon = eps;
  c.constants = {{"M", m}, {"alpha", alpha}, {"beta", beta}};
  if (std::isfinite(m_tilde)) c.constants["M_tilde"] = m_tilde;
  c.bounds = elliptic_rates(eps, m, std::isfinite(m_tilde) ? m_tilde : 0.0, variant);
  if (std::isfinite(h2_norm) && std::isfinite(m_tilde)) c.budget_excess = std::max(0.0, h2_norm - m_tilde);
  return c;
}

inline Certificate nse_certificate(double eps, double lambda) {
  Certificate c;
  c.kind = "NSE";
  c.epsilon = eps;
  c.constants = {{"lambda", lambda}};
  c.bounds = {nse_rate(eps, lambda)};
  return c;
}

inline void attach_calibration(Certificate& cert, const std::string& norm, const Calibration& cal) {
  for (auto& b : cert.bounds)
    if (b.norm == norm) b.fitted_c = cal.ratio_max;
}

inline Certificate certificate_from_json(const nlohmann::json& j) {
  try {
    Certificate c;
    c.kind = j.at("kind").get<std::string>();
    c.epsilon = j.at("epsilon").get<double>();
    c.constants = j.at("constants").get<std::map<std::string, double>>();
    for (const auto& b : j.at("bounds")) {
      RateBound r;
      r.norm = b.at("norm").get<std::string>();
      r.rate_value = b.at("rate_value").get<double>();
      r.exponent = b.at("exponent").get<double>();
      if (!b.at("fitted_C").is_null()) r.fitted_c = b.at("fitted_C").get<double>();
      c.bounds.push_back(r);
    }
    if (j.contains("budget_exceeded_by")) c.budget_excess = j.at("budget_exceeded_by").get<double>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed certificate: ") + e.what());
  }
}

/// |v|_{L4(0,T; H1)} of the gradient part of the velocity of a space-time field,
/// from Hodge decompositions at the time nodes.
struct HodgeScaling {
  std::vector<double> eps;
  std::vector<double> values;
  std::optional<Calibration> fit;

  nlohmann::json to_json() const {
    nlohmann::json j{{"eps", eps}, {"v_norm", values}};
    j["fit"] = fit ? fit->to_json() : nlohmann::json(nullptr);
    return j;
  }
};

inline double gradient_part_l4h1(const norms::FieldView& velocity, const hodge::Grid& grid,
                                 const geometry::SpaceTimeSampler& sampler) {
  require(velocity.dim == 3 && velocity.components >= 2, "gradient-part norm needs a space-time velocity field");
  const auto [times, weights] = geometry::time_rule(sampler);
  double s = 0.0;
  for (Eigen::Index k = 0; k < times.size(); ++k) {
    const auto parts = hodge::decompose(hodge::sample_view(velocity, grid, times(k), 0, 1));
    const double h1 = hodge::h1_norm(parts.gradient_part());
    s += weights(k) * std::pow(h1, 4);
  }
  return std::pow(s, 0.25);
}

inline HodgeScaling hodge_scaling_check(const std::vector<double>& eps, const std::vector<norms::FieldView>& fields,
                                        const hodge::Grid& grid, const geometry::SpaceTimeSampler& sampler) {
  require(eps.size() == fields.size(), "one field per epsilon");
  HodgeScaling out;
  out.eps = eps;
  for (const auto& f : fields) out.values.push_back(gradient_part_l4h1(f, grid, sampler));
  std::vector<double> e, v;
  for (std::size_t i = 0; i < eps.size(); ++i)
    if (eps[i] > 0.0 && out.values[i] > 0.0) {
      e.push_back(eps[i]);
      v.push_back(out.values[i]);
    }
  if (e.size() >= 3 && *std::max_element(e.begin(), e.end()) > *std::min_element(e.begin(), e.end()))
    out.fit = calibrate(e, v);
  return out;
}

}  // namespace pinncert::certify
