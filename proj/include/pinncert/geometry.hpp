#pragma once

// Domains, quadrature and sampling on them, boundary parametrisation by arc
// length, and Fourier coefficients of periodic boundary data.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "pinncert/error.hpp"

namespace pinncert::geometry {

using Point2 = Eigen::Vector2d;

enum class DomainKind { rectangle, disk };

struct BoundaryPoint {
  Point2 x;
  Point2 normal;  // outward unit normal
};

/// Axis-aligned rectangle or disk; the boundary is one closed curve traversed
/// counter-clockwise by arc length s in [0, perimeter).
struct Domain {
  DomainKind kind = DomainKind::rectangle;
  double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;  // rectangle
  double cx = 0.0, cy = 0.0, radius = 1.0;        // disk

  static Domain unit_square() { return {}; }
  static Domain rectangle(double x0, double x1, double y0, double y1) {
    require(x1 > x0 && y1 > y0, "rectangle must have positive side lengths");
    Domain d;
    d.x0 = x0;
    d.x1 = x1;
    d.y0 = y0;
    d.y1 = y1;
    return d;
  }
  static Domain disk(double cx = 0.0, double cy = 0.0, double radius = 1.0) {
    require(radius > 0.0, "disk radius must be positive");
    Domain d;
    d.kind = DomainKind::disk;
    d.cx = cx;
    d.cy = cy;
    d.radius = radius;
    return d;
  }

  bool is_rectangle() const { return kind == DomainKind::rectangle; }

  double measure() const {
    return is_rectangle() ? (x1 - x0) * (y1 - y0) : std::numbers::pi * radius * radius;
  }
  double perimeter() const {
    return is_rectangle() ? 2.0 * ((x1 - x0) + (y1 - y0)) : 2.0 * std::numbers::pi * radius;
  }
  bool contains(const Point2& p, double tol = 1e-12) const {
    if (is_rectangle())
      return p.x() >= x0 - tol && p.x() <= x1 + tol && p.y() >= y0 - tol && p.y() <= y1 + tol;
    return std::hypot(p.x() - cx, p.y() - cy) <= radius + tol;
  }

  /// Boundary point and outward normal at arc length s (taken modulo the perimeter).
  /// Rectangles start at (x0, y0); at a corner the normal of the outgoing edge is used.
  BoundaryPoint boundary_at(double s) const {
    const double len = perimeter();
    s = std::fmod(s, len);
    if (s < 0) s += len;
    if (!is_rectangle()) {
      const double th = s / radius;
      const Point2 n(std::cos(th), std::sin(th));
      return {Point2(cx, cy) + radius * n, n};
    }
    const double w = x1 - x0, h = y1 - y0;
    if (s < w) return {Point2(x0 + s, y0), Point2(0, -1)};
    s -= w;
    if (s < h) return {Point2(x1, y0 + s), Point2(1, 0)};
    s -= h;
    if (s < w) return {Point2(x1 - s, y1), Point2(0, 1)};
    s -= w;
    return {Point2(x0, y1 - s), Point2(-1, 0)};
  }
};

inline std::string to_string(DomainKind kind) {
  return kind == DomainKind::rectangle ? "rectangle" : "disk";
}

/// Weighted interior points (dim x P).
struct PointSet {
  Eigen::MatrixXd points;
  Eigen::VectorXd weights;

  Eigen::Index size() const { return points.cols(); }
  Point2 point(Eigen::Index j) const { return points.col(j).head<2>(); }
};

/// Weighted boundary points with outward normals and arc-length positions.
struct BoundarySet {
  Eigen::MatrixXd points;   // 2 x n
  Eigen::MatrixXd normals;  // 2 x n
  Eigen::VectorXd weights;
  Eigen::VectorXd arc;      // arc-length position of each point
  double length = 0.0;
  bool uniform = false;     // equispaced in arc length with equal weights

  Eigen::Index size() const { return points.cols(); }
};

enum class RuleKind { gauss_legendre, monte_carlo, trapezoid };

inline std::string to_string(RuleKind kind) {
  switch (kind) {
    case RuleKind::gauss_legendre: return "gauss_legendre";
    case RuleKind::monte_carlo: return "monte_carlo";
    case RuleKind::trapezoid: return "trapezoid";
  }
  return "?";
}

inline RuleKind parse_rule_kind(const std::string& s) {
  if (s == "gauss_legendre" || s == "gl") return RuleKind::gauss_legendre;
  if (s == "monte_carlo" || s == "mc") return RuleKind::monte_carlo;
  if (s == "trapezoid" || s == "uniform") return RuleKind::trapezoid;
  throw ConfigError("unknown quadrature rule '" + s + "'");
}

struct InteriorRule {
  RuleKind kind = RuleKind::gauss_legendre;
  int order = 16;          // GL nodes per direction (radial nodes on a disk)
  int count = 1024;        // Monte Carlo point count m
  std::uint64_t seed = 0;
};

struct BoundaryRule {
  RuleKind kind = RuleKind::trapezoid;
  int order = 16;          // GL nodes per rectangle edge
  int count = 128;         // trapezoid / Monte Carlo point count n
  std::uint64_t seed = 0;
};

struct GaussRule1D {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

/// Gauss-Legendre nodes and weights on [a, b] by Newton iteration on P_q.
inline GaussRule1D gauss_legendre(int q, double a = -1.0, double b = 1.0) {
  require(q >= 1, "Gauss-Legendre order must be >= 1");
  GaussRule1D rule{Eigen::VectorXd(q), Eigen::VectorXd(q)};
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  for (int i = 0; i < (q + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (q + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= q; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
      }
      dp = q * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    // Recompute the derivative at the converged node.
    double p0 = 1.0, p1 = 0.0;
    for (int k = 1; k <= q; ++k) {
      const double p2 = p1;
      p1 = p0;
      p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
    }
    dp = q * (z * p0 - p1) / (z * z - 1.0);
    const double w = 2.0 / ((1.0 - z * z) * dp * dp);
    rule.nodes(i) = mid - half * z;
    rule.nodes(q - 1 - i) = mid + half * z;
    rule.weights(i) = half * w;
    rule.weights(q - 1 - i) = half * w;
  }
  return rule;
}

namespace detail {

inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace detail

inline PointSet sample_interior(const Domain& domain, const InteriorRule& rule) {
  PointSet set;
  if (rule.kind == RuleKind::monte_carlo) {
    require(rule.count >= 1, "Monte Carlo point count must be >= 1");
    std::mt19937_64 rng(rule.seed);
    set.points.resize(2, rule.count);
    for (int j = 0; j < rule.count; ++j) {
      if (domain.is_rectangle()) {
        set.points(0, j) = domain.x0 + (domain.x1 - domain.x0) * detail::unit_uniform(rng);
        set.points(1, j) = domain.y0 + (domain.y1 - domain.y0) * detail::unit_uniform(rng);
      } else {
        Point2 p;
        do {
          p = Point2(2.0 * detail::unit_uniform(rng) - 1.0, 2.0 * detail::unit_uniform(rng) - 1.0);
        } while (p.squaredNorm() > 1.0);
        set.points.col(j) = Point2(domain.cx, domain.cy) + domain.radius * p;
      }
    }
    set.weights = Eigen::VectorXd::Constant(rule.count, domain.measure() / rule.count);
    return set;
  }
  require(rule.kind == RuleKind::gauss_legendre, "interior rules are gauss_legendre or monte_carlo");
  const int q = rule.order;
  if (domain.is_rectangle()) {
    const auto gx = gauss_legendre(q, domain.x0, domain.x1);
    const auto gy = gauss_legendre(q, domain.y0, domain.y1);
    set.points.resize(2, q * q);
    set.weights.resize(q * q);
    for (int i = 0; i < q; ++i)
      for (int j = 0; j < q; ++j) {
        set.points.col(i * q + j) = Point2(gx.nodes(i), gy.nodes(j));
        set.weights(i * q + j) = gx.weights(i) * gy.weights(j);
      }
    return set;
  }
  // Disk: Gauss-Legendre in r (weight r dr), trapezoid in angle.
  const auto gr = gauss_legendre(q, 0.0, domain.radius);
  const int na = 2 * q;
  set.points.resize(2, q * na);
  set.weights.resize(q * na);
  for (int i = 0; i < q; ++i)
    for (int a = 0; a < na; ++a) {
      const double th = 2.0 * std::numbers::pi * a / na;
      const double r = gr.nodes(i);
      set.points.col(i * na + a) = Point2(domain.cx + r * std::cos(th), domain.cy + r * std::sin(th));
      set.weights(i * na + a) = gr.weights(i) * r * 2.0 * std::numbers::pi / na;
    }
  return set;
}

inline BoundarySet sample_boundary(const Domain& domain, const BoundaryRule& rule) {
  BoundarySet set;
  set.length = domain.perimeter();
  std::vector<double> arc;
  std::vector<double> w;
  switch (rule.kind) {
    case RuleKind::trapezoid: {
      require(rule.count >= 1, "boundary point count must be >= 1");
      for (int j = 0; j < rule.count; ++j) {
        arc.push_back(set.length * j / rule.count);
        w.push_back(set.length / rule.count);
      }
      set.uniform = true;
      break;
    }
    case RuleKind::monte_carlo: {
      require(rule.count >= 1, "boundary point count must be >= 1");
      std::mt19937_64 rng(rule.seed);
      for (int j = 0; j < rule.count; ++j) {
        arc.push_back(set.length * detail::unit_uniform(rng));
        w.push_back(set.length / rule.count);
      }
      break;
    }
    case RuleKind::gauss_legendre: {
      require(domain.is_rectangle(),
              "per-edge Gauss-Legendre boundary rules need a rectangle; use trapezoid on a disk");
      const double sides[4] = {domain.x1 - domain.x0, domain.y1 - domain.y0, domain.x1 - domain.x0,
                               domain.y1 - domain.y0};
      double start = 0.0;
      for (double side : sides) {
        const auto g = gauss_legendre(rule.order, start, start + side);
        for (int i = 0; i < rule.order; ++i) {
          arc.push_back(g.nodes(i));
          w.push_back(g.weights(i));
        }
        start += side;
      }
      break;
    }
  }
  const auto n = static_cast<Eigen::Index>(arc.size());
  set.points.resize(2, n);
  set.normals.resize(2, n);
  set.weights = Eigen::Map<Eigen::VectorXd>(w.data(), n);
  set.arc = Eigen::Map<Eigen::VectorXd>(arc.data(), n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto bp = domain.boundary_at(arc[static_cast<std::size_t>(j)]);
    set.points.col(j) = bp.x;
    set.normals.col(j) = bp.normal;
  }
  return set;
}

using ScalarField2 = std::function<double(const Point2&)>;

inline double quad_integrate(const ScalarField2& f, const PointSet& set) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < set.size(); ++j) s += set.weights(j) * f(set.point(j));
  return s;
}

inline double quad_integrate(const ScalarField2& f, const BoundarySet& set) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < set.size(); ++j) s += set.weights(j) * f(set.points.col(j));
  return s;
}

/// Largest mode index K that n equispaced samples resolve without aliasing.
inline int nyquist_modes(Eigen::Index n) { return static_cast<int>((n - 1) / 2); }

/// Trapezoid-rule Fourier coefficients c_k, |k| <= K, of equispaced samples of
/// a periodic function, with the period rescaled to [0, 2 pi).
/// Entry k + K of the result holds c_k.
inline std::vector<std::complex<double>> fourier_coeffs(const Eigen::VectorXd& samples, int modes) {
  const Eigen::Index n = samples.size();
  require(modes >= 0, "mode count must be non-negative");
  if (2 * static_cast<Eigen::Index>(modes) + 1 > n)
    throw ConfigError("mode count " + std::to_string(modes) + " exceeds the Nyquist limit of " +
                      std::to_string(n) + " samples");
  std::vector<std::complex<double>> c(static_cast<std::size_t>(2 * modes + 1));
  for (int k = -modes; k <= modes; ++k) {
    std::complex<double> sum = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double th = 2.0 * std::numbers::pi * static_cast<double>(k) * static_cast<double>(j) /
                        static_cast<double>(n);
      sum += samples(j) * std::complex<double>(std::cos(th), -std::sin(th));
    }
    c[static_cast<std::size_t>(k + modes)] = sum / static_cast<double>(n);
  }
  return c;
}

/// Fourier coefficients of boundary data g(s) sampled on a uniform boundary set.
inline std::vector<std::complex<double>> boundary_fourier_coeffs(const std::function<double(double)>& g,
                                                                 int modes, const BoundarySet& set) {
  require(set.uniform, "boundary Fourier coefficients need an equispaced (trapezoid) boundary rule");
  Eigen::VectorXd samples(set.size());
  for (Eigen::Index j = 0; j < set.size(); ++j) samples(j) = g(set.arc(j));
  return fourier_coeffs(samples, modes);
}

/// Product of a spatial rule with a time rule on [0, T]; slice k occupies
/// columns [k*P, (k+1)*P) of `points` (rows: x1, x2, t).
struct SpaceTimeSet {
  Eigen::Index slice_size = 0;
  Eigen::VectorXd times;
  Eigen::VectorXd time_weights;
  Eigen::VectorXd spatial_weights;
  Eigen::MatrixXd points;
  Eigen::VectorXd weights;

  Eigen::Index slices() const { return times.size(); }
};

struct SpaceTimeSampler {
  double horizon = 0.25;
  RuleKind time_kind = RuleKind::gauss_legendre;
  int time_nodes = 8;
};

inline std::pair<Eigen::VectorXd, Eigen::VectorXd> time_rule(const SpaceTimeSampler& sampler) {
  require(sampler.horizon > 0.0, "time horizon T must be positive");
  require(sampler.time_nodes >= 1, "need at least one time node");
  if (sampler.time_kind == RuleKind::gauss_legendre) {
    auto g = gauss_legendre(sampler.time_nodes, 0.0, sampler.horizon);
    return {g.nodes, g.weights};
  }
  require(sampler.time_kind == RuleKind::trapezoid, "time rule must be gauss_legendre or trapezoid");
  const int n = sampler.time_nodes;
  Eigen::VectorXd t(n), w(n);
  if (n == 1) {
    t(0) = 0.5 * sampler.horizon;
    w(0) = sampler.horizon;
    return {t, w};
  }
  for (int k = 0; k < n; ++k) {
    t(k) = sampler.horizon * k / (n - 1);
    w(k) = sampler.horizon / (n - 1) * ((k == 0 || k == n - 1) ? 0.5 : 1.0);
  }
  return {t, w};
}

inline SpaceTimeSet space_time(const Eigen::MatrixXd& spatial_points, const Eigen::VectorXd& spatial_weights,
                               const SpaceTimeSampler& sampler) {
  SpaceTimeSet set;
  std::tie(set.times, set.time_weights) = time_rule(sampler);
  const Eigen::Index p = spatial_points.cols();
  const Eigen::Index nt = set.times.size();
  set.slice_size = p;
  set.spatial_weights = spatial_weights;
  set.points.resize(3, p * nt);
  set.weights.resize(p * nt);
  for (Eigen::Index k = 0; k < nt; ++k) {
    set.points.block(0, k * p, 2, p) = spatial_points.topRows(2);
    set.points.row(2).segment(k * p, p).setConstant(set.times(k));
    set.weights.segment(k * p, p) = set.time_weights(k) * spatial_weights;
  }
  return set;
}

inline SpaceTimeSet space_time(const PointSet& spatial, const SpaceTimeSampler& sampler) {
  return space_time(spatial.points, spatial.weights, sampler);
}

inline SpaceTimeSet space_time(const BoundarySet& boundary, const SpaceTimeSampler& sampler) {
  return space_time(boundary.points, boundary.weights, sampler);
}

}  // namespace pinncert::geometry
