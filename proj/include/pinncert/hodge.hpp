#pragma once

// Hodge decomposition of a sampled vector field on a rectangle,
//   u = u_H + grad p1 + grad p2,
// with  lap p2 = div u, p2 = 0 on the boundary, and
//       lap p1 = 0, dp1/dn = (u - grad p2) . n on the boundary,
// so u_H is divergence free with zero normal trace (the Leray projection).
//
// Both Poisson problems use the fourth-order compact nine-point scheme,
// diagonalised by sine (Dirichlet) and cosine (Neumann) transforms. Grid
// derivatives are fourth-order differences and inner products use Simpson
// weights, so the three parts are orthogonal to fourth order.

#include <Eigen/Dense>

#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include "pinncert/error.hpp"
#include "pinncert/norms.hpp"

namespace pinncert::hodge {

/// Node-centred grid with nx x ny cells (nx + 1 by ny + 1 nodes) on a rectangle.
struct Grid {
  int nx = 64, ny = 64;
  double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;

  static Grid unit_square(int n) { return {n, n, 0.0, 1.0, 0.0, 1.0}; }

  double hx() const { return (x1 - x0) / nx; }
  double hy() const { return (y1 - y0) / ny; }
  double x(int i) const { return x0 + i * hx(); }
  double y(int j) const { return y0 + j * hy(); }
  int rows() const { return nx + 1; }
  int cols() const { return ny + 1; }

  void validate() const {
    require(nx >= 8 && ny >= 8, "Hodge grids need at least 8 cells per direction");
    require(nx % 2 == 0 && ny % 2 == 0, "Hodge grids need an even number of cells per direction");
    require(x1 > x0 && y1 > y0, "grid rectangle must have positive side lengths");
  }
  bool operator==(const Grid&) const = default;
};

/// Vector samples at the grid nodes; entry (i, j) sits at (x_i, y_j).
struct GridField {
  Grid grid;
  Eigen::MatrixXd u1, u2;

  static GridField zeros(const Grid& g) {
    return {g, Eigen::MatrixXd::Zero(g.rows(), g.cols()), Eigen::MatrixXd::Zero(g.rows(), g.cols())};
  }
  static GridField sample(const Grid& g, const std::function<Eigen::Vector2d(double, double)>& fn) {
    g.validate();
    GridField f = zeros(g);
    for (int i = 0; i < g.rows(); ++i)
      for (int j = 0; j < g.cols(); ++j) {
        const Eigen::Vector2d v = fn(g.x(i), g.y(j));
        f.u1(i, j) = v(0);
        f.u2(i, j) = v(1);
      }
    return f;
  }

  bool finite() const { return u1.allFinite() && u2.allFinite(); }

  GridField operator+(const GridField& o) const { return {grid, u1 + o.u1, u2 + o.u2}; }
  GridField operator-(const GridField& o) const { return {grid, u1 - o.u1, u2 - o.u2}; }
  GridField operator*(double c) const { return {grid, c * u1, c * u2}; }
};

/// n x n cells on a rectangular domain; other shapes are rejected.
inline Grid make_grid(const geometry::Domain& domain, int n) {
  require(domain.kind == geometry::DomainKind::rectangle, "Hodge decomposition needs a rectangular domain");
  Grid g{n, n, domain.x0, domain.x1, domain.y0, domain.y1};
  g.validate();
  return g;
}

/// Components (c1, c2) of a field at the grid nodes; `t` is appended as a third input when the field takes one.
inline GridField sample_view(const norms::FieldView& f, const Grid& g, double t = 0.0, int c1 = 0, int c2 = 1) {
  g.validate();
  require(f.dim == 2 || f.dim == 3, "sampled field must take (x, y) or (x, y, t)");
  require(c1 >= 0 && c1 < f.components && c2 >= 0 && c2 < f.components, "sampled component out of range");
  Eigen::MatrixXd pts(f.dim, g.rows() * g.cols());
  for (int i = 0; i < g.rows(); ++i)
    for (int j = 0; j < g.cols(); ++j) {
      const int k = i * g.cols() + j;
      pts(0, k) = g.x(i);
      pts(1, k) = g.y(j);
      if (f.dim == 3) pts(2, k) = t;
    }
  const auto jets = f(pts, dnn::JetSpec::values(f.dim));
  GridField out = GridField::zeros(g);
  for (int i = 0; i < g.rows(); ++i)
    for (int j = 0; j < g.cols(); ++j) {
      out.u1(i, j) = jets.value(c1)(i * g.cols() + j);
      out.u2(i, j) = jets.value(c2)(i * g.cols() + j);
    }
  return out;
}

inline Eigen::MatrixXd sample_scalar(const Grid& g, const std::function<double(double, double)>& fn) {
  Eigen::MatrixXd m(g.rows(), g.cols());
  for (int i = 0; i < g.rows(); ++i)
    for (int j = 0; j < g.cols(); ++j) m(i, j) = fn(g.x(i), g.y(j));
  return m;
}

namespace detail {

// Fourth-order first derivative of each column of f (derivative along rows).
inline Eigen::MatrixXd diff_rows(const Eigen::MatrixXd& f, double h) {
  const Eigen::Index n = f.rows() - 1;
  Eigen::MatrixXd g(f.rows(), f.cols());
  for (Eigen::Index i = 2; i <= n - 2; ++i)
    g.row(i) = (-f.row(i + 2) + 8.0 * f.row(i + 1) - 8.0 * f.row(i - 1) + f.row(i - 2)) / (12.0 * h);
  g.row(0) = (-25.0 * f.row(0) + 48.0 * f.row(1) - 36.0 * f.row(2) + 16.0 * f.row(3) - 3.0 * f.row(4)) / (12.0 * h);
  g.row(1) = (-3.0 * f.row(0) - 10.0 * f.row(1) + 18.0 * f.row(2) - 6.0 * f.row(3) + f.row(4)) / (12.0 * h);
  g.row(n) = -(-25.0 * f.row(n) + 48.0 * f.row(n - 1) - 36.0 * f.row(n - 2) + 16.0 * f.row(n - 3) -
               3.0 * f.row(n - 4)) /
             (12.0 * h);
  g.row(n - 1) =
      -(-3.0 * f.row(n) - 10.0 * f.row(n - 1) + 18.0 * f.row(n - 2) - 6.0 * f.row(n - 3) + f.row(n - 4)) / (12.0 * h);
  return g;
}

// Second-order second derivative along rows, one-sided at the ends.
inline Eigen::MatrixXd diff2_rows(const Eigen::MatrixXd& f, double h) {
  const Eigen::Index n = f.rows() - 1;
  Eigen::MatrixXd g(f.rows(), f.cols());
  for (Eigen::Index i = 1; i < n; ++i) g.row(i) = (f.row(i + 1) - 2.0 * f.row(i) + f.row(i - 1)) / (h * h);
  g.row(0) = (2.0 * f.row(0) - 5.0 * f.row(1) + 4.0 * f.row(2) - f.row(3)) / (h * h);
  g.row(n) = (2.0 * f.row(n) - 5.0 * f.row(n - 1) + 4.0 * f.row(n - 2) - f.row(n - 3)) / (h * h);
  return g;
}

inline Eigen::VectorXd diff2(const Eigen::VectorXd& g, double h) { return diff2_rows(g, h); }

// Composite Simpson weights (times h) on n + 1 nodes, n even.
inline Eigen::VectorXd simpson(int n, double h) {
  Eigen::VectorXd w(n + 1);
  for (int i = 0; i <= n; ++i) w(i) = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
  return w * (h / 3.0);
}

inline Eigen::VectorXd trapezoid(int n, double h) {
  Eigen::VectorXd w = Eigen::VectorXd::Constant(n + 1, h);
  w(0) = w(n) = 0.5 * h;
  return w;
}

// Unnormalised DST-I on the n - 1 interior nodes; its square is 2n I.
inline Eigen::MatrixXd dst1(int n) {
  Eigen::MatrixXd s(n - 1, n - 1);
  for (int k = 1; k < n; ++k)
    for (int j = 1; j < n; ++j) s(k - 1, j - 1) = 2.0 * std::sin(std::numbers::pi * j * k / n);
  return s;
}

// Unnormalised DCT-I on n + 1 nodes; its square is 2n I.
inline Eigen::MatrixXd dct1(int n) {
  Eigen::MatrixXd c(n + 1, n + 1);
  for (int k = 0; k <= n; ++k)
    for (int j = 0; j <= n; ++j) c(k, j) = (j == 0 || j == n ? 1.0 : 2.0) * std::cos(std::numbers::pi * j * k / n);
  return c;
}

// Eigenvalues of the three-point second difference for modes k (Dirichlet or Neumann).
inline double fd_eigen(int k, int n, double h) {
  const double s = std::sin(std::numbers::pi * k / (2.0 * n));
  return -4.0 / (h * h) * s * s;
}

}  // namespace detail

/// d/dx and d/dy of a nodal scalar.
inline Eigen::MatrixXd d_dx(const Eigen::MatrixXd& f, const Grid& g) { return detail::diff_rows(f, g.hx()); }
inline Eigen::MatrixXd d_dy(const Eigen::MatrixXd& f, const Grid& g) {
  return detail::diff_rows(f.transpose(), g.hy()).transpose();
}

inline GridField gradient(const Eigen::MatrixXd& p, const Grid& g) { return {g, d_dx(p, g), d_dy(p, g)}; }
inline Eigen::MatrixXd divergence(const GridField& f) { return d_dx(f.u1, f.grid) + d_dy(f.u2, f.grid); }

/// Simpson-weighted L2 inner products and norms.
inline double inner(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const Grid& g) {
  const Eigen::VectorXd wx = detail::simpson(g.nx, g.hx()), wy = detail::simpson(g.ny, g.hy());
  return wx.dot(a.cwiseProduct(b) * wy);
}
inline double inner(const GridField& a, const GridField& b) {
  return inner(a.u1, b.u1, a.grid) + inner(a.u2, b.u2, a.grid);
}
inline double l2_norm(const Eigen::MatrixXd& a, const Grid& g) { return std::sqrt(std::max(0.0, inner(a, a, g))); }
inline double l2_norm(const GridField& f) { return std::sqrt(std::max(0.0, inner(f, f))); }

/// (|f|^2 + |grad f1|^2 + |grad f2|^2)^{1/2} with grid derivatives.
inline double h1_norm(const GridField& f) {
  const auto& g = f.grid;
  double s = inner(f, f);
  for (const auto* c : {&f.u1, &f.u2}) {
    const Eigen::MatrixXd dx = d_dx(*c, g), dy = d_dy(*c, g);
    s += inner(dx, dx, g) + inner(dy, dy, g);
  }
  return std::sqrt(std::max(0.0, s));
}

enum class DirichletMethod { compact, spectral };

/// lap p = rhs, p = 0 on the boundary. `compact` is the fourth-order nine-point
/// scheme; `spectral` uses the exact Laplacian eigenvalues of the sine modes
/// (exact for rhs in the span of the grid's sine modes).
inline Eigen::MatrixXd solve_poisson_dirichlet(const Eigen::MatrixXd& rhs, const Grid& g,
                                               DirichletMethod method = DirichletMethod::compact) {
  g.validate();
  require(rhs.rows() == g.rows() && rhs.cols() == g.cols(), "rhs shape does not match the grid");
  require(rhs.allFinite(), "Poisson rhs contains non-finite values");
  const int nx = g.nx, ny = g.ny;
  const double hx = g.hx(), hy = g.hy();
  Eigen::MatrixXd r = rhs;
  if (method == DirichletMethod::compact)
    r += hx * hx / 12.0 * detail::diff2_rows(rhs, hx) +
         hy * hy / 12.0 * detail::diff2_rows(rhs.transpose(), hy).transpose();
  const Eigen::MatrixXd sx = detail::dst1(nx), sy = detail::dst1(ny);
  Eigen::MatrixXd coef = sx * r.block(1, 1, nx - 1, ny - 1) * sy.transpose();
  const double lx = g.x1 - g.x0, ly = g.y1 - g.y0;
  for (int k = 1; k < nx; ++k)
    for (int l = 1; l < ny; ++l) {
      double lam;
      if (method == DirichletMethod::spectral) {
        lam = -std::numbers::pi * std::numbers::pi * (k * k / (lx * lx) + l * l / (ly * ly));
      } else {
        const double ex = detail::fd_eigen(k, nx, hx), ey = detail::fd_eigen(l, ny, hy);
        lam = ex + ey + (hx * hx + hy * hy) / 12.0 * ex * ey;
      }
      coef(k - 1, l - 1) /= lam;
    }
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(g.rows(), g.cols());
  p.block(1, 1, nx - 1, ny - 1) = sx * coef * sy.transpose() / (4.0 * nx * ny);
  return p;
}

/// Outward normal flux on the four edges: left/right indexed by j (along y),
/// bottom/top indexed by i (along x).
struct EdgeFlux {
  Eigen::VectorXd left, right, bottom, top;

  static EdgeFlux zeros(const Grid& g) {
    return {Eigen::VectorXd::Zero(g.cols()), Eigen::VectorXd::Zero(g.cols()), Eigen::VectorXd::Zero(g.rows()),
            Eigen::VectorXd::Zero(g.rows())};
  }
  static EdgeFlux normal_trace(const GridField& f) {
    const int nx = f.grid.nx, ny = f.grid.ny;
    return {-f.u1.row(0).transpose(), f.u1.row(nx).transpose(), -f.u2.col(0), f.u2.col(ny)};
  }
};

/// Integral of the flux around the boundary (Simpson along each edge).
inline double boundary_integral(const EdgeFlux& q, const Grid& g) {
  const Eigen::VectorXd ty = detail::simpson(g.ny, g.hy()), tx = detail::simpson(g.nx, g.hx());
  return ty.dot(q.left) + ty.dot(q.right) + tx.dot(q.bottom) + tx.dot(q.top);
}

inline double boundary_l2_norm(const EdgeFlux& q, const Grid& g) {
  const Eigen::VectorXd ty = detail::trapezoid(g.ny, g.hy()), tx = detail::trapezoid(g.nx, g.hx());
  return std::sqrt(ty.dot(q.left.cwiseAbs2()) + ty.dot(q.right.cwiseAbs2()) + tx.dot(q.bottom.cwiseAbs2()) +
                   tx.dot(q.top.cwiseAbs2()));
}

struct NeumannSolution {
  Eigen::MatrixXd p;              // zero Simpson mean
  double flux_mean_removed = 0;   // boundary mean of the flux subtracted for compatibility
  double compatibility_defect = 0;  // residual mean removed from the discrete rhs
};

/// lap p = 0 with dp/dn = flux - mean(flux); p normalised to zero mean.
inline NeumannSolution solve_laplace_neumann(EdgeFlux q, const Grid& g) {
  g.validate();
  require(q.left.size() == g.cols() && q.right.size() == g.cols() && q.bottom.size() == g.rows() &&
              q.top.size() == g.rows(),
          "edge flux lengths do not match the grid");
  require(q.left.allFinite() && q.right.allFinite() && q.bottom.allFinite() && q.top.allFinite(),
          "Neumann flux contains non-finite values");
  const int nx = g.nx, ny = g.ny;
  const double hx = g.hx(), hy = g.hy();
  NeumannSolution out;
  out.flux_mean_removed = boundary_integral(q, g) / (2.0 * ((g.x1 - g.x0) + (g.y1 - g.y0)));
  for (auto* e : {&q.left, &q.right, &q.bottom, &q.top}) e->array() -= out.flux_mean_removed;

  // Ghost values beyond each edge are the mirror image plus a Taylor correction
  // 2h g - h^3/3 g'' (harmonicity turns p_nnn into the tangential g'').
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(nx + 3, ny + 3);  // node (i, j) at (i + 1, j + 1)
  const auto corr = [](const Eigen::VectorXd& e, double hn, double ht) {
    return (2.0 * hn * e - hn * hn * hn / 3.0 * detail::diff2(e, ht)).eval();
  };
  const Eigen::VectorXd cl = corr(q.left, hx, hy), cr = corr(q.right, hx, hy);
  const Eigen::VectorXd cb = corr(q.bottom, hy, hx), ct = corr(q.top, hy, hx);
  c.block(0, 1, 1, ny + 1) = cl.transpose();
  c.block(nx + 2, 1, 1, ny + 1) = cr.transpose();
  c.block(1, 0, nx + 1, 1) = cb;
  c.block(1, ny + 2, nx + 1, 1) = ct;
  // corners: mirror across one edge, then correct with the other edge's data extrapolated one step outward
  const auto ex_front = [](const Eigen::VectorXd& e) { return 4 * e(0) - 6 * e(1) + 4 * e(2) - e(3); };
  const auto ex_back = [](const Eigen::VectorXd& e) {
    const Eigen::Index n = e.size() - 1;
    return 4 * e(n) - 6 * e(n - 1) + 4 * e(n - 2) - e(n - 3);
  };
  const Eigen::VectorXd ddl = detail::diff2(q.left, hy), ddr = detail::diff2(q.right, hy);
  const double h3x = hx * hx * hx / 3.0;
  c(0, 0) = cb(1) + 2 * hx * ex_front(q.left) - h3x * ddl(0);
  c(0, ny + 2) = ct(1) + 2 * hx * ex_back(q.left) - h3x * ddl(ny);
  c(nx + 2, 0) = cb(nx - 1) + 2 * hx * ex_front(q.right) - h3x * ddr(0);
  c(nx + 2, ny + 2) = ct(nx - 1) + 2 * hx * ex_back(q.right) - h3x * ddr(ny);

  // rhs = -(compact operator applied to the correction field) on the nodes
  const auto cc = c.block(1, 1, nx + 1, ny + 1);
  const Eigen::MatrixXd dxx_all = (c.bottomRows(nx + 1) - 2.0 * c.middleRows(1, nx + 1) + c.topRows(nx + 1)) / (hx * hx);
  const Eigen::MatrixXd dyy = (c.block(1, 2, nx + 1, ny + 1) - 2.0 * cc + c.block(1, 0, nx + 1, ny + 1)) / (hy * hy);
  const Eigen::MatrixXd dxx = dxx_all.middleCols(1, ny + 1);
  const Eigen::MatrixXd dxxyy =
      (dxx_all.rightCols(ny + 1) - 2.0 * dxx + dxx_all.leftCols(ny + 1)) / (hy * hy);
  Eigen::MatrixXd b = -(dxx + dyy + (hx * hx + hy * hy) / 12.0 * dxxyy);

  const Eigen::VectorXd tx = detail::trapezoid(nx, hx), ty = detail::trapezoid(ny, hy);
  out.compatibility_defect = tx.dot(b * ty) / ((g.x1 - g.x0) * (g.y1 - g.y0));
  b.array() -= out.compatibility_defect;

  const Eigen::MatrixXd cx = detail::dct1(nx), cy = detail::dct1(ny);
  Eigen::MatrixXd coef = cx * b * cy.transpose();
  for (int k = 0; k <= nx; ++k)
    for (int l = 0; l <= ny; ++l) {
      if (k == 0 && l == 0) {
        coef(k, l) = 0.0;
        continue;
      }
      const double ex = detail::fd_eigen(k, nx, hx), ey = detail::fd_eigen(l, ny, hy);
      coef(k, l) /= ex + ey + (hx * hx + hy * hy) / 12.0 * ex * ey;
    }
  out.p = cx * coef * cy.transpose() / (4.0 * nx * ny);
  const Eigen::VectorXd sx = detail::simpson(nx, hx), sy = detail::simpson(ny, hy);
  out.p.array() -= sx.dot(out.p * sy) / (sx.sum() * sy.sum());
  return out;
}

struct HodgeParts {
  GridField u_h;  // divergence free, zero normal trace
  GridField v1;   // grad p1, p1 harmonic
  GridField v2;   // grad p2, p2 = 0 on the boundary
  Eigen::MatrixXd p1, p2;
  double flux_mean_removed = 0.0;
  double compatibility_defect = 0.0;

  GridField gradient_part() const { return v1 + v2; }
};

inline HodgeParts decompose(const GridField& field) {
  const Grid& g = field.grid;
  g.validate();
  require(field.u1.rows() == g.rows() && field.u1.cols() == g.cols() && field.u2.rows() == g.rows() &&
              field.u2.cols() == g.cols(),
          "field shape does not match the grid");
  require(field.finite(), "field contains non-finite values");
  HodgeParts parts;
  parts.p2 = solve_poisson_dirichlet(divergence(field), g);
  parts.v2 = gradient(parts.p2, g);
  const auto neu = solve_laplace_neumann(EdgeFlux::normal_trace(field - parts.v2), g);
  parts.p1 = neu.p;
  parts.flux_mean_removed = neu.flux_mean_removed;
  parts.compatibility_defect = neu.compatibility_defect;
  parts.v1 = gradient(parts.p1, g);
  parts.u_h = field - parts.v1 - parts.v2;
  return parts;
}

inline GridField leray_project(const GridField& field) { return decompose(field).u_h; }

struct HodgeDiagnostics {
  double div_l2 = 0.0;           // |div u_H|
  double normal_trace = 0.0;     // |u_H . n| on the boundary
  double ortho_v1_v2 = 0.0;      // |(v1, v2)| / (|v1| |v2|)
  double ortho_v1_uh = 0.0;
  double ortho_v2_uh = 0.0;
  double reconstruction = 0.0;   // |u - (u_H + v1 + v2)|
};

inline double relative_inner(const GridField& a, const GridField& b) {
  const double na = l2_norm(a), nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::abs(inner(a, b)) / (na * nb);
}

inline HodgeDiagnostics hodge_diagnostics(const GridField& field, const HodgeParts& parts) {
  HodgeDiagnostics d;
  const Grid& g = field.grid;
  d.div_l2 = l2_norm(divergence(parts.u_h), g);
  d.normal_trace = boundary_l2_norm(EdgeFlux::normal_trace(parts.u_h), g);
  d.ortho_v1_v2 = relative_inner(parts.v1, parts.v2);
  d.ortho_v1_uh = relative_inner(parts.v1, parts.u_h);
  d.ortho_v2_uh = relative_inner(parts.v2, parts.u_h);
  const GridField r = field - (parts.u_h + parts.v1 + parts.v2);
  d.reconstruction = std::max(r.u1.cwiseAbs().maxCoeff(), r.u2.cwiseAbs().maxCoeff());
  return d;
}

/// Grid dump: '#'-prefixed header with sizes and bounds, then rows i,j,x,y,u1,u2.
inline void write_csv(std::ostream& os, const GridField& f) {
  const auto& g = f.grid;
  os << "# nx=" << g.nx << " ny=" << g.ny << " hx=" << std::setprecision(17) << g.hx() << " hy=" << g.hy()
     << " bounds=" << g.x0 << "," << g.x1 << "," << g.y0 << "," << g.y1 << "\n";
  os << "i,j,x,y,u1,u2\n";
  for (int i = 0; i < g.rows(); ++i)
    for (int j = 0; j < g.cols(); ++j)
      os << i << "," << j << "," << g.x(i) << "," << g.y(j) << "," << f.u1(i, j) << "," << f.u2(i, j) << "\n";
}

inline GridField read_csv(std::istream& is) {
  std::string line;
  require(static_cast<bool>(std::getline(is, line)) && line.rfind("# nx=", 0) == 0, "grid CSV lacks its header");
  Grid g;
  double hx = 0, hy = 0;
  char comma = 0;
  std::istringstream hs(line.substr(2));
  std::string tok;
  while (hs >> tok) {
    const auto eq = tok.find('=');
    const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
    std::istringstream vs(val);
    if (key == "nx") vs >> g.nx;
    else if (key == "ny") vs >> g.ny;
    else if (key == "hx") vs >> hx;
    else if (key == "hy") vs >> hy;
    else if (key == "bounds") vs >> g.x0 >> comma >> g.x1 >> comma >> g.y0 >> comma >> g.y1;
  }
  g.validate();
  std::getline(is, line);  // column names
  GridField f = GridField::zeros(g);
  for (int k = 0; k < g.rows() * g.cols(); ++k) {
    require(static_cast<bool>(std::getline(is, line)), "grid CSV is truncated");
    std::istringstream ls(line);
    int i = 0, j = 0;
    double x = 0, y = 0, a = 0, b = 0;
    ls >> i >> comma >> j >> comma >> x >> comma >> y >> comma >> a >> comma >> b;
    require(i >= 0 && i < g.rows() && j >= 0 && j < g.cols(), "grid CSV index out of range");
    f.u1(i, j) = a;
    f.u2(i, j) = b;
  }
  return f;
}

}  // namespace pinncert::hodge
