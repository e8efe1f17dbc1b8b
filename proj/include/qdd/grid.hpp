#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "qdd/errors.hpp"

namespace qdd {

enum class Geometry { Slab, Radial };
enum class Bc { NeumannZero, DirichletZero, None };

// Uniform 1D discretization of a slab (0,L) in d = 1, or of a radially
// symmetric disc/ball of radius L in d = 2,3. Node 0 sits at x = 0 (slab
// left end, or the center r = 0, which is an interior point of the ball);
// node N-1 sits at the boundary x = L.
struct Grid {
  int d = 1;
  Geometry geometry = Geometry::Slab;
  int N = 0;       // node count
  double L = 0.0;  // slab length or ball radius
  double h = 0.0;
  std::vector<double> nodes;
  std::vector<double> quad_weights;

  double volume() const {
    if (geometry == Geometry::Slab) return L;
    return sphere_area(d) * std::pow(L, d) / d;
  }

  // Surface area of the unit sphere in R^d.
  static double sphere_area(int d) {
    switch (d) {
      case 1: return 2.0;
      case 2: return 2.0 * std::numbers::pi;
      case 3: return 4.0 * std::numbers::pi;
    }
    throw GridError("unsupported dimension " + std::to_string(d));
  }

  bool same_as(const Grid& other) const {
    return d == other.d && geometry == other.geometry && N == other.N && L == other.L;
  }
};

inline Grid build_grid(int d, Geometry geometry, int N, double L) {
  if (N < 3) throw GridError("build_grid: N must be >= 3, got " + std::to_string(N));
  if (L <= 0.0) throw GridError("build_grid: L must be positive");
  if (geometry == Geometry::Slab && d != 1)
    throw GridError("build_grid: slab geometry requires d = 1");
  if (geometry == Geometry::Radial && d != 2 && d != 3)
    throw GridError("build_grid: radial geometry requires d in {2,3}");

  Grid g;
  g.d = d;
  g.geometry = geometry;
  g.N = N;
  g.L = L;
  g.h = L / (N - 1);
  g.nodes.resize(N);
  g.quad_weights.resize(N);
  for (int i = 0; i < N; ++i) g.nodes[i] = i * g.h;
  g.nodes.back() = L;

  if (geometry == Geometry::Slab) {
    for (int i = 0; i < N; ++i) g.quad_weights[i] = g.h;
    g.quad_weights.front() = g.quad_weights.back() = 0.5 * g.h;
  } else {
    // Cell-integrated weights against the surface measure w_{d-1} r^{d-1} dr:
    // exact on constants, so the weights sum to |Omega| by construction.
    const double omega = Grid::sphere_area(d);
    for (int i = 0; i < N; ++i) {
      const double lo = std::max(0.0, g.nodes[i] - 0.5 * g.h);
      const double hi = std::min(L, g.nodes[i] + 0.5 * g.h);
      g.quad_weights[i] = omega * (std::pow(hi, d) - std::pow(lo, d)) / d;
    }
  }
  return g;
}

struct ScalarField {
  std::shared_ptr<const Grid> grid;
  std::vector<double> values;
  Bc bc = Bc::None;

  ScalarField() = default;
  ScalarField(std::shared_ptr<const Grid> g, Bc bc_, double fill = 0.0)
      : grid(std::move(g)), values(grid->N, fill), bc(bc_) {}

  int size() const { return static_cast<int>(values.size()); }
  double& operator[](int i) { return values[i]; }
  double operator[](int i) const { return values[i]; }

  bool finite() const {
    for (double v : values)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

inline void require_same_grid(const ScalarField& a, const ScalarField& b) {
  if (!a.grid || !b.grid || !a.grid->same_as(*b.grid))
    throw GridError("fields live on different grids");
}

inline double integrate(const Grid& grid, const std::vector<double>& values) {
  if (static_cast<int>(values.size()) != grid.N)
    throw GridError("integrate: value count does not match grid");
  double s = 0.0;
  for (int i = 0; i < grid.N; ++i) s += grid.quad_weights[i] * values[i];
  return s;
}

inline double integrate(const ScalarField& f) { return integrate(*f.grid, f.values); }

namespace detail {

// First derivative. Neumann fields have zero normal derivative at the ends;
// otherwise a second-order one-sided stencil is used. At the radial center
// the derivative vanishes by symmetry.
inline std::vector<double> first_derivative(const Grid& g, const std::vector<double>& u, Bc bc) {
  const int N = g.N;
  const double h = g.h;
  std::vector<double> du(N);
  for (int i = 1; i < N - 1; ++i) du[i] = (u[i + 1] - u[i - 1]) / (2.0 * h);
  if (g.geometry == Geometry::Radial || bc == Bc::NeumannZero) {
    du[0] = 0.0;
  } else {
    du[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h);
  }
  if (bc == Bc::NeumannZero) {
    du[N - 1] = 0.0;
  } else {
    du[N - 1] = (3.0 * u[N - 1] - 4.0 * u[N - 2] + u[N - 3]) / (2.0 * h);
  }
  return du;
}

// Second derivative in the radial/axial coordinate. Neumann ends use ghost
// reflection; other ends use the second-order one-sided stencil. The radial
// center is always treated by even reflection.
inline std::vector<double> second_derivative(const Grid& g, const std::vector<double>& u, Bc bc) {
  const int N = g.N;
  const double h2 = g.h * g.h;
  std::vector<double> ddu(N);
  for (int i = 1; i < N - 1; ++i) ddu[i] = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / h2;
  if (g.geometry == Geometry::Radial || bc == Bc::NeumannZero) {
    ddu[0] = 2.0 * (u[1] - u[0]) / h2;
  } else {
    ddu[0] = (2.0 * u[0] - 5.0 * u[1] + 4.0 * u[2] - u[3]) / h2;
  }
  if (bc == Bc::NeumannZero) {
    ddu[N - 1] = 2.0 * (u[N - 2] - u[N - 1]) / h2;
  } else {
    ddu[N - 1] = (2.0 * u[N - 1] - 5.0 * u[N - 2] + 4.0 * u[N - 3] - u[N - 4]) / h2;
  }
  return ddu;
}

// u'/r with the symmetric limit u''(0) at the center.
inline std::vector<double> radial_slope_over_r(const Grid& g, const std::vector<double>& u, Bc bc) {
  const std::vector<double> du = first_derivative(g, u, bc);
  const std::vector<double> ddu = second_derivative(g, u, bc);
  std::vector<double> s(g.N);
  s[0] = ddu[0];
  for (int i = 1; i < g.N; ++i) s[i] = du[i] / g.nodes[i];
  return s;
}

}  // namespace detail

// Second-order Laplacian. Slab: u''. Radial: u'' + (d-1)u'/r, with the
// regularized stencil d*u''(0) at the center.
inline ScalarField laplacian(const ScalarField& f) {
  if (f.bc == Bc::None) throw GridError("laplacian: field needs NeumannZero or DirichletZero bc");
  const Grid& g = *f.grid;
  ScalarField out(f.grid, Bc::None);
  const std::vector<double> ddu = detail::second_derivative(g, f.values, f.bc);
  if (g.geometry == Geometry::Slab) {
    out.values = ddu;
  } else {
    const std::vector<double> du = detail::first_derivative(g, f.values, f.bc);
    out.values[0] = g.d * ddu[0];
    for (int i = 1; i < g.N; ++i)
      out.values[i] = ddu[i] + (g.d - 1) * du[i] / g.nodes[i];
  }
  return out;
}

// Pointwise |grad u|^2.
inline ScalarField gradient_sq(const ScalarField& f) {
  ScalarField out(f.grid, Bc::None);
  const std::vector<double> du = detail::first_derivative(*f.grid, f.values, f.bc);
  for (int i = 0; i < f.size(); ++i) out.values[i] = du[i] * du[i];
  return out;
}

// Pointwise |Hess u|^2 in the radial representation: (u'')^2 + (d-1)(u'/r)^2,
// and plain (u'')^2 in d = 1.
inline ScalarField hessian_sq(const ScalarField& f) {
  const Grid& g = *f.grid;
  ScalarField out(f.grid, Bc::None);
  const std::vector<double> ddu = detail::second_derivative(g, f.values, f.bc);
  if (g.geometry == Geometry::Slab) {
    for (int i = 0; i < g.N; ++i) out.values[i] = ddu[i] * ddu[i];
  } else {
    const std::vector<double> s = detail::radial_slope_over_r(g, f.values, f.bc);
    for (int i = 0; i < g.N; ++i)
      out.values[i] = ddu[i] * ddu[i] + (g.d - 1) * s[i] * s[i];
  }
  return out;
}

inline double sup_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// Evolving unknown rho = sqrt(n), Neumann, normalized so that the quadrature
// of n = rho^2 is exactly one.
struct DensityState {
  ScalarField rho;

  DensityState() = default;

  static DensityState from_density(std::shared_ptr<const Grid> grid,
                                   const std::vector<double>& n_values) {
    DensityState s;
    s.rho = ScalarField(std::move(grid), Bc::NeumannZero);
    const Grid& g = *s.rho.grid;
    double mass = 0.0;
    for (int i = 0; i < g.N; ++i) {
      if (n_values[i] < 0.0) throw Error("DensityState: negative density value");
      mass += g.quad_weights[i] * n_values[i];
    }
    if (mass <= 0.0) throw Error("DensityState: zero total mass");
    for (int i = 0; i < g.N; ++i) s.rho.values[i] = std::sqrt(n_values[i] / mass);
    return s;
  }

  std::vector<double> density() const {
    std::vector<double> n(rho.values.size());
    for (std::size_t i = 0; i < n.size(); ++i) n[i] = rho.values[i] * rho.values[i];
    return n;
  }

  double mass() const { return integrate(*rho.grid, density()); }
};

}  // namespace qdd
