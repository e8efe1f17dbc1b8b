#pragma once

#include <cmath>
#include <vector>

#include "qdd/errors.hpp"
#include "qdd/grid.hpp"
#include "qdd/tridiag.hpp"

namespace qdd {

struct NewtonConfig {
  int max_iter = 50;
  double tol_residual = 1e-10;
  double damping = 1.0;   // initial step fraction
  double min_step = 1e-4; // smallest damping before failure
};

struct SolveReport {
  int iterations = 0;
  double final_residual = 0.0;
  bool converged = false;
};

namespace detail {

// Rows of the discrete Laplacian with homogeneous Neumann ends (ghost-node
// reflection) on all N nodes. Radial grids use the symmetric-limit stencil
// d*u''(0) at the center.
inline Tridiag neumann_laplacian(const Grid& g) {
  const int N = g.N;
  const double h = g.h, h2 = h * h;
  Tridiag lap(N);
  if (g.geometry == Geometry::Slab) {
    lap.diag[0] = -2.0 / h2;
    lap.upper[0] = 2.0 / h2;
  } else {
    lap.diag[0] = -2.0 * g.d / h2;
    lap.upper[0] = 2.0 * g.d / h2;
  }
  for (int i = 1; i < N - 1; ++i) {
    double drift = 0.0;
    if (g.geometry == Geometry::Radial) drift = (g.d - 1) / (2.0 * h * g.nodes[i]);
    lap.lower[i] = 1.0 / h2 - drift;
    lap.diag[i] = -2.0 / h2;
    lap.upper[i] = 1.0 / h2 + drift;
  }
  lap.lower[N - 1] = 2.0 / h2;
  lap.diag[N - 1] = -2.0 / h2;
  return lap;
}

// Face areas of the dual cells (between node i and i+1); slab faces have
// unit area, radial faces carry the surface measure.
inline std::vector<double> face_areas(const Grid& g) {
  std::vector<double> A(g.N - 1);
  for (int i = 0; i < g.N - 1; ++i) {
    if (g.geometry == Geometry::Slab) {
      A[i] = 1.0;
    } else {
      const double r = 0.5 * (g.nodes[i] + g.nodes[i + 1]);
      A[i] = Grid::sphere_area(g.d) * std::pow(r, g.d - 1);
    }
  }
  return A;
}

}  // namespace detail

// -Delta(u) = source in Omega, u = 0 on the boundary. Same stencil as
// laplacian(), so the returned field satisfies the residual identity at
// interior nodes to the accuracy of the banded solve.
inline ScalarField solve_poisson_dirichlet(const ScalarField& source) {
  if (!source.finite()) throw Error("solve_poisson_dirichlet: source not finite");
  const Grid& g = *source.grid;
  const int N = g.N;
  const double h2 = g.h * g.h;

  // Unknowns: slab nodes 1..N-2 (both ends on the boundary); radial nodes
  // 0..N-2 (the center is an interior point).
  const int first = (g.geometry == Geometry::Slab) ? 1 : 0;
  const int n_unknowns = N - 1 - first;
  Tridiag A(n_unknowns);
  std::vector<double> rhs(n_unknowns);
  for (int k = 0; k < n_unknowns; ++k) {
    const int i = first + k;
    if (g.geometry == Geometry::Radial && i == 0) {
      A.diag[k] = 2.0 * g.d / h2;
      A.upper[k] = -2.0 * g.d / h2;
    } else {
      double drift = 0.0;
      if (g.geometry == Geometry::Radial) drift = (g.d - 1) / (2.0 * g.h * g.nodes[i]);
      if (k > 0) A.lower[k] = -(1.0 / h2 - drift);
      A.diag[k] = 2.0 / h2;
      if (k < n_unknowns - 1) A.upper[k] = -(1.0 / h2 + drift);
      // couplings to boundary nodes carry the known zero value
    }
    rhs[k] = source.values[i];
  }
  const std::vector<double> u = A.solve(rhs);

  ScalarField out(source.grid, Bc::DirichletZero);
  for (int k = 0; k < n_unknowns; ++k) out.values[first + k] = u[k];
  return out;
}

// -div(a grad F) = f with homogeneous Neumann flux, in flux-conservative
// form on the dual cells. The null space of constants is removed by pinning
// node 0 during the solve; the requested mean beta is restored afterwards.
inline ScalarField solve_weighted_neumann(const ScalarField& a, const ScalarField& f,
                                          double beta, double solvability_tol = 1e-9) {
  require_same_grid(a, f);
  const Grid& g = *a.grid;
  const int N = g.N;

  double amin = a.values[0];
  for (double v : a.values) amin = std::min(amin, v);
  if (amin <= 0.0)
    throw CoefficientNotPositive("solve_weighted_neumann: min coefficient " +
                                 std::to_string(amin));
  const double f_total = integrate(f);
  if (std::abs(f_total) > solvability_tol)
    throw SolvabilityViolation("solve_weighted_neumann: |int f| = " + std::to_string(f_total));

  const std::vector<double> A = detail::face_areas(g);
  // conductance of face i+1/2
  std::vector<double> cond(N - 1);
  for (int i = 0; i < N - 1; ++i)
    cond[i] = A[i] * 0.5 * (a.values[i] + a.values[i + 1]) / g.h;

  Tridiag M(N);
  std::vector<double> rhs(N);
  for (int i = 0; i < N; ++i) {
    const double cl = (i > 0) ? cond[i - 1] : 0.0;
    const double cr = (i < N - 1) ? cond[i] : 0.0;
    if (i > 0) M.lower[i] = -cl;
    M.diag[i] = cl + cr;
    if (i < N - 1) M.upper[i] = -cr;
    rhs[i] = g.quad_weights[i] * f.values[i];
  }
  // pin node 0
  M.diag[0] = 1.0;
  M.upper[0] = 0.0;
  rhs[0] = 0.0;
  std::vector<double> F = M.solve(rhs);

  const double mean = integrate(g, F) / g.volume();
  for (double& v : F) v += beta - mean;

  ScalarField out(a.grid, Bc::NeumannZero);
  out.values = std::move(F);
  return out;
}

// -div(a grad F) + m F = f with homogeneous Neumann flux, in the same
// flux-conservative form. A nonnegative m with positive total mass removes
// the constant null space, so no pinning or solvability condition applies.
inline ScalarField solve_weighted_neumann_mass(const ScalarField& a, const ScalarField& m,
                                               const ScalarField& f) {
  require_same_grid(a, f);
  require_same_grid(a, m);
  const Grid& g = *a.grid;
  const int N = g.N;

  double amin = a.values[0], mmin = m.values[0], mtotal = 0.0;
  for (int i = 0; i < N; ++i) {
    amin = std::min(amin, a.values[i]);
    mmin = std::min(mmin, m.values[i]);
    mtotal += g.quad_weights[i] * m.values[i];
  }
  if (amin <= 0.0)
    throw CoefficientNotPositive("solve_weighted_neumann_mass: min coefficient " +
                                 std::to_string(amin));
  if (mmin < 0.0 || mtotal <= 0.0)
    throw CoefficientNotPositive("solve_weighted_neumann_mass: mass term must be >= 0 with "
                                 "positive total");

  const std::vector<double> A = detail::face_areas(g);
  std::vector<double> cond(N - 1);
  for (int i = 0; i < N - 1; ++i)
    cond[i] = A[i] * 0.5 * (a.values[i] + a.values[i + 1]) / g.h;

  Tridiag M(N);
  std::vector<double> rhs(N);
  for (int i = 0; i < N; ++i) {
    const double cl = (i > 0) ? cond[i - 1] : 0.0;
    const double cr = (i < N - 1) ? cond[i] : 0.0;
    if (i > 0) M.lower[i] = -cl;
    M.diag[i] = cl + cr + g.quad_weights[i] * m.values[i];
    if (i < N - 1) M.upper[i] = -cr;
    rhs[i] = g.quad_weights[i] * f.values[i];
  }
  ScalarField out(a.grid, Bc::NeumannZero);
  out.values = M.solve(rhs);
  return out;
}

// Nonlinear elliptic equation with natural gradient growth,
//   -(eps^2/2)(Delta y + |grad y|^2 / 2) + y = g,  Neumann,
// solved by damped Newton with a tridiagonal Jacobian.
inline std::pair<ScalarField, SolveReport> solve_exponential_elliptic(
    const ScalarField& g_rhs, double eps, const NewtonConfig& cfg,
    const std::vector<double>* initial_guess = nullptr) {
  if (eps <= 0.0) throw Error("solve_exponential_elliptic: eps must be positive");
  if (!g_rhs.finite()) throw Error("solve_exponential_elliptic: rhs not finite");
  const Grid& g = *g_rhs.grid;
  const int N = g.N;
  const double half_eps2 = 0.5 * eps * eps;
  const Tridiag lap = detail::neumann_laplacian(g);

  auto residual = [&](const std::vector<double>& y) {
    std::vector<double> r(N);
    const std::vector<double> dy = detail::first_derivative(g, y, Bc::NeumannZero);
    for (int i = 0; i < N; ++i) {
      double lap_y = lap.diag[i] * y[i];
      if (i > 0) lap_y += lap.lower[i] * y[i - 1];
      if (i < N - 1) lap_y += lap.upper[i] * y[i + 1];
      r[i] = -half_eps2 * (lap_y + 0.5 * dy[i] * dy[i]) + y[i] - g_rhs.values[i];
    }
    return r;
  };

  std::vector<double> y = initial_guess ? *initial_guess : g_rhs.values;
  std::vector<double> res = residual(y);
  double res_norm = sup_norm(res);

  SolveReport report;
  while (res_norm > cfg.tol_residual && report.iterations < cfg.max_iter) {
    // Jacobian: -(eps^2/2)(Delta + y' d/dx) + I
    Tridiag J(N);
    const std::vector<double> dy = detail::first_derivative(g, y, Bc::NeumannZero);
    for (int i = 0; i < N; ++i) {
      J.diag[i] = -half_eps2 * lap.diag[i] + 1.0;
      if (i > 0) J.lower[i] = -half_eps2 * lap.lower[i];
      if (i < N - 1) J.upper[i] = -half_eps2 * lap.upper[i];
      if (i > 0 && i < N - 1) {
        const double c = half_eps2 * dy[i] / (2.0 * g.h);
        J.lower[i] += c;
        J.upper[i] -= c;
      }
    }
    std::vector<double> rhs(N);
    for (int i = 0; i < N; ++i) rhs[i] = -res[i];
    const std::vector<double> delta = J.solve(rhs);
    ++report.iterations;

    double step = cfg.damping;
    bool accepted = false;
    std::vector<double> y_try(N);
    while (step >= cfg.min_step) {
      for (int i = 0; i < N; ++i) y_try[i] = y[i] + step * delta[i];
      std::vector<double> res_try = residual(y_try);
      const double norm_try = sup_norm(res_try);
      if (norm_try < res_norm || norm_try <= cfg.tol_residual) {
        y = std::move(y_try);
        res = std::move(res_try);
        res_norm = norm_try;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // damping underflow
  }

  report.final_residual = res_norm;
  report.converged = res_norm <= cfg.tol_residual;
  ScalarField out(g_rhs.grid, Bc::NeumannZero);
  out.values = std::move(y);
  return {std::move(out), report};
}

}  // namespace qdd
