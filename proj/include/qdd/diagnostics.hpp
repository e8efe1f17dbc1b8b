#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "qdd/errors.hpp"
#include "qdd/grid.hpp"

namespace qdd {

struct EntropyReport {
  double entropy = 0.0;
  double fisher = 0.0;
  double mass = 0.0;
  double hessian_l2 = 0.0;
  double min_n = 0.0;
  double max_n = 0.0;
};

// phi(s) = s(log s - 1) + 1 with the continuous extension phi(0) = 1.
inline double entropy_integrand(double s) {
  if (s < 0.0) throw Error("entropy: negative density value");
  if (s < 1e-300) return 1.0;
  return s * (std::log(s) - 1.0) + 1.0;
}

inline double entropy(const Grid& grid, const std::vector<double>& n_values) {
  std::vector<double> phi(n_values.size());
  for (std::size_t i = 0; i < n_values.size(); ++i) phi[i] = entropy_integrand(n_values[i]);
  return integrate(grid, phi);
}

// Fisher information J2 = int n |grad log n|^2 = 4 int |grad rho|^2,
// computed from the rho form, which needs no positivity floor.
inline double fisher_information(const ScalarField& rho) {
  const ScalarField gsq = gradient_sq(rho);
  return 4.0 * integrate(gsq);
}

// ||Hess rho||_2^2 in the radial principal-value representation.
inline double hessian_l2_sq(const ScalarField& rho) {
  return integrate(hessian_sq(rho));
}

inline EntropyReport entropy_report(const DensityState& state) {
  EntropyReport r;
  const std::vector<double> n = state.density();
  const Grid& g = *state.rho.grid;
  r.mass = integrate(g, n);
  r.entropy = entropy(g, n);
  r.fisher = fisher_information(state.rho);
  r.hessian_l2 = hessian_l2_sq(state.rho);
  r.min_n = *std::min_element(n.begin(), n.end());
  r.max_n = *std::max_element(n.begin(), n.end());
  return r;
}

// Pointwise geometric quantities of the Hessian split
//   |Hess rho / rho|^2 = d eta^2 + d/(d-1) mu^2 + varrho^2,
// with xi = |grad rho|/rho, eta = Lap rho/(d rho). For radially symmetric
// fields mu = rho''/rho - eta and varrho vanishes identically; the
// identity residual is reported for audit.
struct HessianDecomposition {
  std::vector<double> xi;
  std::vector<double> eta;
  std::vector<double> mu;
  std::vector<double> varrho_sq;
  double identity_residual = 0.0;
};

inline HessianDecomposition hessian_decomposition(const ScalarField& rho,
                                                  double xi_floor = -1.0) {
  const Grid& g = *rho.grid;
  if (g.d == 1)
    throw Error("hessian_decomposition: d = 1 has no mu/varrho split (d/(d-1) undefined)");
  const int N = g.N;
  for (double v : rho.values)
    if (v <= 0.0) throw Error("hessian_decomposition: rho must be strictly positive");

  const std::vector<double> drho = detail::first_derivative(g, rho.values, rho.bc);
  const std::vector<double> ddrho = detail::second_derivative(g, rho.values, rho.bc);
  const std::vector<double> slope = detail::radial_slope_over_r(g, rho.values, rho.bc);

  HessianDecomposition out;
  out.xi.resize(N);
  out.eta.resize(N);
  out.mu.resize(N);
  out.varrho_sq.resize(N);
  (void)xi_floor;  // mu is taken from the same finite formula below the floor

  double max_rel_res = 0.0;
  for (int i = 0; i < N; ++i) {
    const double r = rho.values[i];
    out.xi[i] = std::abs(drho[i]) / r;
    const double lap = ddrho[i] + (g.d - 1) * slope[i];
    out.eta[i] = lap / (g.d * r);
    out.mu[i] = ddrho[i] / r - out.eta[i];
    const double hess_sq = (ddrho[i] * ddrho[i] + (g.d - 1) * slope[i] * slope[i]) / (r * r);
    out.varrho_sq[i] = hess_sq - g.d * out.eta[i] * out.eta[i] -
                       (static_cast<double>(g.d) / (g.d - 1)) * out.mu[i] * out.mu[i];
    const double scale = std::max(hess_sq, 1e-30);
    max_rel_res = std::max(max_rel_res, std::abs(out.varrho_sq[i]) / scale);
  }
  out.identity_residual = max_rel_res;
  return out;
}

// Dummy integral I(rho) = int div(rho^{-1} |grad rho|^2 grad rho) dx in the
// expanded xi/eta/mu form; tends to zero under refinement for fields with
// zero Neumann flux.
inline double dummy_integral(const ScalarField& rho) {
  const Grid& g = *rho.grid;
  for (double v : rho.values)
    if (v <= 0.0) throw Error("dummy_integral: rho must be strictly positive");
  const std::vector<double> drho = detail::first_derivative(g, rho.values, rho.bc);
  const std::vector<double> ddrho = detail::second_derivative(g, rho.values, rho.bc);

  std::vector<double> integrand(g.N);
  if (g.d == 1) {
    // (d+2) eta xi^2 + 2 mu xi^2 - xi^4 with mu := 0 and eta = rho''/rho
    for (int i = 0; i < g.N; ++i) {
      const double r = rho.values[i], dr = drho[i], ddr = ddrho[i];
      integrand[i] = 3.0 * ddr * dr * dr / r - dr * dr * dr * dr / (r * r);
    }
  } else {
    const std::vector<double> slope = detail::radial_slope_over_r(g, rho.values, rho.bc);
    for (int i = 0; i < g.N; ++i) {
      const double r = rho.values[i], dr = drho[i], ddr = ddrho[i];
      const double lap = ddr + (g.d - 1) * slope[i];
      const double eta = lap / (g.d * r);
      const double mu = ddr / r - eta;
      const double xi2 = dr * dr / (r * r);
      integrand[i] =
          r * r * ((g.d + 2) * eta * xi2 + 2.0 * mu * xi2 - xi2 * xi2);
    }
  }
  return integrate(g, integrand);
}

}  // namespace qdd
