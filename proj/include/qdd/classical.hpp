#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "qdd/diagnostics.hpp"
#include "qdd/elliptic.hpp"
#include "qdd/errors.hpp"
#include "qdd/grid.hpp"
#include "qdd/scheme.hpp"

namespace qdd {

enum class BlowupTrigger { None, MaxDensity, StepCollapse, SolverFailure };

inline std::string to_string(BlowupTrigger t) {
  switch (t) {
    case BlowupTrigger::None: return "None";
    case BlowupTrigger::MaxDensity: return "MaxDensity";
    case BlowupTrigger::StepCollapse: return "StepCollapse";
    case BlowupTrigger::SolverFailure: return "SolverFailure";
  }
  return "None";
}

struct BlowupReport {
  bool blew_up = false;
  double t_detect = 0.0;
  BlowupTrigger trigger = BlowupTrigger::None;
  std::vector<double> max_n_trace;
};

struct DetectorConfig {
  double max_density_cap = 0.0;  // 0: default 1e6/|Omega|
  double tau_min_factor = 1e-3;  // StepCollapse when tau_eff < factor * tau0
  double clip_deficit_limit = 0.1;  // retry with smaller tau beyond this
};

struct ClassicalStepResult {
  std::vector<double> n;
  double clip_deficit = 0.0;  // mass removed by clipping, before renormalization
};

// Semi-implicit step of the epsilon = 0 companion model
//   n_t = Delta n - sigma div(n grad Phi),  -Delta Phi = n (Dirichlet),
// with implicit flux-form diffusion, explicit drift evaluated at w, and
// zero total flux through the boundary (mass-conservative by telescoping).
inline ClassicalStepResult classical_step(const std::shared_ptr<const Grid>& grid,
                                          const std::vector<double>& w, double sigma,
                                          double tau) {
  const Grid& g = *grid;
  const int N = g.N;

  ScalarField src(grid, Bc::None);
  src.values = w;
  const ScalarField Phi = solve_poisson_dirichlet(src);

  const std::vector<double> A = detail::face_areas(g);
  // explicit drift divergence: flux G = sigma * A * w_face * dPhi/dr
  std::vector<double> drift(N, 0.0);
  std::vector<double> G(N - 1);
  for (int i = 0; i < N - 1; ++i) {
    const double w_face = 0.5 * (w[i] + w[i + 1]);
    G[i] = sigma * A[i] * w_face * (Phi.values[i + 1] - Phi.values[i]) / g.h;
  }
  for (int i = 0; i < N; ++i) {
    const double gl = (i > 0) ? G[i - 1] : 0.0;
    const double gr = (i < N - 1) ? G[i] : 0.0;
    drift[i] = (gr - gl) / g.quad_weights[i];
  }

  // (V/tau + L) n = V w / tau - V drift, L the flux-form Neumann stiffness
  Tridiag M(N);
  std::vector<double> rhs(N);
  for (int i = 0; i < N; ++i) {
    const double cl = (i > 0) ? A[i - 1] / g.h : 0.0;
    const double cr = (i < N - 1) ? A[i] / g.h : 0.0;
    if (i > 0) M.lower[i] = -cl;
    M.diag[i] = g.quad_weights[i] / tau + cl + cr;
    if (i < N - 1) M.upper[i] = -cr;
    rhs[i] = g.quad_weights[i] * (w[i] / tau - drift[i]);
  }
  ClassicalStepResult out;
  out.n = M.solve(rhs);

  double clipped = 0.0, mass = 0.0;
  for (int i = 0; i < N; ++i) {
    if (out.n[i] < 0.0) {
      clipped -= g.quad_weights[i] * out.n[i];
      out.n[i] = 0.0;
    }
    mass += g.quad_weights[i] * out.n[i];
  }
  out.clip_deficit = clipped;
  if (mass <= 0.0) throw StepFailed("classical_step: nonpositive mass after clipping");
  const double target = integrate(g, w);
  for (double& v : out.n) v *= target / mass;
  return out;
}

struct ClassicalTrajectory {
  std::vector<double> times;
  std::vector<double> tau_eff;
  std::vector<double> mass;
  std::vector<double> entropy_series;
  std::vector<double> max_n;
  std::vector<double> min_n;
  std::vector<double> clip_deficit;
  std::vector<double> snapshot_times;
  std::vector<std::vector<double>> snapshots;
};

// Runs to the horizon or until the blowup detector fires. Blowup is a
// report, not an exception: finite-time collapse is operationalized as
// detector triggers (density cap, or tau collapse under repeated halvings).
inline std::pair<ClassicalTrajectory, BlowupReport> evolve_classical(
    const std::shared_ptr<const Grid>& grid, const std::vector<double>& n0, double sigma,
    double tau0, double T, const DetectorConfig& det = {}, int snapshot_every = 0) {
  const Grid& g = *grid;
  const double cap =
      det.max_density_cap > 0.0 ? det.max_density_cap : 1e6 / g.volume();
  const double tau_min = det.tau_min_factor * tau0;

  ClassicalTrajectory traj;
  BlowupReport rep;
  std::vector<double> n = n0;
  traj.snapshot_times.push_back(0.0);
  traj.snapshots.push_back(n);

  double t = 0.0;
  int k = 0;
  while (t < T - 1e-12 * T) {
    double tau = std::min(tau0, T - t);
    ClassicalStepResult sr;
    bool ok = false;
    while (tau >= tau_min) {
      try {
        sr = classical_step(grid, n, sigma, tau);
      } catch (const Error&) {
        rep.blew_up = true;
        rep.trigger = BlowupTrigger::SolverFailure;
        rep.t_detect = t;
        return {traj, rep};
      }
      bool finite = true;
      for (double v : sr.n)
        if (!std::isfinite(v)) finite = false;
      if (finite && sr.clip_deficit <= det.clip_deficit_limit) {
        ok = true;
        break;
      }
      tau *= 0.5;
    }
    if (!ok) {
      rep.blew_up = true;
      rep.trigger = BlowupTrigger::StepCollapse;
      rep.t_detect = t;
      return {traj, rep};
    }
    n = std::move(sr.n);
    t += tau;
    ++k;
    double nmax = n[0], nmin = n[0];
    for (double v : n) {
      nmax = std::max(nmax, v);
      nmin = std::min(nmin, v);
    }
    traj.times.push_back(t);
    traj.tau_eff.push_back(tau);
    traj.mass.push_back(integrate(g, n));
    traj.entropy_series.push_back(entropy(g, n));
    traj.max_n.push_back(nmax);
    traj.min_n.push_back(nmin);
    traj.clip_deficit.push_back(sr.clip_deficit);
    rep.max_n_trace.push_back(nmax);
    if ((snapshot_every > 0 && k % snapshot_every == 0) || t >= T - 1e-12 * T) {
      traj.snapshot_times.push_back(t);
      traj.snapshots.push_back(n);
    }
    if (nmax > cap) {
      rep.blew_up = true;
      rep.trigger = BlowupTrigger::MaxDensity;
      rep.t_detect = t;
      return {traj, rep};
    }
  }
  return {traj, rep};
}

}  // namespace qdd
