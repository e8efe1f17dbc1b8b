#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "qdd/diagnostics.hpp"
#include "qdd/elliptic.hpp"
#include "qdd/errors.hpp"
#include "qdd/grid.hpp"

namespace qdd {

struct ModelParams {
  double eps = 0.1;    // scaled Planck constant, > 0
  double sigma = 0.0;  // signed interaction mass
  std::optional<std::vector<double>> doping;  // C, default zero

  void validate() const {
    if (eps <= 0.0) throw ConfigError("ModelParams: eps must be > 0 (eps = 0 is the classical model)");
  }
};

struct StepConfig {
  double tau = 1e-4;
  int picard_max = 200;
  double picard_tol = 1e-10;     // sup-norm tolerance on the y-update
  double relaxation = 1.0;       // omega in (0,1]
  int anderson_window = 20;      // fixed-point acceleration depth; 0 for plain relaxation
  std::vector<double> continuation = {0.25, 0.5, 0.75, 1.0};  // lambda ladder
  NewtonConfig newton;
};

struct StepReport {
  int picard_iterations = 0;
  int newton_totals = 0;
  double mass = 0.0;
  double entropy = 0.0;
  double fisher = 0.0;
  double hessian_l2 = 0.0;
  double min_n = 0.0;
  double max_n = 0.0;
  double dissipation_lhs = 0.0;  // (E(n) - E(w))/tau
  double dissipation_rhs = 0.0;  // configured budget (0 for sigma = 0)
  double gauge_shift = 0.0;      // mean convention used for F
  double tau_eff = 0.0;
  bool used_continuation = false;
};

struct StepResult {
  DensityState state;
  ScalarField F;
  ScalarField Phi;
  StepReport report;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<StepReport> reports;
  std::vector<double> snapshot_times;
  std::vector<DensityState> snapshots;
  std::vector<ScalarField> snapshot_F;
  std::vector<ScalarField> snapshot_Phi;
};

namespace detail {

// n = e^v / ||e^v||_1, normalized by the grid quadrature.
inline std::vector<double> exp_normalized(const Grid& g, const std::vector<double>& v,
                                          double* log_norm = nullptr) {
  // subtract the max before exponentiating
  double vmax = v[0];
  for (double x : v) vmax = std::max(vmax, x);
  std::vector<double> n(v.size());
  double norm = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    n[i] = std::exp(v[i] - vmax);
    norm += g.quad_weights[i] * n[i];
  }
  for (double& x : n) x /= norm;
  if (log_norm) *log_norm = std::log(norm) + vmax;
  return n;
}

struct PicardState {
  ScalarField y, F, Phi;
  int picard_iterations = 0;
  int newton_totals = 0;
  double gauge_shift = 0.0;
};

// Solves the small normal-equation system (G + reg I) x = b in place.
// Plain Gaussian elimination with partial pivoting; m stays tiny.
inline std::vector<double> solve_dense_small(std::vector<double> G, std::vector<double> b,
                                             int m) {
  for (int k = 0; k < m; ++k) {
    int p = k;
    for (int i = k + 1; i < m; ++i)
      if (std::abs(G[i * m + k]) > std::abs(G[p * m + k])) p = i;
    if (p != k) {
      for (int j = 0; j < m; ++j) std::swap(G[k * m + j], G[p * m + j]);
      std::swap(b[k], b[p]);
    }
    const double piv = G[k * m + k];
    if (piv == 0.0) return std::vector<double>(m, 0.0);
    for (int i = k + 1; i < m; ++i) {
      const double fac = G[i * m + k] / piv;
      for (int j = k; j < m; ++j) G[i * m + j] -= fac * G[k * m + j];
      b[i] -= fac * b[k];
    }
  }
  std::vector<double> x(m, 0.0);
  for (int i = m - 1; i >= 0; --i) {
    double s = b[i];
    for (int j = i + 1; j < m; ++j) s -= G[i * m + j] * x[j];
    x[i] = s / G[i * m + i];
  }
  return x;
}

// Fixed point of v -> y for the auxiliary system at a given lambda: the
// Poisson source and the quasi-Fermi source are both scaled by lambda.
//
// The quasi-Fermi solve carries an implicit mass term lambda (n_v/tau)(F - F_v),
// where F_v is the quasi-Fermi level consistent with the current iterate
// (same stencils as the y-solve). The term vanishes identically at any fixed
// point, so the solution set is unchanged, but it suppresses the 1/(tau k^2)
// amplification that makes the bare substitution map diverge for small tau.
// The remaining expanding directions (the sigma Phi coupling) are handled by
// Anderson extrapolation over the last anderson_window sweeps.
inline PicardState picard_fixed_point(const std::shared_ptr<const Grid>& grid,
                                      const std::vector<double>& w_n,
                                      const ModelParams& params, const StepConfig& cfg,
                                      double lambda, std::vector<double> v) {
  const Grid& g = *grid;
  const int N = g.N;
  PicardState st;
  const double half_eps2 = 0.5 * params.eps * params.eps;
  const Tridiag lap = detail::neumann_laplacian(g);

  ScalarField F_last(grid, Bc::NeumannZero), Phi_last(grid, Bc::DirichletZero);
  double fv_bound = 100.0;  // stabilizer clamp; rescaled from the solved F below
  auto sweep = [&](const std::vector<double>& vc) {
    const std::vector<double> n_v = exp_normalized(g, vc);

    ScalarField poisson_src(grid, Bc::None);
    for (int i = 0; i < N; ++i) {
      const double c = params.doping ? (*params.doping)[i] : 0.0;
      poisson_src.values[i] = lambda * (n_v[i] - c);
    }
    Phi_last = solve_poisson_dirichlet(poisson_src);

    const std::vector<double> dv = detail::first_derivative(g, vc, Bc::NeumannZero);
    ScalarField a(grid, Bc::None), m(grid, Bc::None), f(grid, Bc::None);
    for (int i = 0; i < N; ++i) {
      double lap_v = lap.diag[i] * vc[i];
      if (i > 0) lap_v += lap.lower[i] * vc[i - 1];
      if (i < N - 1) lap_v += lap.upper[i] * vc[i + 1];
      double F_v = -half_eps2 * (lap_v + 0.5 * dv[i] * dv[i]) + vc[i] -
                   params.sigma * Phi_last.values[i];
      // far from the fixed point the floored log iterate can carry huge
      // spurious curvature spikes; the clamp never binds at convergence
      F_v = std::clamp(F_v, -fv_bound, fv_bound);
      a.values[i] = n_v[i];
      m.values[i] = lambda * n_v[i] / cfg.tau;
      f.values[i] = lambda * (w_n[i] - n_v[i]) / cfg.tau + m.values[i] * F_v;
    }
    F_last = solve_weighted_neumann_mass(a, m, f);
    fv_bound = std::max(100.0, 10.0 * sup_norm(F_last.values));

    ScalarField g_rhs(grid, Bc::None);
    for (int i = 0; i < N; ++i)
      g_rhs.values[i] = params.sigma * Phi_last.values[i] + F_last.values[i];
    auto solved = solve_exponential_elliptic(g_rhs, params.eps, cfg.newton, &vc);
    st.newton_totals += solved.second.iterations;
    if (!solved.second.converged) {
      solved = solve_exponential_elliptic(g_rhs, params.eps, cfg.newton);
      st.newton_totals += solved.second.iterations;
    }
    if (!solved.second.converged)
      throw PicardDiverged("Newton solve for y did not converge (lambda = " +
                           std::to_string(lambda) + ")");
    return std::move(solved.first);
  };

  const int window = std::max(cfg.anderson_window, 0);
  std::vector<std::vector<double>> v_hist, r_hist;  // iterates and residuals y - v
  double omega = cfg.relaxation;
  double prev_update = std::numeric_limits<double>::infinity();
  double best_update = std::numeric_limits<double>::infinity();
  std::vector<double> v_best = v;
  int restarts = 0;

  for (int it = 1; it <= cfg.picard_max; ++it) {
    ScalarField y = sweep(v);
    double update = 0.0;
    for (int i = 0; i < N; ++i) update = std::max(update, std::abs(y.values[i] - v[i]));
    if (!std::isfinite(update))
      throw PicardDiverged("Picard iterate lost finiteness at lambda = " +
                           std::to_string(lambda));
    st.picard_iterations = it;
    if (update <= cfg.picard_tol) {
      st.y = std::move(y);
      st.F = std::move(F_last);
      st.Phi = std::move(Phi_last);
      st.gauge_shift = integrate(st.F) / g.volume();
      return st;
    }
    if (update < best_update) {
      best_update = update;
      v_best = v;
    }

    std::vector<double> r(N);
    for (int i = 0; i < N; ++i) r[i] = y.values[i] - v[i];
    if (update > 4.0 * prev_update || update > 10.0 * best_update) {
      // extrapolation escaped the basin; back up to the best iterate seen
      // and take smaller mixed steps
      if (++restarts > 12)
        throw PicardDiverged("Picard iteration kept escaping at lambda = " +
                             std::to_string(lambda));
      v_hist.clear();
      r_hist.clear();
      omega = std::max(omega * 0.5, 1.0 / 256.0);
      v = v_best;
      prev_update = std::numeric_limits<double>::infinity();
      continue;
    }
    prev_update = update;
    v_hist.push_back(v);
    r_hist.push_back(r);
    const int keep = window + 1;
    if ((int)v_hist.size() > keep) {
      v_hist.erase(v_hist.begin());
      r_hist.erase(r_hist.begin());
    }

    const int mk = (int)v_hist.size() - 1;
    if (window > 0 && mk >= 1) {
      // least-squares combination of residual differences
      const int k = mk;  // index of the newest entry
      std::vector<double> G(mk * mk, 0.0), b(mk, 0.0);
      for (int p = 0; p < mk; ++p) {
        for (int q = p; q < mk; ++q) {
          double s = 0.0;
          for (int i = 0; i < N; ++i)
            s += (r_hist[p + 1][i] - r_hist[p][i]) * (r_hist[q + 1][i] - r_hist[q][i]);
          G[p * mk + q] = s;
          G[q * mk + p] = s;
        }
        double s = 0.0;
        for (int i = 0; i < N; ++i) s += (r_hist[p + 1][i] - r_hist[p][i]) * r_hist[k][i];
        b[p] = s;
      }
      double trace = 0.0;
      for (int p = 0; p < mk; ++p) trace += G[p * mk + p];
      const double reg = 1e-12 * (trace > 0.0 ? trace : 1.0);
      for (int p = 0; p < mk; ++p) G[p * mk + p] += reg;
      const std::vector<double> gamma = solve_dense_small(std::move(G), std::move(b), mk);

      std::vector<double> v_next(N);
      for (int i = 0; i < N; ++i) {
        double acc = v_hist[k][i] + omega * r_hist[k][i];
        for (int p = 0; p < mk; ++p) {
          const double dv_p = v_hist[p + 1][i] - v_hist[p][i];
          const double dr_p = r_hist[p + 1][i] - r_hist[p][i];
          acc -= gamma[p] * (dv_p + omega * dr_p);
        }
        v_next[i] = acc;
      }
      v = std::move(v_next);
    } else {
      for (int i = 0; i < N; ++i) v[i] += omega * r[i];
    }
    // trust region in log space: wild transients (floored zeros, strong
    // attraction) otherwise overflow the exponential transform
    for (int i = 0; i < N; ++i)
      v[i] = v_hist.back()[i] + std::clamp(v[i] - v_hist.back()[i], -3.0, 3.0);
  }
  throw PicardDiverged("Picard iteration exceeded " + std::to_string(cfg.picard_max) +
                       " iterations at lambda = " + std::to_string(lambda));
}

}  // namespace detail

// One semi-discrete time step: solves the coupled elliptic system for the
// new density n = e^y / ||e^y||_1 by Picard iteration over the map v -> y,
// falling back to the lambda-continuation ladder when the direct iteration
// fails to contract.
inline StepResult step(const std::shared_ptr<const Grid>& grid, const DensityState& w,
                       const ModelParams& params, const StepConfig& cfg) {
  params.validate();
  if (cfg.tau <= 0.0) throw ConfigError("step: tau must be positive");
  const Grid& g = *grid;
  const int N = g.N;
  const std::vector<double> w_n = w.density();

  // initial iterate log(max(w^2, floor)); the floor guards densities with zeros
  double wmax = 0.0;
  for (double x : w_n) wmax = std::max(wmax, x);
  const double floor = 1e-12 * wmax;
  std::vector<double> v0(N);
  for (int i = 0; i < N; ++i) v0[i] = std::log(std::max(w_n[i], floor));

  detail::PicardState st;
  bool used_continuation = false;
  try {
    st = detail::picard_fixed_point(grid, w_n, params, cfg, 1.0, v0);
  } catch (const PicardDiverged&) {
    if (cfg.continuation.empty()) throw;
    for (double lam : cfg.continuation)
      if (lam <= 0.0 || lam > 1.0)
        throw ConfigError("step: continuation ladder entries must lie in (0, 1]");
    used_continuation = true;
    std::vector<double> targets(cfg.continuation.begin(), cfg.continuation.end());
    std::vector<double> v = v0;
    double lam_done = 0.0;
    int iters = 0, newtons = 0;
    std::size_t ti = 0;
    while (ti < targets.size()) {
      const double lam = targets[ti];
      try {
        detail::PicardState rung = detail::picard_fixed_point(grid, w_n, params, cfg, lam, v);
        v = rung.y.values;
        iters += rung.picard_iterations;
        newtons += rung.newton_totals;
        st = std::move(rung);
        lam_done = lam;
        ++ti;
      } catch (const PicardDiverged&) {
        // refine the ladder between the last solved rung and the failure
        const double mid = 0.5 * (lam_done + lam);
        if (lam - mid < 1.0 / 128.0) throw;
        targets.insert(targets.begin() + ti, mid);
      }
    }
    st.picard_iterations = iters;
    st.newton_totals = newtons;
  }

  StepResult out;
  out.state.rho = ScalarField(grid, Bc::NeumannZero);
  const std::vector<double> n_new = detail::exp_normalized(g, st.y.values);
  for (int i = 0; i < N; ++i) out.state.rho.values[i] = std::sqrt(n_new[i]);
  out.F = std::move(st.F);
  out.Phi = std::move(st.Phi);

  StepReport& rep = out.report;
  rep.picard_iterations = st.picard_iterations;
  rep.newton_totals = st.newton_totals;
  rep.used_continuation = used_continuation;
  rep.tau_eff = cfg.tau;
  rep.gauge_shift = st.gauge_shift;
  const EntropyReport er = entropy_report(out.state);
  rep.mass = er.mass;
  rep.entropy = er.entropy;
  rep.fisher = er.fisher;
  rep.hessian_l2 = er.hessian_l2;
  rep.min_n = er.min_n;
  rep.max_n = er.max_n;
  rep.dissipation_lhs = (er.entropy - entropy(g, w_n)) / cfg.tau;
  rep.dissipation_rhs = 0.0;
  return out;
}

// Discrete entropy-dissipation bound:
//   lhs = (E(next) - E(prev))/tau + 2 gamma eps^2 ||Hess rho_next||_2^2,
//   rhs = the configured budget c(delta); holds = lhs <= rhs.
struct EntropyInequality {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

inline EntropyInequality discrete_entropy_inequality(const DensityState& prev,
                                                     const DensityState& next, double tau,
                                                     const ModelParams& params, double gamma,
                                                     double budget = 0.0) {
  require_same_grid(prev.rho, next.rho);
  const Grid& g = *prev.rho.grid;
  EntropyInequality r;
  r.lhs = (entropy(g, next.density()) - entropy(g, prev.density())) / tau +
          2.0 * gamma * params.eps * params.eps * hessian_l2_sq(next.rho);
  r.rhs = budget;
  r.holds = r.lhs <= r.rhs;
  return r;
}

struct EvolveConfig {
  double T = 0.1;
  int snapshot_every = 0;  // 0: only initial and final states
  int max_halvings = 10;
};

// Repeated stepping to the horizon; on PicardDiverged the step is retried
// with tau halved (up to max_halvings), and the effective tau is recorded.
inline Trajectory evolve(const std::shared_ptr<const Grid>& grid, const DensityState& n0,
                         const ModelParams& params, const StepConfig& cfg,
                         const EvolveConfig& ecfg) {
  if (ecfg.T <= 0.0) throw ConfigError("evolve: horizon must be positive");
  Trajectory traj;
  DensityState state = n0;
  traj.snapshot_times.push_back(0.0);
  traj.snapshots.push_back(state);
  traj.snapshot_F.emplace_back(grid, Bc::NeumannZero);
  traj.snapshot_Phi.emplace_back(grid, Bc::DirichletZero);

  double t = 0.0;
  int k = 0;
  while (t < ecfg.T - 1e-12 * ecfg.T) {
    StepConfig scfg = cfg;
    scfg.tau = std::min(cfg.tau, ecfg.T - t);
    StepResult result;
    bool done = false;
    for (int halvings = 0; halvings <= ecfg.max_halvings; ++halvings) {
      try {
        result = step(grid, state, params, scfg);
        done = true;
        break;
      } catch (const PicardDiverged&) {
        scfg.tau *= 0.5;
      }
    }
    if (!done)
      throw StepFailed("evolve: step failed after " + std::to_string(ecfg.max_halvings) +
                       " tau halvings at t = " + std::to_string(t));
    t += scfg.tau;
    ++k;
    state = result.state;
    result.report.tau_eff = scfg.tau;
    traj.times.push_back(t);
    traj.reports.push_back(result.report);
    const bool record = (ecfg.snapshot_every > 0 && k % ecfg.snapshot_every == 0) ||
                        t >= ecfg.T - 1e-12 * ecfg.T;
    if (record) {
      traj.snapshot_times.push_back(t);
      traj.snapshots.push_back(state);
      traj.snapshot_F.push_back(result.F);
      traj.snapshot_Phi.push_back(result.Phi);
    }
  }
  return traj;
}

}  // namespace qdd
