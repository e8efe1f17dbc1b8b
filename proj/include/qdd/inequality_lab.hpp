#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "qdd/diagnostics.hpp"
#include "qdd/errors.hpp"
#include "qdd/grid.hpp"

namespace qdd {

struct SampleSpec {
  std::uint64_t seed = 0;
  double k = 0.5;      // pinch: k <= u <= 1/k
  int modes = 6;       // cosine modes
  double decay = 2.0;  // amplitude decay exponent
  double margin_fraction = 0.05;

  void validate() const {
    if (!(k > 0.0 && k < 1.0)) throw ConfigError("SampleSpec: k must be in (0,1)");
    if (modes < 1) throw ConfigError("SampleSpec: modes >= 1 required");
  }
};

struct InequalityReport {
  std::string inequality;
  int d = 1;
  std::vector<double> deltas;
  int trials = 0;
  int violations = 0;
  double worst_margin = std::numeric_limits<double>::infinity();
  double empirical_constant = 0.0;
  std::uint64_t seed = 0;
};

namespace detail {

// Neumann-compatible cosine basis: cos(i pi x / L) on the slab,
// cos(i pi (r/L)^2) radially (even at the center, flat at r = L).
inline std::vector<double> cosine_series(const Grid& g, const std::vector<double>& amps) {
  std::vector<double> s(g.N, 0.0);
  for (std::size_t m = 0; m < amps.size(); ++m) {
    const double freq = (m + 1) * std::numbers::pi;
    for (int i = 0; i < g.N; ++i) {
      const double x = g.nodes[i] / g.L;
      const double basis = (g.geometry == Geometry::Slab) ? std::cos(freq * x)
                                                          : std::cos(freq * x * x);
      s[i] += amps[m] * basis;
    }
  }
  return s;
}

// Affine rescale of a shape into [k + margin, 1/k - margin].
inline ScalarField pinch_rescale(const std::shared_ptr<const Grid>& grid,
                                 const std::vector<double>& shape, double k,
                                 double margin_fraction) {
  const double width = 1.0 / k - k;
  const double lo = k + margin_fraction * width;
  const double hi = 1.0 / k - margin_fraction * width;
  double smin = shape[0], smax = shape[0];
  for (double v : shape) {
    smin = std::min(smin, v);
    smax = std::max(smax, v);
  }
  ScalarField u(grid, Bc::NeumannZero);
  if (smax - smin < 1e-14) {
    for (double& v : u.values) v = 0.5 * (lo + hi);
  } else {
    const double scale = (hi - lo) / (smax - smin);
    for (int i = 0; i < grid->N; ++i) u.values[i] = lo + scale * (shape[i] - smin);
  }
  return u;
}

}  // namespace detail

// Random admissible field for the inequality suites: Neumann-compatible
// cosine series rescaled into the pinch interval; deterministic in the seed.
inline ScalarField sample_test_function(const std::shared_ptr<const Grid>& grid,
                                        const SampleSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<double> amps(spec.modes);
  for (int m = 0; m < spec.modes; ++m)
    amps[m] = unit(rng) / std::pow(m + 1.0, spec.decay);
  const std::vector<double> shape = detail::cosine_series(*grid, amps);
  return detail::pinch_rescale(grid, shape, spec.k, spec.margin_fraction);
}

// Closed-form admissible constants of the Hessian coercivity bound:
//   c0_max = 1 - (d-1) / ((d+2)(1 - (d+2)delta/d)),  gamma = (1 + (d-1)c0)/d.
inline std::pair<double, double> eval_c0_gamma(int d, double delta) {
  if (d != 2 && d != 3) throw ConfigError("eval_c0_gamma: d must be 2 or 3");
  if (delta < 0.0) throw DeltaTooLarge("eval_c0_gamma: delta must be nonnegative");
  const double denom = 1.0 - (d + 2) * delta / d;
  if (denom <= static_cast<double>(d - 1) / (d + 2))
    throw DeltaTooLarge("eval_c0_gamma: delta too large for a positive c0");
  const double c0 = 1.0 - (d - 1) / ((d + 2) * denom);
  const double gamma = (1.0 + (d - 1) * c0) / d;
  return {c0, gamma};
}

struct GammaBoundEntry {
  double J = 0.0;
  double K = 0.0;
  double margin = 0.0;  // J - gamma K
};

// J(u) = int u^2 [ |Hess u/u|^2 + (Lap u/u)|grad u/u|^2 - delta |grad u/u|^4 ],
// K(u) = int |Hess u|^2, in the radial Hessian representation.
inline GammaBoundEntry check_gamma_bound(const ScalarField& u, double delta) {
  const Grid& g = *u.grid;
  if (g.geometry != Geometry::Radial)
    throw Error("check_gamma_bound: requires a radial grid (d in {2,3})");
  const auto [c0, gamma] = eval_c0_gamma(g.d, delta);
  (void)c0;

  const std::vector<double> du = detail::first_derivative(g, u.values, u.bc);
  const std::vector<double> ddu = detail::second_derivative(g, u.values, u.bc);
  const std::vector<double> slope = detail::radial_slope_over_r(g, u.values, u.bc);

  std::vector<double> j_int(g.N), k_int(g.N);
  for (int i = 0; i < g.N; ++i) {
    const double v = u.values[i];
    const double hess_sq = ddu[i] * ddu[i] + (g.d - 1) * slope[i] * slope[i];
    const double lap = ddu[i] + (g.d - 1) * slope[i];
    const double grad_sq = du[i] * du[i];
    k_int[i] = hess_sq;
    j_int[i] = hess_sq + lap * grad_sq / v - delta * grad_sq * grad_sq / (v * v);
  }
  GammaBoundEntry e;
  e.J = integrate(g, j_int);
  e.K = integrate(g, k_int);
  e.margin = e.J - gamma * e.K;
  return e;
}

struct GammaSuiteConfig {
  int trials = 200;
  double rel_tol = 1e-8;  // violation when margin < -rel_tol * K
};

inline InequalityReport run_gamma_suite(const std::shared_ptr<const Grid>& grid, double delta,
                                        std::uint64_t seed, const GammaSuiteConfig& cfg = {}) {
  InequalityReport rep;
  rep.inequality = "gamma";
  rep.d = grid->d;
  rep.deltas = {delta};
  rep.trials = cfg.trials;
  rep.seed = seed;
  double worst = std::numeric_limits<double>::infinity();
  for (int t = 0; t < cfg.trials; ++t) {
    SampleSpec spec;
    spec.seed = seed + static_cast<std::uint64_t>(t) * 1000003ULL;
    const ScalarField u = sample_test_function(grid, spec);
    const GammaBoundEntry e = check_gamma_bound(u, delta);
    const double rel = (e.K > 0.0) ? e.margin / e.K : 0.0;
    worst = std::min(worst, rel);
    if (rel < -cfg.rel_tol) ++rep.violations;
  }
  rep.worst_margin = worst;
  return rep;
}

// Random-restart coordinate descent minimizing margin/K over mode
// amplitudes; no gradient needed, budget-capped.
inline double gamma_adversarial_probe(const std::shared_ptr<const Grid>& grid, double delta,
                                      std::uint64_t seed, int restarts = 50,
                                      int budget = 10000) {
  SampleSpec base;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  int evals = 0;

  auto objective = [&](const std::vector<double>& amps) {
    ++evals;
    const std::vector<double> shape = detail::cosine_series(*grid, amps);
    const ScalarField u = detail::pinch_rescale(grid, shape, base.k, base.margin_fraction);
    const GammaBoundEntry e = check_gamma_bound(u, delta);
    return (e.K > 0.0) ? e.margin / e.K : 0.0;
  };

  double global_min = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts && evals < budget; ++r) {
    std::vector<double> amps(base.modes);
    for (double& a : amps) a = unit(rng);
    double best = objective(amps);
    double step = 0.5;
    while (step > 1e-3 && evals < budget) {
      bool improved = false;
      for (std::size_t j = 0; j < amps.size() && evals < budget; ++j) {
        for (double sgn : {+1.0, -1.0}) {
          std::vector<double> trial = amps;
          trial[j] += sgn * step;
          const double val = objective(trial);
          if (val < best) {
            best = val;
            amps = trial;
            improved = true;
          }
        }
      }
      if (!improved) step *= 0.5;
    }
    global_min = std::min(global_min, best);
  }
  return global_min;
}

struct N2Entry {
  double required_c = 0.0;  // int u^4 - d1 int u^2|grad log u|^4 - d2 int |grad u|^2
};

inline N2Entry check_n2_inequality(const ScalarField& u, double delta1, double delta2) {
  const Grid& g = *u.grid;
  const std::vector<double> du = detail::first_derivative(g, u.values, u.bc);
  std::vector<double> quartic(g.N), gradlog4(g.N), grad2(g.N);
  for (int i = 0; i < g.N; ++i) {
    const double v = u.values[i];
    quartic[i] = v * v * v * v;
    const double gl2 = du[i] * du[i] / (v * v);
    gradlog4[i] = v * v * gl2 * gl2;
    grad2[i] = du[i] * du[i];
  }
  N2Entry e;
  e.required_c = integrate(g, quartic) - delta1 * integrate(g, gradlog4) -
                 delta2 * integrate(g, grad2);
  return e;
}

struct N2SuiteResult {
  InequalityReport report;
  double constant_half = 0.0;     // empirical constant on the first half
  double constant_full = 0.0;     // after doubling
  double stability_change = 0.0;  // relative change under doubling
  double certified_constant = 0.0;
  int holdout_violations = 0;
};

// Samples are L2-normalized so the empirical constant is recorded at fixed
// ||u||_2; the certified constant carries the suite's own 10% stability band.
inline N2SuiteResult run_n2_suite(const std::shared_ptr<const Grid>& grid, double delta1,
                                  double delta2, std::uint64_t seed, int trials = 1000,
                                  int holdout = 500) {
  auto sample_normalized = [&](std::uint64_t s) {
    SampleSpec spec;
    spec.seed = s;
    ScalarField u = sample_test_function(grid, spec);
    std::vector<double> sq(grid->N);
    for (int i = 0; i < grid->N; ++i) sq[i] = u.values[i] * u.values[i];
    const double norm = std::sqrt(integrate(*grid, sq));
    for (double& v : u.values) v /= norm;
    return u;
  };

  N2SuiteResult res;
  double sup_half = -std::numeric_limits<double>::infinity();
  double sup_full = sup_half;
  for (int t = 0; t < 2 * trials; ++t) {
    const ScalarField u = sample_normalized(seed + static_cast<std::uint64_t>(t) * 1000003ULL);
    const double c = check_n2_inequality(u, delta1, delta2).required_c;
    if (t < trials) sup_half = std::max(sup_half, c);
    sup_full = std::max(sup_full, c);
  }
  res.constant_half = sup_half;
  res.constant_full = sup_full;
  res.stability_change = std::abs(sup_full - sup_half) / std::abs(sup_full);
  res.certified_constant = sup_full + 0.10 * std::abs(sup_full);  // the 10% stability band

  const std::uint64_t holdout_base = seed ^ 0x9e3779b97f4a7c15ULL;
  for (int t = 0; t < holdout; ++t) {
    const ScalarField u =
        sample_normalized(holdout_base + static_cast<std::uint64_t>(t) * 999983ULL);
    const double c = check_n2_inequality(u, delta1, delta2).required_c;
    if (c > res.certified_constant) ++res.holdout_violations;
  }

  res.report.inequality = "n2";
  res.report.d = grid->d;
  res.report.deltas = {delta1, delta2};
  res.report.trials = 2 * trials + holdout;
  res.report.violations = res.holdout_violations;
  res.report.worst_margin = res.certified_constant - sup_full;
  res.report.empirical_constant = sup_full;
  res.report.seed = seed;
  return res;
}

// Empirical log-Sobolev constant: sup over samples of
//   int n log n dx / (J2 / 4) with ||rho||_2 = 1, n = rho^2.
// The left side may be negative; only the recorded-constant inequality is
// claimed, with no sharpness statement.
inline InequalityReport run_logsob_suite(const std::shared_ptr<const Grid>& grid,
                                         std::uint64_t seed, int trials = 200) {
  InequalityReport rep;
  rep.inequality = "logsob";
  rep.d = grid->d;
  rep.trials = trials;
  rep.seed = seed;
  double sup_ratio = -std::numeric_limits<double>::infinity();
  double worst = std::numeric_limits<double>::infinity();
  for (int t = 0; t < trials; ++t) {
    SampleSpec spec;
    spec.seed = seed + static_cast<std::uint64_t>(t) * 1000003ULL;
    ScalarField rho = sample_test_function(grid, spec);
    std::vector<double> n(grid->N);
    for (int i = 0; i < grid->N; ++i) n[i] = rho.values[i] * rho.values[i];
    const double mass = integrate(*grid, n);
    for (int i = 0; i < grid->N; ++i) {
      n[i] /= mass;
      rho.values[i] /= std::sqrt(mass);
    }
    std::vector<double> nlogn(grid->N);
    for (int i = 0; i < grid->N; ++i) nlogn[i] = n[i] * std::log(n[i]);
    const double lhs = integrate(*grid, nlogn);
    const double grad = integrate(gradient_sq(rho));  // J2/4
    if (grad > 1e-14) sup_ratio = std::max(sup_ratio, lhs / grad);
  }
  rep.empirical_constant = sup_ratio;
  // zero violations by construction of the recorded constant; the margin is
  // re-checked on the same samples for audit
  for (int t = 0; t < trials; ++t) {
    SampleSpec spec;
    spec.seed = seed + static_cast<std::uint64_t>(t) * 1000003ULL;
    ScalarField rho = sample_test_function(grid, spec);
    std::vector<double> n(grid->N);
    for (int i = 0; i < grid->N; ++i) n[i] = rho.values[i] * rho.values[i];
    const double mass = integrate(*grid, n);
    for (int i = 0; i < grid->N; ++i) {
      n[i] /= mass;
      rho.values[i] /= std::sqrt(mass);
    }
    std::vector<double> nlogn(grid->N);
    for (int i = 0; i < grid->N; ++i) nlogn[i] = n[i] * std::log(n[i]);
    const double lhs = integrate(*grid, nlogn);
    const double grad = integrate(gradient_sq(rho));
    const double margin = sup_ratio * grad - lhs;
    worst = std::min(worst, margin);
    if (margin < -1e-12) ++rep.violations;
  }
  rep.worst_margin = worst;
  return rep;
}

enum class GnsInstance {
  SupNorm,  // ||u||_inf <= c ||u||_{2,2}^theta ||u||_2^{1-theta}, theta = d/4
  GradL4,   // ||grad u||_4 <= c ||u||_{2,2}^theta ||u||_2^{1-theta}, theta = (4+d)/8
};

inline double check_gagliardo_instance(const ScalarField& u, GnsInstance instance) {
  const Grid& g = *u.grid;
  double umin = u.values[0], umax = u.values[0];
  for (double v : u.values) {
    umin = std::min(umin, v);
    umax = std::max(umax, v);
  }
  if (umax - umin < 1e-13 * std::max(1.0, std::abs(umax)))
    throw DegenerateRatio("check_gagliardo_instance: constant field");

  std::vector<double> sq(g.N);
  for (int i = 0; i < g.N; ++i) sq[i] = u.values[i] * u.values[i];
  const double l2 = std::sqrt(integrate(g, sq));
  const double grad_l2_sq = integrate(gradient_sq(u));
  const double hess_l2_sq = integrate(hessian_sq(u));
  const double w22 = std::sqrt(l2 * l2 + grad_l2_sq + hess_l2_sq);

  double lhs = 0.0, theta = 0.0;
  if (instance == GnsInstance::SupNorm) {
    for (double v : u.values) lhs = std::max(lhs, std::abs(v));
    theta = g.d / 4.0;
  } else {
    const std::vector<double> du = detail::first_derivative(g, u.values, u.bc);
    std::vector<double> p4(g.N);
    for (int i = 0; i < g.N; ++i) p4[i] = du[i] * du[i] * du[i] * du[i];
    lhs = std::pow(integrate(g, p4), 0.25);
    theta = (4.0 + g.d) / 8.0;
  }
  return lhs / (std::pow(w22, theta) * std::pow(l2, 1.0 - theta));
}

// Symbolic exponents of the constructive interpolation chain behind the n2
// bound, exposed for audit; no numeric constant is claimed.
struct N2ExponentAudit {
  double alpha = 0.0;
  double u2_exponent = 0.0;      // (16 - (3 - alpha) d) / 4
  double v14_exponent = 0.0;     // (1 + alpha) d / 2
  double u12_exponent = 0.0;     // (1 - alpha) d / 2
};

inline N2ExponentAudit n2_exponent_audit(int d, double alpha) {
  if (d != 2 && d != 3) throw ConfigError("n2_exponent_audit: d must be 2 or 3");
  const double lo = (d == 2) ? 0.0 : 1.0 / 3.0;
  if (!(alpha > lo && alpha < 1.0))
    throw ConfigError("n2_exponent_audit: alpha outside the admissible window");
  N2ExponentAudit a;
  a.alpha = alpha;
  a.u2_exponent = (16.0 - (3.0 - alpha) * d) / 4.0;
  a.v14_exponent = (1.0 + alpha) * d / 2.0;
  a.u12_exponent = (1.0 - alpha) * d / 2.0;
  return a;
}

}  // namespace qdd
