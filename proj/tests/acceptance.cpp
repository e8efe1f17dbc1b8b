// Acceptance gate: ten end-to-end criteria, one pass/fail line each.
// Exit code is the number of failed criteria.

#include <cmath>
#include <cstdio>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "qdd/classical.hpp"
#include "qdd/inequality_lab.hpp"
#include "qdd/presets.hpp"
#include "qdd/scheme.hpp"
#include "qdd/sweep.hpp"

using namespace qdd;
using std::numbers::pi;

namespace {

int g_failures = 0;

void report(int idx, const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%2d] %-52s %s (%s)\n", idx, name.c_str(), pass ? "PASS" : "FAIL",
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::shared_ptr<const Grid> slab(int N) {
  return std::make_shared<const Grid>(build_grid(1, Geometry::Slab, N, 1.0));
}

std::shared_ptr<const Grid> radial(int d, int N) {
  return std::make_shared<const Grid>(build_grid(d, Geometry::Radial, N, 1.0));
}

Trajectory run_traj(const std::shared_ptr<const Grid>& g, const std::string& preset,
                    double sigma, double T) {
  const DensityState n0 = DensityState::from_density(g, initial_profile(*g, preset));
  ModelParams params;
  params.eps = 0.1;
  params.sigma = sigma;
  StepConfig cfg;
  cfg.tau = 1e-4;
  EvolveConfig ecfg;
  ecfg.T = T;
  return evolve(g, n0, params, cfg, ecfg);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace

int main() {
  std::setvbuf(stdout, nullptr, _IONBF, 0);

  // shared trajectory set: {slab, radial d=2} x sigma in {0, 4pi, -4pi}, T = 0.1
  std::vector<Trajectory> trajs;
  std::vector<const Trajectory*> all_for_positivity;
  bool traj_set_ok = true;
  std::string traj_err;
  try {
    for (auto g : {slab(201), radial(2, 201)})
      for (double sigma : {0.0, 4.0 * pi, -4.0 * pi})
        trajs.push_back(run_traj(g, "cos-bump", sigma, 0.1));
  } catch (const std::exception& e) {
    traj_set_ok = false;
    traj_err = e.what();
  }

  // 1: mass conservation at every step of the default trajectory set
  {
    double worst = 0.0;
    for (const Trajectory& t : trajs) {
      all_for_positivity.push_back(&t);
      for (const StepReport& r : t.reports) worst = std::max(worst, std::abs(r.mass - 1.0));
    }
    const bool pass = traj_set_ok && worst <= 1e-9;
    report(1, "mass conservation on the default trajectory set", pass,
           traj_set_ok ? "max |mass - 1| = " + fmt(worst) : traj_err);
  }

  // 2: strict positivity everywhere, including data with boundary zeros
  {
    bool pass = traj_set_ok;
    double worst_min = 1.0;
    std::string err;
    try {
      const Trajectory floor_traj = run_traj(slab(201), "edge-zeros", 0.0, 0.01);
      for (const Trajectory* t : all_for_positivity)
        for (const StepReport& r : t->reports) worst_min = std::min(worst_min, r.min_n);
      for (const StepReport& r : floor_traj.reports) worst_min = std::min(worst_min, r.min_n);
      pass = pass && worst_min > 0.0;
    } catch (const std::exception& e) {
      pass = false;
      err = e.what();
    }
    report(2, "strict positivity (floor path exercised)", pass,
           err.empty() ? "min over all steps = " + fmt(worst_min) : err);
  }

  // 3: diffusion-only entropy decay, plus the Hessian-strengthened per-step bound
  {
    bool pass = traj_set_ok;
    double worst_plain = -1e300, worst_strong = -1e300;
    if (traj_set_ok) {
      const Trajectory& slab_dlss = trajs[0];
      const Trajectory& radial_dlss = trajs[3];
      double prev = 0.0;
      for (const Trajectory* t : {&slab_dlss, &radial_dlss}) {
        prev = entropy(*t->snapshots.front().rho.grid, t->snapshots.front().density());
        for (const StepReport& r : t->reports) {
          worst_plain = std::max(worst_plain, r.entropy - prev);
          prev = r.entropy;
        }
      }
      const double gamma = eval_c0_gamma(2, 0.05).second;
      const double eps = 0.1, tau = 1e-4;
      prev = entropy(*radial_dlss.snapshots.front().rho.grid,
                     radial_dlss.snapshots.front().density());
      for (const StepReport& r : radial_dlss.reports) {
        worst_strong = std::max(
            worst_strong, r.entropy + 2.0 * gamma * eps * eps * tau * r.hessian_l2 - prev);
        prev = r.entropy;
      }
      pass = worst_plain <= 1e-9 && worst_strong <= 1e-8;
    }
    report(3, "entropy decay with Hessian-strengthened bound", pass,
           "worst plain = " + fmt(worst_plain) + ", worst strengthened = " + fmt(worst_strong));
  }

  // 4: strong attractive coupling stays globally bounded to T = 0.2
  {
    bool pass = false;
    std::string detail;
    try {
      auto g = radial(2, 201);
      const Trajectory t = run_traj(g, "gauss-concentrated", 16.0 * pi, 0.2);
      double supE = 0.0, env = 0.0;
      const double E0 =
          entropy(*t.snapshots.front().rho.grid, t.snapshots.front().density());
      for (std::size_t k = 0; k < t.reports.size(); ++k) {
        supE = std::max(supE, t.reports[k].entropy);
        if (E0 > 0.0 && t.reports[k].entropy > 0.0)
          env = std::max(env, std::log(t.reports[k].entropy / E0) / t.times[k]);
      }
      pass = std::isfinite(supE) && t.times.back() >= 0.2 - 1e-9;
      detail = "sup E = " + fmt(supE) + ", growth-envelope rate = " + fmt(env);
    } catch (const std::exception& e) {
      detail = e.what();
    }
    report(4, "global boundedness at strong attraction (T = 0.2)", pass, detail);
  }

  // 5: the eps = 0 companion model shows the completion/collapse dichotomy
  {
    bool pass = false;
    std::string detail;
    try {
      auto g = radial(2, 201);
      std::vector<double> n0 = initial_profile(*g, "gauss-concentrated");
      const double m = integrate(*g, n0);
      for (double& v : n0) v /= m;
      const auto [t_sub, rep_sub] = evolve_classical(g, n0, 4.0 * pi, 1e-4, 0.2);
      const auto [t_sup, rep_sup] = evolve_classical(g, n0, 16.0 * pi, 1e-4, 0.2);
      pass = !rep_sub.blew_up && t_sub.times.back() >= 0.2 - 1e-9 && rep_sup.blew_up &&
             rep_sup.t_detect < 0.2;
      detail = "subcritical t_end = " + fmt(t_sub.times.back()) +
               ", supercritical detect at t = " + fmt(rep_sup.t_detect) + " (" +
               to_string(rep_sup.trigger) + ")";
    } catch (const std::exception& e) {
      detail = e.what();
    }
    report(5, "classical dichotomy: completion vs detected collapse", pass, detail);
  }

  // 6: Hessian coercivity inequality over the random suite plus adversarial search
  {
    bool pass = true;
    double worst = 1e300;
    int violations = 0;
    for (int d : {2, 3}) {
      for (double delta : {0.01, 0.05}) {
        GammaSuiteConfig cfg;
        cfg.trials = 200;
        const InequalityReport rep = run_gamma_suite(radial(d, 201), delta, 90210, cfg);
        violations += rep.violations;
        worst = std::min(worst, rep.worst_margin);
      }
    }
    const double adv = gamma_adversarial_probe(radial(2, 201), 0.05, 1337, 50, 10000);
    worst = std::min(worst, adv);
    pass = violations == 0 && worst >= -1e-8;
    report(6, "coercivity suite: zero violations incl. adversarial", pass,
           "violations = " + std::to_string(violations) + ", worst margin/K = " + fmt(worst));
  }

  // 7: telescoping boundary integral vanishes under refinement; split identity holds
  {
    double min_rate = 1e300;
    for (int d : {1, 2}) {
      std::vector<double> vals;
      for (int N : {101, 201, 401}) {
        auto g = d == 1 ? slab(N) : radial(2, N);
        SampleSpec spec;
        spec.seed = 42;
        vals.push_back(std::abs(dummy_integral(sample_test_function(g, spec))));
      }
      min_rate = std::min(
          min_rate, 0.5 * (std::log2(vals[0] / vals[1]) + std::log2(vals[1] / vals[2])));
    }
    double max_res = 0.0;
    for (int d : {2, 3}) {
      auto g = radial(d, 201);
      for (int t = 0; t < 50; ++t) {
        SampleSpec spec;
        spec.seed = 500 + t;
        max_res = std::max(
            max_res, hessian_decomposition(sample_test_function(g, spec)).identity_residual);
      }
    }
    const bool pass = min_rate >= 1.8 && max_res <= 1e-10;
    report(7, "boundary integral refinement and Hessian split identity", pass,
           "min rate = " + fmt(min_rate) + ", max identity residual = " + fmt(max_res));
  }

  // 8: elliptic solvers against closed forms over N = 51, 101, 201
  {
    double poisson_err = 0.0;
    std::vector<double> neumann_errs;
    for (int N : {51, 101, 201}) {
      auto g = slab(N);
      ScalarField one(g, Bc::None, 1.0);
      const ScalarField phi = solve_poisson_dirichlet(one);
      for (int i = 0; i < N; ++i) {
        const double x = g->nodes[i];
        poisson_err = std::max(poisson_err,
                               std::abs(phi.values[i] - 0.5 * x * (1.0 - x)));
      }
      ScalarField a(g, Bc::None, 1.0), f(g, Bc::None);
      for (int i = 0; i < N; ++i) f.values[i] = std::cos(pi * g->nodes[i]);
      const ScalarField F = solve_weighted_neumann(a, f, 0.0);
      double e = 0.0;
      for (int i = 0; i < N; ++i)
        e = std::max(e, std::abs(F.values[i] - std::cos(pi * g->nodes[i]) / (pi * pi)));
      neumann_errs.push_back(e);
    }
    const double rate = 0.5 * (std::log2(neumann_errs[0] / neumann_errs[1]) +
                               std::log2(neumann_errs[1] / neumann_errs[2]));
    // the quadratic closed form is in the stencil kernel: reproduced exactly
    const bool pass = poisson_err <= 1e-10 && rate >= 1.8 && rate <= 2.2;
    report(8, "elliptic solvers vs closed forms (exact / 2nd order)", pass,
           "poisson sup err = " + fmt(poisson_err) + ", neumann rate = " + fmt(rate));
  }

  // 9: time-step refinement study converges at first order
  {
    bool pass = false;
    std::string detail;
    try {
      auto g = slab(201);
      const DensityState n0 = DensityState::from_density(g, initial_profile(*g, "cos-bump"));
      ModelParams params;
      params.eps = 0.1;
      params.sigma = 0.0;
      const TauRefinementTable table = tau_refinement_study(g, n0, params, 4e-4, 4, 4e-3);
      bool monotone = table.complete;
      for (std::size_t j = 1; j < table.distances.size(); ++j)
        monotone = monotone && table.distances[j] < table.distances[j - 1];
      pass = monotone && table.fitted_order >= 0.8;
      detail = "fitted order = " + fmt(table.fitted_order);
    } catch (const std::exception& e) {
      detail = e.what();
    }
    report(9, "time-step refinement: monotone, first order", pass, detail);
  }

  // 10: interpolation-constant suite is stable under doubling and holds out of sample
  {
    const N2SuiteResult res = run_n2_suite(radial(2, 151), 0.3, 0.3, 20240501, 1000, 500);
    const bool pass = res.stability_change < 0.10 && res.holdout_violations == 0;
    report(10, "empirical constant: stability and holdout check", pass,
           "drift = " + fmt(100.0 * res.stability_change) +
               "%, holdout violations = " + std::to_string(res.holdout_violations) +
               ", certified = " + fmt(res.certified_constant));
  }

  std::printf("%d/10 criteria passed\n", 10 - g_failures);
  return g_failures;
}
