#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <memory>
#include <numbers>

#include "qdd/inequality_lab.hpp"

using namespace qdd;
using std::numbers::pi;

namespace {

std::shared_ptr<const Grid> slab(int N) {
  return std::make_shared<const Grid>(build_grid(1, Geometry::Slab, N, 1.0));
}

std::shared_ptr<const Grid> radial(int d, int N) {
  return std::make_shared<const Grid>(build_grid(d, Geometry::Radial, N, 1.0));
}

}  // namespace

TEST_CASE("c0/gamma closed forms") {
  {
    auto [c0, gamma] = eval_c0_gamma(2, 0.0);
    CHECK(c0 == Catch::Approx(0.75).margin(1e-14));
    CHECK(gamma == Catch::Approx(0.875).margin(1e-14));
  }
  {
    auto [c0, gamma] = eval_c0_gamma(2, 0.1);
    CHECK(c0 == Catch::Approx(0.6875).margin(1e-14));
    CHECK(gamma == Catch::Approx(0.84375).margin(1e-14));
  }
  {
    auto [c0, gamma] = eval_c0_gamma(3, 0.0);
    CHECK(c0 == Catch::Approx(0.6).margin(1e-14));  // the 3/(d+2) boundary
    CHECK(gamma == Catch::Approx((1.0 + 2.0 * 0.6) / 3.0).margin(1e-14));
  }
}

TEST_CASE("c0/gamma domain errors and monotonicity") {
  CHECK_THROWS_AS(eval_c0_gamma(1, 0.01), ConfigError);
  CHECK_THROWS_AS(eval_c0_gamma(2, -0.1), DeltaTooLarge);
  CHECK_THROWS_AS(eval_c0_gamma(2, 10.0), DeltaTooLarge);

  for (int d : {2, 3}) {
    double prev_gamma = std::numeric_limits<double>::infinity();
    for (double delta : {0.0, 0.01, 0.05, 0.1}) {
      auto [c0, gamma] = eval_c0_gamma(d, delta);
      CHECK(gamma < prev_gamma);
      prev_gamma = gamma;
      if (delta > 0.0) CHECK(c0 < 3.0 / (d + 2));
    }
  }
}

TEST_CASE("sampler: determinism and pinch bounds") {
  auto g = radial(2, 151);
  SampleSpec spec;
  spec.seed = 2024;
  const ScalarField a = sample_test_function(g, spec);
  const ScalarField b = sample_test_function(g, spec);
  for (int i = 0; i < g->N; ++i) CHECK(a.values[i] == b.values[i]);

  for (int t = 0; t < 50; ++t) {
    spec.seed = 100 + t;
    const ScalarField u = sample_test_function(g, spec);
    for (double v : u.values) {
      CHECK(v >= spec.k);
      CHECK(v <= 1.0 / spec.k);
    }
  }

  SampleSpec bad;
  bad.k = 1.5;
  CHECK_THROWS_AS(sample_test_function(g, bad), ConfigError);
}

TEST_CASE("sampler: flat shape collapses to the midpoint constant") {
  auto g = slab(51);
  const std::vector<double> flat(g->N, 0.3);
  const ScalarField u = detail::pinch_rescale(g, flat, 0.5, 0.05);
  const double mid = 0.5 * (0.5 + 2.0);
  for (double v : u.values) CHECK(v == Catch::Approx(mid).margin(1e-14));
}

TEST_CASE("sampler: boundary slope vanishes under refinement") {
  SampleSpec spec;
  spec.seed = 7;
  double slopes[2];
  int idx = 0;
  for (int N : {101, 201}) {
    auto g = slab(N);
    const ScalarField u = sample_test_function(g, spec);
    const std::vector<double> du = detail::first_derivative(*g, u.values, Bc::None);
    slopes[idx++] = std::max(std::abs(du.front()), std::abs(du.back()));
  }
  CHECK(std::log2(slopes[0] / slopes[1]) > 1.8);
}

TEST_CASE("gamma bound: constant field has zero margin") {
  auto g = radial(2, 101);
  ScalarField c(g, Bc::NeumannZero, 1.3);
  const GammaBoundEntry e = check_gamma_bound(c, 0.05);
  CHECK(e.J == Catch::Approx(0.0).margin(1e-12));
  CHECK(e.K == Catch::Approx(0.0).margin(1e-12));
  CHECK(e.margin == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("gamma bound: randomized suite has no violations") {
  for (int d : {2, 3}) {
    for (double delta : {0.01, 0.05}) {
      auto g = radial(d, 201);
      GammaSuiteConfig cfg;
      cfg.trials = 200;
      const InequalityReport rep = run_gamma_suite(g, delta, 12345, cfg);
      INFO("d=" << d << " delta=" << delta);
      CHECK(rep.violations == 0);
      CHECK(rep.worst_margin >= -1e-8);
    }
  }
}

TEST_CASE("gamma bound: adversarial amplitude search stays nonnegative") {
  auto g = radial(2, 151);
  const double min_rel = gamma_adversarial_probe(g, 0.05, 777, 15, 3000);
  CHECK(min_rel >= -1e-8);
}

TEST_CASE("gamma bound refuses slab grids") {
  auto g = slab(51);
  ScalarField u(g, Bc::NeumannZero, 1.0);
  CHECK_THROWS_AS(check_gamma_bound(u, 0.05), Error);
}

TEST_CASE("n2 inequality: unit constant on the unit slab") {
  auto g = slab(101);
  ScalarField one(g, Bc::NeumannZero, 1.0);
  CHECK(check_n2_inequality(one, 0.3, 0.3).required_c == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("n2 inequality: required constant is monotone in delta2") {
  auto g = radial(2, 151);
  SampleSpec spec;
  spec.seed = 99;
  const ScalarField u = sample_test_function(g, spec);
  const double c1 = check_n2_inequality(u, 0.3, 0.3).required_c;
  const double c2 = check_n2_inequality(u, 0.3, 0.6).required_c;
  CHECK(c2 <= c1);
}

TEST_CASE("n2 suite: stable constant, no holdout violations") {
  auto g = radial(2, 151);
  const N2SuiteResult res = run_n2_suite(g, 0.3, 0.3, 424242, 300, 150);
  CHECK(res.stability_change < 0.10);
  CHECK(res.holdout_violations == 0);
  CHECK(std::isfinite(res.certified_constant));
  CHECK(res.certified_constant >= res.constant_full);
  // aggregation is deterministic in the seed
  const N2SuiteResult rerun = run_n2_suite(g, 0.3, 0.3, 424242, 300, 150);
  CHECK(rerun.constant_full == res.constant_full);
  CHECK(rerun.certified_constant == res.certified_constant);
}

TEST_CASE("gagliardo instances: single cosine mode against closed-form norms") {
  auto g = slab(401);
  ScalarField u(g, Bc::NeumannZero);
  for (int i = 0; i < g->N; ++i) u.values[i] = std::cos(pi * g->nodes[i]);
  const double l2 = std::sqrt(0.5);
  const double w22 = std::sqrt(0.5 + 0.5 * pi * pi + 0.5 * pi * pi * pi * pi);

  const double sup_expected = 1.0 / (std::pow(w22, 0.25) * std::pow(l2, 0.75));
  CHECK(check_gagliardo_instance(u, GnsInstance::SupNorm) ==
        Catch::Approx(sup_expected).epsilon(1e-3));

  // ||grad u||_4^4 = pi^4 int sin^4 = (3/8) pi^4, theta = 5/8 for d = 1
  const double grad4 = std::pow(3.0 / 8.0, 0.25) * pi;
  const double grad_expected = grad4 / (std::pow(w22, 5.0 / 8.0) * std::pow(l2, 3.0 / 8.0));
  CHECK(check_gagliardo_instance(u, GnsInstance::GradL4) ==
        Catch::Approx(grad_expected).epsilon(1e-3));

  ScalarField c(g, Bc::NeumannZero, 2.0);
  CHECK_THROWS_AS(check_gagliardo_instance(c, GnsInstance::SupNorm), DegenerateRatio);
}

TEST_CASE("gagliardo suite: sup ratio stable under refinement") {
  SampleSpec spec;
  double sups[2];
  int idx = 0;
  for (int N : {101, 201}) {
    auto g = slab(N);
    double sup = 0.0;
    for (int t = 0; t < 100; ++t) {
      spec.seed = 5000 + t;
      const ScalarField u = sample_test_function(g, spec);
      sup = std::max(sup, check_gagliardo_instance(u, GnsInstance::SupNorm));
    }
    sups[idx++] = sup;
  }
  CHECK(sups[0] == Catch::Approx(sups[1]).epsilon(0.02));
}

TEST_CASE("log-Sobolev style suite records a violation-free constant") {
  auto g = slab(201);
  const InequalityReport rep = run_logsob_suite(g, 31337, 200);
  CHECK(rep.violations == 0);
  CHECK(std::isfinite(rep.empirical_constant));
  CHECK(rep.worst_margin >= -1e-12);
}

TEST_CASE("n2 exponent audit") {
  const N2ExponentAudit a = n2_exponent_audit(2, 0.5);
  CHECK(a.u2_exponent == Catch::Approx((16.0 - 2.5 * 2.0) / 4.0).margin(1e-14));
  CHECK(a.v14_exponent == Catch::Approx(1.5).margin(1e-14));
  CHECK(a.u12_exponent == Catch::Approx(0.5).margin(1e-14));
  CHECK_THROWS_AS(n2_exponent_audit(3, 0.2), ConfigError);  // below the d=3 window
  CHECK_THROWS_AS(n2_exponent_audit(2, 1.0), ConfigError);
  CHECK_THROWS_AS(n2_exponent_audit(4, 0.5), ConfigError);
}
