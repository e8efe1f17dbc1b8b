#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <memory>
#include <numbers>

#include "qdd/sweep.hpp"

using namespace qdd;
using std::numbers::pi;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("qdd_test_" + tag);
  fs::remove_all(p);
  return p;
}

SweepSpec small_spec(const fs::path& out) {
  SweepSpec spec;
  spec.sigmas = {0.0, 4.0 * pi};
  spec.epsilons = {0.0, 0.1};
  spec.d = 1;
  spec.geometry = Geometry::Slab;
  spec.N = 101;
  spec.tau = 1e-3;
  spec.T = 5e-3;
  spec.out_dir = out;
  spec.parallelism = 2;
  return spec;
}

ordered_json records_without_wall_ms(const std::vector<RunRecord>& recs) {
  ordered_json arr = ordered_json::array();
  for (const RunRecord& r : recs) {
    ordered_json j = run_record_json(r);
    j.erase("wall_ms");
    arr.push_back(j);
  }
  return arr;
}

}  // namespace

TEST_CASE("sweep: 2x2 grid of cells completes and persists") {
  const fs::path out = fresh_dir("sweep_basic");
  const SweepSpec spec = small_spec(out);
  const std::vector<RunRecord> recs = run_sweep(spec);

  REQUIRE(recs.size() == 4);
  for (std::size_t i = 1; i < recs.size(); ++i) CHECK(recs[i - 1].id < recs[i].id);
  for (const RunRecord& r : recs) {
    INFO(r.id << ": " << r.reason);
    CHECK(r.outcome == RunOutcome::Completed);
    CHECK(r.t_end == Catch::Approx(spec.T).epsilon(1e-10));
    CHECK(r.final_mass == Catch::Approx(1.0).margin(1e-8));
    CHECK(fs::exists(out / r.id / "timeseries.csv"));
  }

  std::ifstream jl(out / "runs.jsonl");
  REQUIRE(jl.good());
  int lines = 0;
  std::string line;
  while (std::getline(jl, line))
    if (!line.empty()) ++lines;
  CHECK(lines == 4);
  fs::remove_all(out);
}

TEST_CASE("sweep: rerun reproduces every record modulo wall time") {
  const fs::path out_a = fresh_dir("sweep_a");
  const fs::path out_b = fresh_dir("sweep_b");
  SweepSpec spec = small_spec(out_a);
  const auto recs_a = run_sweep(spec);
  spec.out_dir = out_b;
  spec.parallelism = 1;  // serial vs parallel must not change the records
  const auto recs_b = run_sweep(spec);
  CHECK(records_without_wall_ms(recs_a) == records_without_wall_ms(recs_b));
  fs::remove_all(out_a);
  fs::remove_all(out_b);
}

TEST_CASE("sweep: configuration validation") {
  SweepSpec spec = small_spec(fresh_dir("sweep_bad"));
  spec.sigmas.clear();
  CHECK_THROWS_AS(run_sweep(spec), ConfigError);
  spec = small_spec(fresh_dir("sweep_bad"));
  spec.epsilons.clear();
  CHECK_THROWS_AS(run_sweep(spec), ConfigError);
  spec = small_spec(fresh_dir("sweep_bad"));
  spec.tau = 0.0;
  CHECK_THROWS_AS(run_sweep(spec), ConfigError);
}

TEST_CASE("sweep: blowup cell is recorded, not thrown") {
  const fs::path out = fresh_dir("sweep_blowup");
  SweepSpec spec;
  spec.sigmas = {16.0 * pi};
  spec.epsilons = {0.0};
  spec.d = 2;
  spec.geometry = Geometry::Radial;
  spec.N = 151;
  spec.tau = 1e-4;
  spec.T = 0.05;
  spec.preset = "gauss-concentrated";
  spec.out_dir = out;
  spec.parallelism = 1;
  const auto recs = run_sweep(spec);
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].outcome == RunOutcome::BlowupDetected);
  CHECK_FALSE(recs[0].reason.empty());
  CHECK(recs[0].t_end < spec.T);
  fs::remove_all(out);
}

TEST_CASE("tau refinement: first-order contraction of terminal states") {
  auto g = std::make_shared<const Grid>(build_grid(1, Geometry::Slab, 151, 1.0));
  const DensityState n0 = DensityState::from_density(g, initial_profile(*g, "cos-bump"));
  ModelParams params;
  params.sigma = 0.0;

  CHECK_THROWS_AS(tau_refinement_study(g, n0, params, 4e-4, 2, 1e-3), ConfigError);

  const TauRefinementTable table = tau_refinement_study(g, n0, params, 4e-4, 4, 4e-3);
  REQUIRE(table.complete);
  REQUIRE(table.distances.size() == 3);
  for (std::size_t j = 1; j < table.distances.size(); ++j)
    CHECK(table.distances[j] < table.distances[j - 1]);
  CHECK(table.fitted_order == Catch::Approx(1.0).margin(0.3));
}
