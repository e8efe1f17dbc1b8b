#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "qdd/io.hpp"
#include "qdd/sweep.hpp"

namespace fs = std::filesystem;
using qdd::ordered_json;

namespace {

#ifndef QDD_DATA_DIR
#define QDD_DATA_DIR "data"
#endif

bool g_quiet = false;

void info(const std::string& msg) {
  if (!g_quiet) std::cerr << msg << "\n";
}

// Overlay a user config onto the defaults; any key absent from the defaults
// is rejected so typos cannot silently fall back.
ordered_json merge_checked(const ordered_json& defaults, const ordered_json& user,
                           const std::string& path) {
  if (!user.is_object()) throw qdd::ConfigError("config: expected an object at " + path);
  ordered_json out = defaults;
  for (const auto& [key, value] : user.items()) {
    const std::string here = path.empty() ? key : path + "." + key;
    if (!defaults.contains(key)) throw qdd::ConfigError("config: unknown key " + here);
    if (defaults[key].is_object())
      out[key] = merge_checked(defaults[key], value, here);
    else
      out[key] = value;
  }
  return out;
}

ordered_json load_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw qdd::ConfigError("cannot read config file: " + path.string());
  try {
    return ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw qdd::ConfigError("config parse error in " + path.string() + ": " + e.what());
  }
}

qdd::Geometry parse_geometry(const std::string& s) {
  if (s == "slab") return qdd::Geometry::Slab;
  if (s == "radial") return qdd::Geometry::Radial;
  throw qdd::ConfigError("grid.geometry must be \"slab\" or \"radial\", got \"" + s + "\"");
}

ordered_json default_run_config() {
  return ordered_json{
      {"model", {{"eps", 0.1}, {"sigma", 0.0}, {"preset", "cos-bump"}}},
      {"grid", {{"d", 1}, {"geometry", "slab"}, {"N", 201}, {"L", 1.0}}},
      {"scheme",
       {{"tau", 1e-4},
        {"picard_max", 200},
        {"picard_tol", 1e-10},
        {"relaxation", 1.0},
        {"anderson_window", 20},
        {"continuation", {0.25, 0.5, 0.75, 1.0}},
        {"T", 0.1},
        {"max_halvings", 10}}},
      {"io", {{"out_dir", "run_out"}, {"snapshot_every", 0}}},
      {"seed", 0}};
}

ordered_json default_sweep_config() {
  return ordered_json{
      {"sigmas", ordered_json::array()},
      {"epsilons", ordered_json::array()},
      {"grid", {{"d", 1}, {"geometry", "slab"}, {"N", 201}, {"L", 1.0}}},
      {"tau", 1e-4},
      {"T", 0.1},
      {"preset", "cos-bump"},
      {"seed", 0},
      {"out_dir", "sweep_out"},
      {"parallelism", 0},
      {"snapshot_every", 0},
      {"detector",
       {{"max_density_cap", 0.0}, {"tau_min_factor", 1e-3}, {"clip_deficit_limit", 0.1}}}};
}

int cmd_run(const fs::path& config_path, const std::string& out_override) {
  ordered_json cfg = default_run_config();
  if (!config_path.empty()) cfg = merge_checked(cfg, load_json(config_path), "");
  if (!out_override.empty()) cfg["io"]["out_dir"] = out_override;

  const double eps = cfg["model"]["eps"].get<double>();
  if (eps <= 0.0)
    throw qdd::ConfigError("model.eps must be > 0 (the classical model runs via sweep/compare)");

  auto grid = std::make_shared<const qdd::Grid>(
      qdd::build_grid(cfg["grid"]["d"].get<int>(),
                      parse_geometry(cfg["grid"]["geometry"].get<std::string>()),
                      cfg["grid"]["N"].get<int>(), cfg["grid"]["L"].get<double>()));
  const qdd::DensityState n0 = qdd::DensityState::from_density(
      grid, qdd::initial_profile(*grid, cfg["model"]["preset"].get<std::string>()));

  qdd::ModelParams params;
  params.eps = eps;
  params.sigma = cfg["model"]["sigma"].get<double>();

  qdd::StepConfig scfg;
  scfg.tau = cfg["scheme"]["tau"].get<double>();
  scfg.picard_max = cfg["scheme"]["picard_max"].get<int>();
  scfg.picard_tol = cfg["scheme"]["picard_tol"].get<double>();
  scfg.relaxation = cfg["scheme"]["relaxation"].get<double>();
  scfg.anderson_window = cfg["scheme"]["anderson_window"].get<int>();
  scfg.continuation = cfg["scheme"]["continuation"].get<std::vector<double>>();

  qdd::EvolveConfig ecfg;
  ecfg.T = cfg["scheme"]["T"].get<double>();
  ecfg.snapshot_every = cfg["io"]["snapshot_every"].get<int>();
  ecfg.max_halvings = cfg["scheme"]["max_halvings"].get<int>();

  const fs::path out_dir = cfg["io"]["out_dir"].get<std::string>();
  info("run: evolving to T = " + std::to_string(ecfg.T));
  const qdd::Trajectory traj = qdd::evolve(grid, n0, params, scfg, ecfg);

  qdd::write_timeseries_csv(out_dir / "timeseries.csv", traj);
  for (std::size_t s = 0; s < traj.snapshots.size(); ++s)
    qdd::write_snapshot_csv(
        out_dir / "snapshots" / ("snapshot_" + std::to_string(s) + ".csv"), *grid,
        traj.snapshots[s].density(), traj.snapshot_F[s], traj.snapshot_Phi[s]);

  const qdd::StepReport& last = traj.reports.back();
  ordered_json summary;
  summary["config"] = cfg;
  summary["t_end"] = traj.times.back();
  summary["steps"] = traj.times.size();
  summary["final_mass"] = last.mass;
  summary["final_entropy"] = last.entropy;
  summary["final_min_n"] = last.min_n;
  summary["final_max_n"] = last.max_n;
  qdd::open_for_write(out_dir / "summary.json") << summary.dump(2) << "\n";
  std::cout << summary.dump(2) << "\n";
  return 0;
}

int cmd_sweep(const fs::path& config_path, const std::string& out_override) {
  if (config_path.empty()) throw qdd::ConfigError("sweep: --config is required");
  const ordered_json cfg = merge_checked(default_sweep_config(), load_json(config_path), "");

  qdd::SweepSpec spec;
  spec.sigmas = cfg["sigmas"].get<std::vector<double>>();
  spec.epsilons = cfg["epsilons"].get<std::vector<double>>();
  spec.d = cfg["grid"]["d"].get<int>();
  spec.geometry = parse_geometry(cfg["grid"]["geometry"].get<std::string>());
  spec.N = cfg["grid"]["N"].get<int>();
  spec.L = cfg["grid"]["L"].get<double>();
  spec.tau = cfg["tau"].get<double>();
  spec.T = cfg["T"].get<double>();
  spec.preset = cfg["preset"].get<std::string>();
  spec.seed = cfg["seed"].get<std::uint64_t>();
  spec.out_dir = out_override.empty() ? cfg["out_dir"].get<std::string>() : out_override;
  spec.parallelism = cfg["parallelism"].get<int>();
  spec.snapshot_every = cfg["snapshot_every"].get<int>();
  spec.detector.max_density_cap = cfg["detector"]["max_density_cap"].get<double>();
  spec.detector.tau_min_factor = cfg["detector"]["tau_min_factor"].get<double>();
  spec.detector.clip_deficit_limit = cfg["detector"]["clip_deficit_limit"].get<double>();

  const std::vector<qdd::RunRecord> recs = qdd::run_sweep(spec);
  bool any_failed = false;
  for (const qdd::RunRecord& r : recs) {
    info(r.id + ": " + qdd::to_string(r.outcome));
    if (r.outcome == qdd::RunOutcome::StepFailed_) any_failed = true;
  }
  std::cout << "{\"runs\": " << recs.size() << ", \"out_dir\": \""
            << spec.out_dir.generic_string() << "\"}\n";
  return any_failed ? 2 : 0;
}

struct SuiteOutcome {
  ordered_json report;
  bool ok = false;
};

SuiteOutcome verify_gamma(std::uint64_t seed, int trials) {
  SuiteOutcome out;
  out.ok = true;
  out.report = ordered_json::array();
  for (int d : {2, 3}) {
    for (double delta : {0.01, 0.05}) {
      auto g = std::make_shared<const qdd::Grid>(
          qdd::build_grid(d, qdd::Geometry::Radial, 201, 1.0));
      qdd::GammaSuiteConfig cfg;
      cfg.trials = trials;
      const qdd::InequalityReport rep = qdd::run_gamma_suite(g, delta, seed, cfg);
      out.report.push_back(qdd::inequality_report_json(rep));
      if (rep.violations != 0) out.ok = false;
    }
  }
  return out;
}

SuiteOutcome verify_n2(std::uint64_t seed, int trials) {
  auto g =
      std::make_shared<const qdd::Grid>(qdd::build_grid(2, qdd::Geometry::Radial, 151, 1.0));
  const qdd::N2SuiteResult res =
      qdd::run_n2_suite(g, 0.3, 0.3, seed, trials, std::max(1, trials / 2));
  SuiteOutcome out;
  out.report = qdd::inequality_report_json(res.report);
  out.report["certified_constant"] = res.certified_constant;
  out.report["stability_change"] = res.stability_change;
  out.ok = res.holdout_violations == 0 && res.stability_change < 0.10;
  return out;
}

SuiteOutcome verify_gns(std::uint64_t seed, int trials) {
  auto g = std::make_shared<const qdd::Grid>(qdd::build_grid(1, qdd::Geometry::Slab, 201, 1.0));
  double sup_inf = 0.0, sup_grad4 = 0.0;
  for (int t = 0; t < trials; ++t) {
    qdd::SampleSpec spec;
    spec.seed = seed + static_cast<std::uint64_t>(t) * 1000003ULL;
    const qdd::ScalarField u = qdd::sample_test_function(g, spec);
    sup_inf = std::max(sup_inf, qdd::check_gagliardo_instance(u, qdd::GnsInstance::SupNorm));
    sup_grad4 =
        std::max(sup_grad4, qdd::check_gagliardo_instance(u, qdd::GnsInstance::GradL4));
  }
  SuiteOutcome out;
  out.report = ordered_json{{"inequality", "gns"},
                            {"trials", trials},
                            {"sup_norm_constant", sup_inf},
                            {"grad_l4_constant", sup_grad4},
                            {"seed", seed}};
  out.ok = std::isfinite(sup_inf) && std::isfinite(sup_grad4);
  return out;
}

SuiteOutcome verify_dummy(std::uint64_t seed) {
  SuiteOutcome out;
  out.ok = true;
  out.report = ordered_json::array();
  for (int d : {1, 2}) {
    std::vector<double> vals;
    for (int N : {101, 201, 401}) {
      auto g = std::make_shared<const qdd::Grid>(qdd::build_grid(
          d, d == 1 ? qdd::Geometry::Slab : qdd::Geometry::Radial, N, 1.0));
      qdd::SampleSpec spec;
      spec.seed = seed;
      const qdd::ScalarField rho = qdd::sample_test_function(g, spec);
      vals.push_back(std::abs(qdd::dummy_integral(rho)));
    }
    const double rate =
        0.5 * (std::log2(vals[0] / vals[1]) + std::log2(vals[1] / vals[2]));
    out.report.push_back(ordered_json{{"inequality", "dummy"},
                                      {"d", d},
                                      {"values", vals},
                                      {"rate", rate},
                                      {"seed", seed}});
    if (!(rate >= 1.8)) out.ok = false;
  }
  return out;
}

SuiteOutcome verify_logsob(std::uint64_t seed, int trials) {
  auto g = std::make_shared<const qdd::Grid>(qdd::build_grid(1, qdd::Geometry::Slab, 201, 1.0));
  const qdd::InequalityReport rep = qdd::run_logsob_suite(g, seed, trials);
  SuiteOutcome out;
  out.report = qdd::inequality_report_json(rep);
  out.ok = rep.violations == 0;
  return out;
}

int cmd_verify(const std::string& suite, std::uint64_t seed, int trials) {
  std::vector<std::pair<std::string, SuiteOutcome>> results;
  auto dispatch = [&](const std::string& name) {
    if (name == "gamma") return verify_gamma(seed, trials);
    if (name == "n2") return verify_n2(seed, trials);
    if (name == "gns") return verify_gns(seed, trials);
    if (name == "dummy") return verify_dummy(seed);
    if (name == "logsob") return verify_logsob(seed, trials);
    throw qdd::ConfigError("verify: unknown suite \"" + name +
                           "\" (expected gamma, n2, gns, dummy, logsob, all)");
  };
  if (suite == "all") {
    for (const std::string name : {"gamma", "n2", "gns", "dummy", "logsob"})
      results.emplace_back(name, dispatch(name));
  } else {
    results.emplace_back(suite, dispatch(suite));
  }

  ordered_json output;
  bool all_ok = true;
  for (const auto& [name, res] : results) {
    output[name] = res.report;
    output[name + "_pass"] = res.ok;
    all_ok = all_ok && res.ok;
  }
  std::cout << output.dump(2) << "\n";
  return all_ok ? 0 : 2;
}

int cmd_compare(const std::string& preset, const fs::path& data_dir,
                const std::string& out_override) {
  const ordered_json presets = load_json(data_dir / "compare_presets.json");
  if (!presets.contains(preset)) {
    std::string known;
    for (const auto& [k, v] : presets.items()) known += (known.empty() ? "" : ", ") + k;
    throw qdd::ConfigError("compare: unknown preset \"" + preset + "\" (known: " + known + ")");
  }
  const ordered_json& p = presets[preset];
  auto grid = std::make_shared<const qdd::Grid>(
      qdd::build_grid(p["grid"]["d"].get<int>(),
                      parse_geometry(p["grid"]["geometry"].get<std::string>()),
                      p["grid"]["N"].get<int>(), p["grid"]["L"].get<double>()));
  const qdd::DensityState n0 = qdd::DensityState::from_density(
      grid, qdd::initial_profile(*grid, p["profile"].get<std::string>()));
  const double tau = p["tau"].get<double>();
  const double T = p["T"].get<double>();

  ordered_json output;
  bool pattern_holds = true;
  for (const ordered_json& cell : p["cells"]) {
    const double sigma = cell["sigma"].get<double>();
    const double eps = cell["eps"].get<double>();
    std::string outcome;
    if (eps == 0.0) {
      const auto [traj, rep] = qdd::evolve_classical(grid, n0.density(), sigma, tau, T);
      outcome = rep.blew_up ? "BlowupDetected" : "Completed";
    } else {
      qdd::ModelParams params;
      params.eps = eps;
      params.sigma = sigma;
      qdd::StepConfig scfg;
      scfg.tau = tau;
      qdd::EvolveConfig ecfg;
      ecfg.T = T;
      try {
        qdd::evolve(grid, n0, params, scfg, ecfg);
        outcome = "Completed";
      } catch (const qdd::Error&) {
        outcome = "StepFailed";
      }
    }
    const std::string name = cell["name"].get<std::string>();
    info("compare " + preset + " [" + name + "]: " + outcome);
    output[name + "_outcome"] = outcome;
    if (outcome != cell["expect"].get<std::string>()) pattern_holds = false;
  }
  output["pattern_holds"] = pattern_holds;
  std::cout << output.dump(2) << "\n";
  if (!out_override.empty())
    qdd::open_for_write(fs::path(out_override) / ("compare_" + preset + ".json"))
        << output.dump(2) << "\n";
  return pattern_holds ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fourth-order quantum drift-diffusion solver and verification suite"};
  app.require_subcommand(1);

  std::string config_path, out_dir, suite = "all", preset;
  std::string data_dir = QDD_DATA_DIR;
  std::uint64_t seed = 0;
  int trials = 200;
  app.add_flag("--quiet", g_quiet, "suppress progress messages on stderr");

  CLI::App* run = app.add_subcommand("run", "evolve one configured trajectory");
  run->add_option("--config", config_path, "JSON config file (defaults via print-config)");
  run->add_option("--out", out_dir, "override io.out_dir");

  CLI::App* sweep = app.add_subcommand("sweep", "execute a (sigma, eps) batch");
  sweep->add_option("--config", config_path, "JSON sweep spec")->required();
  sweep->add_option("--out", out_dir, "override out_dir");

  CLI::App* verify = app.add_subcommand("verify", "run an inequality suite");
  verify->add_option("suite", suite, "gamma | n2 | gns | dummy | logsob | all");
  verify->add_option("--seed", seed, "master seed");
  verify->add_option("--trials", trials, "samples per suite");

  CLI::App* compare = app.add_subcommand("compare", "paired classical/quantum experiment");
  compare->add_option("preset", preset, "regularization | dichotomy-8pi")->required();
  compare->add_option("--data", data_dir, "directory holding compare_presets.json");
  compare->add_option("--out", out_dir, "also write the comparison JSON here");

  CLI::App* print_cfg = app.add_subcommand("print-config", "print all run config defaults");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 3;  // usage errors map to 3, --help to 0
  }

  try {
    if (*run) return cmd_run(config_path, out_dir);
    if (*sweep) return cmd_sweep(config_path, out_dir);
    if (*verify) return cmd_verify(suite, seed, trials);
    if (*compare) return cmd_compare(preset, data_dir, out_dir);
    if (*print_cfg) {
      std::cout << default_run_config().dump(2) << "\n";
      return 0;
    }
  } catch (const qdd::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 3;
}
