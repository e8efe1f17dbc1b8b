#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <future>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "qdd/classical.hpp"
#include "qdd/io.hpp"
#include "qdd/presets.hpp"
#include "qdd/scheme.hpp"

namespace qdd {

enum class RunOutcome { Completed, BlowupDetected, StepFailed_ };

inline std::string to_string(RunOutcome o) {
  switch (o) {
    case RunOutcome::Completed: return "Completed";
    case RunOutcome::BlowupDetected: return "BlowupDetected";
    case RunOutcome::StepFailed_: return "StepFailed";
  }
  return "StepFailed";
}

struct SweepSpec {
  std::vector<double> sigmas;
  std::vector<double> epsilons;  // 0 routes to the classical model
  int d = 1;
  Geometry geometry = Geometry::Slab;
  int N = 201;
  double L = 1.0;
  double tau = 1e-4;
  double T = 0.1;
  std::string preset = "cos-bump";
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = "sweep_out";
  int parallelism = 0;  // 0: hardware_concurrency
  int snapshot_every = 0;
  DetectorConfig detector;

  void validate() const {
    if (sigmas.empty()) throw ConfigError("SweepSpec: sigma list must be nonempty");
    if (epsilons.empty()) throw ConfigError("SweepSpec: epsilon list must be nonempty");
    if (tau <= 0.0 || T <= 0.0) throw ConfigError("SweepSpec: tau and T must be positive");
  }
};

struct RunRecord {
  std::string id;
  double sigma = 0.0;
  double eps = 0.0;
  RunOutcome outcome = RunOutcome::Completed;
  std::string reason;
  double t_end = 0.0;
  double final_mass = 0.0;
  double final_entropy = 0.0;
  double final_max_n = 0.0;
  double wall_ms = 0.0;
};

namespace detail {

inline std::string format_param(double v) {
  std::ostringstream os;
  os << v;
  std::string s = os.str();
  for (char& c : s)
    if (c == '.' || c == '-' || c == '+') c = (c == '.') ? 'p' : 'm';
  return s;
}

inline std::string run_id(const SweepSpec& spec, double sigma, double eps) {
  std::ostringstream os;
  os << "sig" << format_param(sigma) << "_eps" << format_param(eps) << "_d" << spec.d << "_"
     << (spec.geometry == Geometry::Slab ? "slab" : "radial") << "_N" << spec.N << "_tau"
     << format_param(spec.tau);
  return os.str();
}

inline RunRecord execute_cell(const SweepSpec& spec, double sigma, double eps) {
  RunRecord rec;
  rec.id = run_id(spec, sigma, eps);
  rec.sigma = sigma;
  rec.eps = eps;
  const auto t_start = std::chrono::steady_clock::now();
  const std::filesystem::path run_dir = spec.out_dir / rec.id;

  try {
    auto grid = std::make_shared<const Grid>(build_grid(spec.d, spec.geometry, spec.N, spec.L));
    const std::vector<double> n0_raw = initial_profile(*grid, spec.preset);
    const DensityState n0 = DensityState::from_density(grid, n0_raw);

    if (eps == 0.0) {
      auto [traj, rep] =
          evolve_classical(grid, n0.density(), sigma, spec.tau, spec.T, spec.detector,
                           spec.snapshot_every);
      write_classical_timeseries_csv(run_dir / "timeseries.csv", traj, rep);
      for (std::size_t s = 0; s < traj.snapshots.size(); ++s) {
        ScalarField zero(grid, Bc::None);
        write_snapshot_csv(run_dir / "snapshots" /
                               ("t" + format_param(traj.snapshot_times[s]) + ".csv"),
                           *grid, traj.snapshots[s], zero, zero);
      }
      rec.outcome = rep.blew_up ? RunOutcome::BlowupDetected : RunOutcome::Completed;
      if (rep.blew_up) rec.reason = to_string(rep.trigger);
      rec.t_end = traj.times.empty() ? 0.0 : traj.times.back();
      rec.final_mass = traj.mass.empty() ? 1.0 : traj.mass.back();
      rec.final_entropy = traj.entropy_series.empty() ? 0.0 : traj.entropy_series.back();
      rec.final_max_n = traj.max_n.empty() ? 0.0 : traj.max_n.back();
    } else {
      ModelParams params;
      params.eps = eps;
      params.sigma = sigma;
      StepConfig scfg;
      scfg.tau = spec.tau;
      EvolveConfig ecfg;
      ecfg.T = spec.T;
      ecfg.snapshot_every = spec.snapshot_every;
      const Trajectory traj = evolve(grid, n0, params, scfg, ecfg);
      write_timeseries_csv(run_dir / "timeseries.csv", traj);
      for (std::size_t s = 0; s < traj.snapshots.size(); ++s)
        write_snapshot_csv(run_dir / "snapshots" /
                               ("t" + format_param(traj.snapshot_times[s]) + ".csv"),
                           *grid, traj.snapshots[s].density(), traj.snapshot_F[s],
                           traj.snapshot_Phi[s]);
      rec.outcome = RunOutcome::Completed;
      rec.t_end = traj.times.back();
      const StepReport& last = traj.reports.back();
      rec.final_mass = last.mass;
      rec.final_entropy = last.entropy;
      rec.final_max_n = last.max_n;
    }
  } catch (const std::exception& e) {
    rec.outcome = RunOutcome::StepFailed_;
    rec.reason = e.what();
  }
  rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                          t_start)
                    .count();
  return rec;
}

}  // namespace detail

inline ordered_json run_record_json(const RunRecord& r) {
  ordered_json j;
  j["id"] = r.id;
  j["sigma"] = r.sigma;
  j["eps"] = r.eps;
  j["outcome"] = to_string(r.outcome);
  j["reason"] = r.reason;
  j["t_end"] = r.t_end;
  j["final_mass"] = r.final_mass;
  j["final_entropy"] = r.final_entropy;
  j["final_max_n"] = r.final_max_n;
  j["wall_ms"] = r.wall_ms;
  return j;
}

// Executes every (sigma, eps) cell, possibly in parallel; records are keyed
// and persisted by run id, so serial and parallel execution produce the
// same record set.
inline std::vector<RunRecord> run_sweep(const SweepSpec& spec) {
  spec.validate();
  std::vector<std::pair<double, double>> cells;
  for (double s : spec.sigmas)
    for (double e : spec.epsilons) cells.emplace_back(s, e);

  unsigned workers = spec.parallelism > 0 ? spec.parallelism
                                          : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, cells.size());

  std::vector<RunRecord> records(cells.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < cells.size(); ++i)
      records[i] = detail::execute_cell(spec, cells[i].first, cells[i].second);
  } else {
    std::vector<std::future<RunRecord>> futures;
    futures.reserve(cells.size());
    for (const auto& [s, e] : cells)
      futures.push_back(std::async(std::launch::async,
                                   [&spec, s = s, e = e] { return detail::execute_cell(spec, s, e); }));
    for (std::size_t i = 0; i < futures.size(); ++i) records[i] = futures[i].get();
  }
  std::sort(records.begin(), records.end(),
            [](const RunRecord& a, const RunRecord& b) { return a.id < b.id; });

  std::ofstream out = open_for_write(spec.out_dir / "runs.jsonl");
  for (const RunRecord& r : records) out << run_record_json(r).dump() << "\n";
  return records;
}

struct TauRefinementTable {
  std::vector<double> taus;
  std::vector<double> distances;  // L2 distance between consecutive levels at t = T
  double fitted_order = 0.0;
  bool complete = false;
};

// Runs evolve with tau0 / 2^j and reports pairwise L2-in-space distances of
// the terminal states, plus the Richardson-fitted order.
inline TauRefinementTable tau_refinement_study(const std::shared_ptr<const Grid>& grid,
                                               const DensityState& n0,
                                               const ModelParams& params, double tau0,
                                               int levels, double T) {
  if (levels < 3) throw ConfigError("tau_refinement_study: levels >= 3 required");
  TauRefinementTable table;
  std::vector<std::vector<double>> terminal;
  for (int j = 0; j < levels; ++j) {
    StepConfig cfg;
    cfg.tau = tau0 / std::pow(2.0, j);
    EvolveConfig ecfg;
    ecfg.T = T;
    table.taus.push_back(cfg.tau);
    try {
      const Trajectory traj = evolve(grid, n0, params, cfg, ecfg);
      terminal.push_back(traj.snapshots.back().density());
    } catch (const std::exception&) {
      return table;  // aborted with partial table
    }
  }
  for (int j = 0; j + 1 < levels; ++j) {
    std::vector<double> diff_sq(grid->N);
    for (int i = 0; i < grid->N; ++i) {
      const double d = terminal[j][i] - terminal[j + 1][i];
      diff_sq[i] = d * d;
    }
    table.distances.push_back(std::sqrt(integrate(*grid, diff_sq)));
  }
  double order_sum = 0.0;
  int order_count = 0;
  for (std::size_t j = 0; j + 1 < table.distances.size(); ++j) {
    if (table.distances[j + 1] > 0.0) {
      order_sum += std::log2(table.distances[j] / table.distances[j + 1]);
      ++order_count;
    }
  }
  table.fitted_order = order_count ? order_sum / order_count : 0.0;
  table.complete = true;
  return table;
}

}  // namespace qdd
