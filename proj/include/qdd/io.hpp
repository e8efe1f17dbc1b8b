#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <string>
#include <vector>

#include "json.hpp"
#include "qdd/classical.hpp"
#include "qdd/errors.hpp"
#include "qdd/grid.hpp"
#include "qdd/inequality_lab.hpp"
#include "qdd/scheme.hpp"

namespace qdd {

using ordered_json = nlohmann::ordered_json;

inline std::ofstream open_for_write(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot open for writing: " + path.string());
  out << std::setprecision(17);
  return out;
}

// Field snapshot: header `x,value` (or `r,value`), 17 significant digits.
inline void write_field_csv(const std::filesystem::path& path, const ScalarField& f) {
  std::ofstream out = open_for_write(path);
  const Grid& g = *f.grid;
  out << (g.geometry == Geometry::Slab ? "x" : "r") << ",value\n";
  for (int i = 0; i < g.N; ++i) out << g.nodes[i] << "," << f.values[i] << "\n";
}

inline void write_snapshot_csv(const std::filesystem::path& path, const Grid& g,
                               const std::vector<double>& n, const ScalarField& F,
                               const ScalarField& Phi) {
  std::ofstream out = open_for_write(path);
  out << (g.geometry == Geometry::Slab ? "x" : "r") << ",n,F,Phi\n";
  for (int i = 0; i < g.N; ++i)
    out << g.nodes[i] << "," << n[i] << "," << F.values[i] << "," << Phi.values[i] << "\n";
}

inline void write_timeseries_csv(const std::filesystem::path& path, const Trajectory& traj) {
  std::ofstream out = open_for_write(path);
  out << "t,tau_eff,mass,entropy,fisher,hessian_l2,min_n,max_n,picard_iters\n";
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    const StepReport& r = traj.reports[k];
    out << traj.times[k] << "," << r.tau_eff << "," << r.mass << "," << r.entropy << ","
        << r.fisher << "," << r.hessian_l2 << "," << r.min_n << "," << r.max_n << ","
        << r.picard_iterations << "\n";
  }
}

// Classical runs share the trajectory schema; a terminal `blowup` row is
// appended when the detector fired.
inline void write_classical_timeseries_csv(const std::filesystem::path& path,
                                           const ClassicalTrajectory& traj,
                                           const BlowupReport& rep) {
  std::ofstream out = open_for_write(path);
  out << "t,tau_eff,mass,entropy,fisher,hessian_l2,min_n,max_n,picard_iters\n";
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    out << traj.times[k] << "," << traj.tau_eff[k] << "," << traj.mass[k] << ","
        << traj.entropy_series[k] << ",0,0," << traj.min_n[k] << "," << traj.max_n[k]
        << ",0\n";
  }
  if (rep.blew_up)
    out << "blowup," << to_string(rep.trigger) << "," << rep.t_detect << ",,,,,,\n";
}

inline ordered_json solve_report_json(const SolveReport& r) {
  return ordered_json{{"iterations", r.iterations},
                      {"final_residual", r.final_residual},
                      {"converged", r.converged}};
}

inline ordered_json entropy_report_json(const EntropyReport& r) {
  return ordered_json{{"entropy", r.entropy}, {"fisher", r.fisher},   {"mass", r.mass},
                      {"hessian_l2", r.hessian_l2}, {"min_n", r.min_n}, {"max_n", r.max_n}};
}

inline ordered_json inequality_report_json(const InequalityReport& r) {
  ordered_json j;
  j["inequality"] = r.inequality;
  j["d"] = r.d;
  if (r.deltas.size() == 1)
    j["delta"] = r.deltas[0];
  else
    j["deltas"] = r.deltas;
  j["trials"] = r.trials;
  j["violations"] = r.violations;
  j["worst_margin"] = r.worst_margin;
  j["empirical_constant"] = r.empirical_constant;
  j["seed"] = r.seed;
  return j;
}

inline ordered_json blowup_report_json(const BlowupReport& r) {
  ordered_json j;
  j["blew_up"] = r.blew_up;
  j["trigger"] = to_string(r.trigger);
  if (r.blew_up) j["t_detect"] = r.t_detect;
  return j;
}

}  // namespace qdd
