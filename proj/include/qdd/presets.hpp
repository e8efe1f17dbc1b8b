#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "qdd/errors.hpp"
#include "qdd/grid.hpp"

namespace qdd {

// Initial density profiles referenced by id from configs and sweep specs.
// All profiles are returned unnormalized; DensityState::from_density fixes
// the mass to one under the grid quadrature.
//
//   uniform          n = 1/|Omega|
//   cos-bump         1 + 0.1 cos(pi x/L) (slab) or 1 + 0.1 cos(pi (r/L)^2)
//   cos-bump-strong  amplitude 0.5 variant
//   gauss-wide       exp(-(r/(0.4 L))^2)
//   gauss-concentrated  exp(-(r/(0.1 L))^2)
//   edge-zeros       x(L-x)-shaped profile vanishing on the boundary
inline std::vector<double> initial_profile(const Grid& g, const std::string& id) {
  std::vector<double> n(g.N);
  const double L = g.L;
  if (id == "uniform") {
    for (int i = 0; i < g.N; ++i) n[i] = 1.0;
  } else if (id == "cos-bump" || id == "cos-bump-strong") {
    const double amp = (id == "cos-bump") ? 0.1 : 0.5;
    for (int i = 0; i < g.N; ++i) {
      const double x = g.nodes[i] / L;
      n[i] = (g.geometry == Geometry::Slab)
                 ? 1.0 + amp * std::cos(std::numbers::pi * x)
                 : 1.0 + amp * std::cos(std::numbers::pi * x * x);
    }
  } else if (id == "gauss-wide" || id == "gauss-concentrated") {
    const double width = (id == "gauss-wide") ? 0.4 * L : 0.1 * L;
    for (int i = 0; i < g.N; ++i) {
      const double r = g.nodes[i];
      n[i] = std::exp(-(r * r) / (width * width));
    }
  } else if (id == "edge-zeros") {
    for (int i = 0; i < g.N; ++i) {
      const double x = g.nodes[i];
      n[i] = x * (L - x);
    }
    if (g.geometry == Geometry::Radial) {
      // radially: vanish only at the outer boundary
      for (int i = 0; i < g.N; ++i) {
        const double r = g.nodes[i];
        n[i] = (L * L - r * r);
      }
    }
  } else {
    throw ConfigError("unknown initial profile preset: " + id);
  }
  return n;
}

inline const std::vector<std::string>& known_presets() {
  static const std::vector<std::string> ids = {
      "uniform", "cos-bump", "cos-bump-strong", "gauss-wide", "gauss-concentrated",
      "edge-zeros"};
  return ids;
}

}  // namespace qdd
