#pragma once

#include <stdexcept>
#include <string>

namespace qdd {

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct GridError : Error {
  using Error::Error;
};

struct CoefficientNotPositive : Error {
  using Error::Error;
};

// The discrete compatibility condition |∫f| <= tol of the pure Neumann
// problem failed; usually indicates quadrature drift upstream.
struct SolvabilityViolation : Error {
  using Error::Error;
};

struct PicardDiverged : Error {
  using Error::Error;
};

struct StepFailed : Error {
  using Error::Error;
};

struct DeltaTooLarge : Error {
  using Error::Error;
};

struct DegenerateRatio : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

}  // namespace qdd
