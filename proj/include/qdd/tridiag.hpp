#pragma once

#include <cstddef>
#include <vector>

#include "qdd/errors.hpp"

namespace qdd {

// Tridiagonal system a_i x_{i-1} + b_i x_i + c_i x_{i+1} = r_i, solved by the
// Thomas algorithm. The systems assembled in this project are diagonally
// dominant (M-matrices or shifted Laplacians), so no pivoting is needed.
struct Tridiag {
  std::vector<double> lower;  // a_i, lower[0] unused
  std::vector<double> diag;   // b_i
  std::vector<double> upper;  // c_i, upper[n-1] unused

  explicit Tridiag(std::size_t n) : lower(n, 0.0), diag(n, 0.0), upper(n, 0.0) {}

  std::size_t size() const { return diag.size(); }

  std::vector<double> solve(const std::vector<double>& rhs) const {
    const std::size_t n = size();
    std::vector<double> cp(n), dp(n), x(n);
    double denom = diag[0];
    if (denom == 0.0) throw Error("tridiag: zero pivot at row 0");
    cp[0] = upper[0] / denom;
    dp[0] = rhs[0] / denom;
    for (std::size_t i = 1; i < n; ++i) {
      denom = diag[i] - lower[i] * cp[i - 1];
      if (denom == 0.0) throw Error("tridiag: zero pivot");
      cp[i] = upper[i] / denom;
      dp[i] = (rhs[i] - lower[i] * dp[i - 1]) / denom;
    }
    x[n - 1] = dp[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) x[i] = dp[i] - cp[i] * x[i + 1];
    return x;
  }
};

}  // namespace qdd
