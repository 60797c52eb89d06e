#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace shrinklab {

// Thomas algorithm for a tridiagonal system. `lower[i]` multiplies x[i-1] in
// row i, `upper[i]` multiplies x[i+1]. No pivoting; the systems assembled in
// this project are diagonally dominant.
inline std::vector<double> solve_tridiagonal(std::vector<double> lower,
                                             std::vector<double> diag,
                                             std::vector<double> upper,
                                             std::vector<double> rhs) {
  const std::size_t n = diag.size();
  if (n == 0) return {};
  for (std::size_t i = 1; i < n; ++i) {
    const double m = lower[i] / diag[i - 1];
    diag[i] -= m * upper[i - 1];
    rhs[i] -= m * rhs[i - 1];
  }
  std::vector<double> x(n);
  x[n - 1] = rhs[n - 1] / diag[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) {
    x[i] = (rhs[i] - upper[i] * x[i + 1]) / diag[i];
  }
  return x;
}

// Cyclic tridiagonal solve via the Sherman-Morrison correction. `corner` is
// the coupling between the first and last unknowns (row 0 column n-1 and row
// n-1 column 0, both equal for the symmetric stencils used here).
inline std::vector<double> solve_cyclic_tridiagonal(const std::vector<double>& lower,
                                                    const std::vector<double>& diag,
                                                    const std::vector<double>& upper,
                                                    double cornerLow, double cornerUp,
                                                    const std::vector<double>& rhs) {
  const std::size_t n = diag.size();
  if (n < 3) throw std::invalid_argument("cyclic tridiagonal solve needs n >= 3");
  const double gamma = -diag[0];
  std::vector<double> d = diag;
  d[0] -= gamma;
  d[n - 1] -= cornerLow * cornerUp / gamma;
  std::vector<double> x = solve_tridiagonal(lower, d, upper, rhs);
  std::vector<double> u(n, 0.0);
  u[0] = gamma;
  u[n - 1] = cornerLow;
  std::vector<double> z = solve_tridiagonal(lower, d, upper, u);
  const double num = x[0] + cornerUp * x[n - 1] / gamma;
  const double den = 1.0 + z[0] + cornerUp * z[n - 1] / gamma;
  for (std::size_t i = 0; i < n; ++i) x[i] -= num / den * z[i];
  return x;
}

} // namespace shrinklab
