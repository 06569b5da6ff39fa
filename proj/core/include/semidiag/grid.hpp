#pragma once

#include <cmath>
#include <vector>

#include "semidiag/types.hpp"

namespace semidiag {

/// Uniform grid on the straight segment [start, end] in the complex plane.
struct Grid {
  cplx start{0.0};
  cplx end{1.0};
  int intervals = 1;

  static Grid uniform(cplx a, cplx b, double points_per_unit = 400.0) {
    int n = static_cast<int>(std::ceil(std::abs(b - a) * points_per_unit));
    return {a, b, n < 4 ? 4 : n};
  }

  int size() const { return intervals + 1; }
  cplx step() const { return (end - start) / static_cast<double>(intervals); }
  cplx point(int k) const { return start + step() * static_cast<double>(k); }
  std::vector<cplx> points() const {
    std::vector<cplx> p(size());
    for (int k = 0; k < size(); ++k) p[k] = point(k);
    return p;
  }
};

/// Fourth-order finite-difference derivative of samples on a uniform grid with
/// complex spacing dx: centered in the interior, one-sided at the ends.
template <class T>
std::vector<T> grid_derivative(const std::vector<T>& f, cplx dx) {
  const int n = static_cast<int>(f.size());
  std::vector<T> d(n);
  if (n < 5) {
    for (int i = 0; i < n; ++i) {
      int a = i == 0 ? 0 : i - 1, b = i == n - 1 ? n - 1 : i + 1;
      d[i] = (f[b] - f[a]) / (static_cast<double>(b - a) * dx);
    }
    return d;
  }
  for (int i = 0; i < n; ++i) {
    if (i >= 2 && i <= n - 3) {
      d[i] = (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / (12.0 * dx);
    } else if (i < 2) {
      // forward stencil on i..i+4
      const double c[2][5] = {{-25, 48, -36, 16, -3}, {-3, -10, 18, -6, 1}};
      int base = 0;
      const double* w = c[i];
      d[i] = (w[0] * f[base] + w[1] * f[base + 1] + w[2] * f[base + 2] + w[3] * f[base + 3] + w[4] * f[base + 4]) /
             (12.0 * dx);
    } else {
      const double c[2][5] = {{-1, 6, -18, 10, 3}, {3, -16, 36, -48, 25}};
      int base = n - 5;
      const double* w = c[i - (n - 2)];
      d[i] = (w[0] * f[base] + w[1] * f[base + 1] + w[2] * f[base + 2] + w[3] * f[base + 3] + w[4] * f[base + 4]) /
             (12.0 * dx);
    }
  }
  return d;
}

}  // namespace semidiag
