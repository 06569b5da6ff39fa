#pragma once

#include <vector>

namespace semidiag::fit {

struct LinearFit {
  std::vector<double> coef;
  double max_abs_residual = 0.0;
  double rms_residual = 0.0;
};

/// Least squares y ~ X coef. Each row of `x` is one observation.
LinearFit least_squares(const std::vector<std::vector<double>>& x, const std::vector<double>& y);

/// Slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Slope of log y against x (negative for decay).
double log_linear_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace semidiag::fit
