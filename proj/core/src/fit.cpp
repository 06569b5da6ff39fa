#include "semidiag/fit.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "semidiag/errors.hpp"

namespace semidiag::fit {

LinearFit least_squares(const std::vector<std::vector<double>>& x, const std::vector<double>& y) {
  const int n = static_cast<int>(y.size());
  if (n == 0 || static_cast<int>(x.size()) != n) throw InputError("least_squares: size mismatch");
  const int p = static_cast<int>(x[0].size());
  if (n < p) throw InputError("least_squares: fewer observations than regressors");
  Eigen::MatrixXd a(n, p);
  Eigen::VectorXd b(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) a(i, j) = x[i][j];
    b(i) = y[i];
  }
  Eigen::VectorXd c = a.colPivHouseholderQr().solve(b);
  Eigen::VectorXd r = a * c - b;
  LinearFit f;
  f.coef.assign(c.data(), c.data() + p);
  f.max_abs_residual = r.cwiseAbs().maxCoeff();
  f.rms_residual = std::sqrt(r.squaredNorm() / n);
  return f;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<std::vector<double>> rows;
  std::vector<double> ly;
  for (size_t i = 0; i < x.size(); ++i) {
    rows.push_back({1.0, std::log(x[i])});
    ly.push_back(std::log(y[i]));
  }
  return least_squares(rows, ly).coef[1];
}

double log_linear_slope(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<std::vector<double>> rows;
  std::vector<double> ly;
  for (size_t i = 0; i < x.size(); ++i) {
    rows.push_back({1.0, x[i]});
    ly.push_back(std::log(y[i]));
  }
  return least_squares(rows, ly).coef[1];
}

}  // namespace semidiag::fit
