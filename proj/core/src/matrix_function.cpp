#include "semidiag/matrix_function.hpp"

#include <cmath>
#include <limits>

#include "semidiag/errors.hpp"

namespace semidiag {

double fd_step(cplx x) {
  static const double base = std::pow(std::numeric_limits<double>::epsilon(), 0.2);
  return base * (std::abs(x) + 1.0);
}

Mat fd_derivative(const std::function<Mat(cplx)>& f, cplx x, cplx dir) {
  cplx d = fd_step(x) * dir;
  return (-f(x + 2.0 * d) + 8.0 * f(x + d) - 8.0 * f(x - d) + f(x - 2.0 * d)) / (12.0 * d);
}

cplx fd_derivative(const std::function<cplx(cplx)>& f, cplx x, cplx dir) {
  cplx d = fd_step(x) * dir;
  return (-f(x + 2.0 * d) + 8.0 * f(x + d) - 8.0 * f(x - d) + f(x - 2.0 * d)) / (12.0 * d);
}

MatrixFunction MatrixFunction::from_expressions(const std::vector<std::vector<mexpr::Expression>>& rows) {
  const int n = static_cast<int>(rows.size());
  if (n == 0) throw InputError("matrix needs at least one row");
  MatrixFunction mf;
  std::string name = "[";
  for (int r = 0; r < n; ++r) {
    if (static_cast<int>(rows[r].size()) != n)
      throw InputError("row " + std::to_string(r) + " has " + std::to_string(rows[r].size()) +
                       " entries, expected " + std::to_string(n));
    name += r ? "; " : "";
    for (int c = 0; c < n; ++c) {
      name += (c ? ", " : "") + rows[r][c].source();
      for (const auto& cut : rows[r][c].domain().branch_cuts) mf.domain_.branch_cuts.push_back(cut);
    }
  }
  name += "]";
  mf.n_ = n;
  mf.name_ = name;
  mf.fn_ = [rows, n](cplx x, double h) {
    Mat m(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) m(r, c) = rows[r][c].is_zero() ? cplx(0.0) : rows[r][c].eval(x, h);
    return m;
  };
  return mf;
}

MatrixFunction MatrixFunction::from_callable(std::string name, int n, Fn fn, mexpr::Domain domain) {
  MatrixFunction mf;
  mf.fn_ = std::move(fn);
  mf.n_ = n;
  mf.name_ = std::move(name);
  mf.domain_ = std::move(domain);
  return mf;
}

MatrixFunction MatrixFunction::constant(const Mat& m) {
  if (m.rows() != m.cols()) throw InputError("constant matrix must be square");
  return from_callable("constant", static_cast<int>(m.rows()), [m](cplx, double) { return m; });
}

Mat MatrixFunction::derivative(cplx x, double h, cplx dir) const {
  return fd_derivative([&](cplx y) { return fn_(y, h); }, x, dir);
}

}  // namespace semidiag
