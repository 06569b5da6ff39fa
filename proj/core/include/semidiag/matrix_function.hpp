#pragma once

#include <functional>
#include <string>
#include <vector>

#include "semidiag/mexpr.hpp"
#include "semidiag/types.hpp"

namespace semidiag {

/// Finite-difference step used for all coefficient derivatives:
/// eps^(1/5) * (|x| + 1).
double fd_step(cplx x);

/// Fourth-order central difference of f at x along the complex direction
/// `dir` (unit modulus). For analytic f this is the complex derivative.
Mat fd_derivative(const std::function<Mat(cplx)>& f, cplx x, cplx dir = 1.0);
cplx fd_derivative(const std::function<cplx(cplx)>& f, cplx x, cplx dir = 1.0);

/// Map (x, h) -> n x n complex matrix.
class MatrixFunction {
 public:
  using Fn = std::function<Mat(cplx, double)>;

  MatrixFunction() = default;

  static MatrixFunction from_expressions(const std::vector<std::vector<mexpr::Expression>>& rows);
  static MatrixFunction from_callable(std::string name, int n, Fn fn, mexpr::Domain domain = {});
  static MatrixFunction constant(const Mat& m);

  Mat operator()(cplx x, double h) const { return fn_(x, h); }
  Mat derivative(cplx x, double h, cplx dir = 1.0) const;

  int dim() const { return n_; }
  const std::string& name() const { return name_; }
  const mexpr::Domain& domain() const { return domain_; }
  bool valid() const { return static_cast<bool>(fn_); }

 private:
  Fn fn_;
  int n_ = 0;
  std::string name_;
  mexpr::Domain domain_;
};

}  // namespace semidiag
