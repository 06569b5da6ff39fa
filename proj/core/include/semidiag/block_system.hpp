#pragma once

#include <vector>

#include "semidiag/grid.hpp"
#include "semidiag/matrix_function.hpp"
#include "semidiag/types.hpp"

namespace semidiag {

/// System h W' = diag(a11, a22) W + h^order [[0, theta1], [theta2, 0]] W,
/// sampled on a uniform grid at one value of h.
struct SampledBlockSystem {
  Grid grid;
  double h = 0.0;
  int order = 1;
  std::vector<Mat> a11, a22, theta1, theta2;

  int size() const { return static_cast<int>(a11.size()); }
  int m() const { return a11.empty() ? 0 : static_cast<int>(a11[0].rows()); }
  int n() const { return a11.empty() ? 0 : static_cast<int>(a11[0].rows() + a22[0].rows()); }

  Mat block_diagonal(int i) const;
  Mat full(int i) const;
  /// sup over the grid of the Frobenius norm of the off-diagonal coefficient
  /// h^order * [theta1; theta2].
  double offdiag_sup() const;
  double theta_sup() const;

  /// Reads a11, a22 from the diagonal blocks of f and theta from its
  /// off-diagonal blocks divided by h^order.
  static SampledBlockSystem from_matrix(const MatrixFunction& f, int m, int order, double h, const Grid& grid);
};

}  // namespace semidiag
