#include <gtest/gtest.h>

#include <cmath>

#include "semidiag/builtins.hpp"
#include "semidiag/kato.hpp"

using namespace semidiag;

// For a real rotation R(x) diag(l1, l2) R(x)^T the eigenvector R(x) e1 moves
// orthogonally to itself, so Kato transport reproduces R(x) exactly.
TEST(Kato, RotationFamilyTransportIsTheRotation) {
  const double rate = 0.7;
  const kato::ProjectorField field(builtins::rotation_family(1.0, -1.0, rate), 0.1,
                                   spectral::GroupingRule::sign_of_real_part());
  const Grid grid = Grid::uniform(0.0, 2.0, 100.0);
  Mat t0 = Mat::Identity(2, 2);
  const auto tb = kato::transport(field, grid, t0);
  EXPECT_LT(tb.max_invariance_error, 1e-8);
  for (int k = 0; k < grid.size(); k += 20) {
    const double th = rate * grid.point(k).real();
    Mat r(2, 2);
    r << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
    EXPECT_LT((tb.t_hat[k] - r).norm(), 1e-8) << "x = " << grid.point(k).real();
  }
}

TEST(Kato, InvarianceAlongComplexGrid) {
  const kato::ProjectorField field(builtins::rotation_family(cplx(1.0, 0.5), -1.0, 1.3), 0.1,
                                   spectral::GroupingRule::sign_of_real_part());
  const auto tb = kato::transport(field, Grid::uniform(cplx(0.0, 0.0), cplx(1.5, 0.3), 200.0));
  EXPECT_LT(tb.max_invariance_error, 1e-8);
  for (size_t k = 0; k < tb.t_hat.size(); k += 50) {
    const Mat& t = tb.t_hat[k];
    EXPECT_LT((tb.pi1[k] * t.leftCols(1) - t.leftCols(1)).norm(), 1e-8);
  }
}
