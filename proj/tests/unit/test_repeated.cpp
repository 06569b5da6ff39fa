#include <gtest/gtest.h>

#include "semidiag/builtins.hpp"
#include "semidiag/fit.hpp"
#include "semidiag/repeated.hpp"

using namespace semidiag;

namespace {

MatrixFunction xdep_system() {
  return MatrixFunction::from_callable("xdep", 2, [](cplx x, double h) {
    Mat m(2, 2);
    m << 1.0 + x * x, h, h, -1.0;
    return m;
  });
}

}  // namespace

// Independent check: conjugating the constant coefficient with the composed
// chain directly must leave off-diagonal entries of size h^target.
TEST(Repeated, ConstantSystemChainBlockDiagonalizes) {
  const double h = 0.05;
  Mat a(2, 2);
  a << 1.0, h, 0.5 * h, -1.0;
  const auto bs = SampledBlockSystem::from_matrix(builtins::constant(a), 1, 1, h, Grid::uniform(0.0, 1.0, 20.0));
  const auto run = repeated::run(bs, 4);
  ASSERT_EQ(run.chain.length(), 3);
  const Mat& t = run.chain.composed[5];
  const Mat c = t.inverse() * a * t;
  EXPECT_LT(std::abs(c(0, 1)), 5.0 * std::pow(h, 4));
  EXPECT_LT(std::abs(c(1, 0)), 5.0 * std::pow(h, 4));
  EXPECT_GT(std::abs(a(0, 1)), 100.0 * std::abs(c(0, 1)));
}

TEST(Repeated, OffDiagonalOrderRisesByOnePerStep) {
  auto make = [](double h) {
    return SampledBlockSystem::from_matrix(xdep_system(), 1, 1, h, Grid::uniform(0.0, 1.0, 400.0));
  };
  const auto st = repeated::study(make, {0.1, 0.05, 0.025, 0.0125}, 3);
  ASSERT_EQ(st.order_slopes.size(), 3u);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(st.order_slopes[k], k + 1, 0.15);
  // What is left after the last step is the order-3 remainder.
  EXPECT_NEAR(st.conjugation_slope, 3.0, 0.2);
}

TEST(Repeated, StepFactorIsCloseToIdentity) {
  const double h = 0.05;
  const auto bs = SampledBlockSystem::from_matrix(xdep_system(), 1, 1, h, Grid::uniform(0.0, 1.0, 200.0));
  const auto s = repeated::step(bs);
  EXPECT_EQ(s.next.order, 2);
  EXPECT_LT(s.factor_deviation, 2.0 * h);
  EXPECT_LT(s.max_newton_residual, 1e-10);
}
