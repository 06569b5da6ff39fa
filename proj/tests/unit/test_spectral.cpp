#include <gtest/gtest.h>

#include <random>

#include <unsupported/Eigen/KroneckerProduct>

#include "semidiag/errors.hpp"
#include "semidiag/spectral.hpp"

using namespace semidiag;

namespace {

Mat random_mat(std::mt19937_64& rng, int r, int c) {
  std::normal_distribution<double> g;
  Mat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = cplx(g(rng), g(rng));
  return m;
}

}  // namespace

class SplitProperty : public ::testing::TestWithParam<int> {};

TEST_P(SplitProperty, ProjectorsAreComplementaryAndCommute) {
  std::mt19937_64 rng(GetParam());
  const int n = 5;
  Vec d(n);
  d << 2.0, 1.5, cplx(0.7, 1.0), -1.0, cplx(-2.0, 0.5);
  const Mat v = Mat::Identity(n, n) + 0.3 * random_mat(rng, n, n);
  const Mat m = v * d.asDiagonal() * v.inverse();
  const auto s = spectral::spectral_split(m, spectral::GroupingRule::sign_of_real_part());
  const double scale = std::max(1.0, s.pi1.squaredNorm());
  EXPECT_EQ(s.size1, 3);
  EXPECT_LT((s.pi1 * s.pi1 - s.pi1).norm() / scale, 1e-12);
  EXPECT_LT((s.pi1 * s.pi2).norm() / scale, 1e-12);
  EXPECT_LT((s.pi1 + s.pi2 - Mat::Identity(n, n)).norm(), 1e-12);
  EXPECT_LT((m * s.pi1 - s.pi1 * m).norm() / (scale * m.norm()), 1e-12);
  // The group-1 projector annihilates eigenvectors of the other group.
  const Vec other = v.col(3);
  EXPECT_LT((s.pi1 * other).norm() / other.norm(), 1e-11);
}

INSTANTIATE_TEST_SUITE_P(Seeds, SplitProperty, ::testing::Range(1, 11));

TEST(Spectral, SylvesterMatchesKronecker) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 10; ++t) {
    const Mat a = random_mat(rng, 3, 3) + 4.0 * Mat::Identity(3, 3);
    const Mat b = random_mat(rng, 2, 2) - 4.0 * Mat::Identity(2, 2);
    const Mat c = random_mat(rng, 3, 2);
    const Mat x = spectral::solve_sylvester(a, b, c);
    const Mat k = Eigen::kroneckerProduct(Mat::Identity(2, 2), a) - Eigen::kroneckerProduct(b.transpose(), Mat::Identity(3, 3));
    const Vec ref = k.fullPivLu().solve(Eigen::Map<const Vec>(c.data(), c.size()));
    EXPECT_LT((Eigen::Map<const Vec>(x.data(), x.size()) - ref).norm(), 1e-10 * ref.norm());
  }
}

TEST(Spectral, SylvesterRejectsSharedEigenvalue) {
  Mat a(1, 1), b(1, 1), c(1, 1);
  a << 1.0;
  b << 1.0;
  c << 1.0;
  EXPECT_THROW(spectral::solve_sylvester(a, b, c), SingularOperator);
}

TEST(Spectral, DetectsJordanBlock) {
  Mat j(2, 2);
  j << 1.0, 1.0, 0.0, 1.0;
  EXPECT_TRUE(spectral::eig(j).defective);
  Mat d(2, 2);
  d << 1.0, 0.0, 0.0, 1.0;
  EXPECT_FALSE(spectral::eig(d).defective);
}

TEST(Spectral, EmptyGroupIsASeparationFailure) {
  Mat m(2, 2);
  m << 1.0, 0.3, 0.0, 2.0;
  EXPECT_THROW(spectral::spectral_split(m, spectral::GroupingRule::sign_of_real_part()), SeparationFailure);
}

TEST(Spectral, BlockSylvesterKroneckerAgreesWithApply) {
  std::mt19937_64 rng(11);
  spectral::BlockSylvester op{random_mat(rng, 2, 2) + 3.0 * Mat::Identity(2, 2),
                              random_mat(rng, 1, 1) - 3.0 * Mat::Identity(1, 1)};
  const Mat x12 = random_mat(rng, 2, 1), x21 = random_mat(rng, 1, 2);
  const auto [y12, y21] = op.apply(x12, x21);
  Vec v(4), w(4);
  v << Eigen::Map<const Vec>(x12.data(), 2), Eigen::Map<const Vec>(x21.data(), 2);
  w << Eigen::Map<const Vec>(y12.data(), 2), Eigen::Map<const Vec>(y21.data(), 2);
  EXPECT_LT((op.kronecker() * v - w).norm(), 1e-12);
  const auto [s12, s21] = op.solve(-y12, -y21);
  EXPECT_LT((s12 - x12).norm() + (s21 - x21).norm(), 1e-12);
}
