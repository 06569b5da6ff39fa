#include <gtest/gtest.h>

#include <cmath>

#include "semidiag/counterex.hpp"
#include "semidiag/grid.hpp"

using namespace semidiag;
using counterex::TriangularSystem;

namespace {

cplx simpson(const std::function<cplx(double)>& f, double a, double b, int n) {
  const double dx = (b - a) / n;
  cplx s = f(a) + f(b);
  for (int k = 1; k < n; ++k) s += (k % 2 ? 4.0 : 2.0) * f(a + k * dx);
  return s * dx / 3.0;
}

TriangularSystem constant_theta(double L) {
  TriangularSystem ts;
  ts.theta = Symbol::constant(1.0);
  ts.L = L;
  return ts;
}

}  // namespace

TEST(Counterex, CriterionRatioMatchesBruteForce) {
  const auto ts = constant_theta(1.0);
  const double h = 0.2, x = 0.7;
  const cplx integral =
      simpson([&](double y) { return std::exp(-(y * y + cplx(0, 2) * y) / h); }, -x, x, 200000);
  const double ref = std::abs(integral) / (h * std::exp(-x * x / h));
  EXPECT_NEAR(counterex::criterion_ratio(ts, x, h), ref, 1e-9 * ref);
}

TEST(Counterex, AlphaSolvesTheScalarEquation) {
  const auto ts = constant_theta(0.9);
  const double h = 0.1;
  counterex::AlphaOptions opt;
  opt.points_per_unit = 400;
  const auto s = counterex::alpha_solution(ts, h, std::nullopt, opt);
  const int n = static_cast<int>(s.x.size());
  ASSERT_GT(n, 100);
  const double dx = s.x[1] - s.x[0];
  const auto d = grid_derivative(s.alpha, dx);
  double worst = 0.0, scale = 0.0;
  for (int k = 2; k < n - 2; ++k) {
    const cplx res = h * d[k] - 2.0 * (s.x[k] + cplx(0, 1)) * s.alpha[k] - 1.0;
    worst = std::max(worst, std::abs(res));
    scale = std::max(scale, std::abs(s.alpha[k]));
  }
  EXPECT_LT(worst, 1e-5 * std::max(1.0, scale));
}

TEST(Counterex, AlphaAtZeroMatchesDirectIntegral) {
  const auto ts = constant_theta(0.9);
  const double h = 0.15;
  const auto s = counterex::alpha_solution(ts, h);
  const cplx ref = -simpson([&](double y) { return std::exp(-(y * y + cplx(0, 2) * y) / h); }, 0.0, ts.L, 200000) / h;
  EXPECT_LT(std::abs(s.alpha0 - ref), 1e-9 * std::abs(ref));
}

TEST(Counterex, ShortIntervalBoundedLongIntervalGrows) {
  const std::vector<double> hg{0.1, 0.05, 0.025, 0.0125};
  const auto bounded = counterex::boundedness_certificate(constant_theta(0.9), hg);
  EXPECT_TRUE(bounded.bounded);
  EXPECT_TRUE(bounded.sides_agree);
  const auto grows = counterex::boundedness_certificate(constant_theta(1.5), hg);
  EXPECT_FALSE(grows.bounded);
  EXPECT_TRUE(grows.sides_agree);
  // sup over x in (0, 1.5] of x^2 - 1 = 1.25.
  EXPECT_NEAR(grows.growth, 1.25, 0.2);
}

TEST(Counterex, TriangularCertificateIsSmall) {
  EXPECT_LT(counterex::triangular_certificate(constant_theta(0.9), 0.1), 1e-8);
}

TEST(Counterex, SingularResonanceCoefficients) {
  const std::vector<cplx> phi{1.0, 2.0, 3.0};
  const double h = 0.3;
  const auto r = counterex::singular_resonance(phi, h);
  ASSERT_FALSE(r.resonant);
  for (int j = 1; j <= 3; ++j) EXPECT_LT(std::abs(r.alpha_coeffs[j] - phi[j - 1] / (j * h - 1.0)), 1e-14);
  const auto res = counterex::singular_resonance({0.0, 0.0, 1.0}, 1.0 / 3.0);
  EXPECT_TRUE(res.resonant);
  EXPECT_EQ(res.index, 3);
  EXPECT_FALSE(counterex::singular_resonance({1.0, 0.0, 0.0}, 1.0 / 3.0).resonant);
}

TEST(Counterex, ScalarResonance) {
  const auto r = counterex::scalar_resonance({1.0, 1.0, 1.0}, 1.0, 0.5);
  EXPECT_TRUE(r.resonant);
  EXPECT_EQ(r.index, 2);
}

TEST(Counterex, TaylorCoefficientsOfExp) {
  const auto c = counterex::taylor_coefficients([](cplx z) { return std::exp(z); }, 8, 0.5);
  double fact = 1.0;
  for (int k = 0; k < 8; ++k) {
    if (k > 0) fact *= k;
    EXPECT_LT(std::abs(c[k] - 1.0 / fact), 1e-13) << k;
  }
}
