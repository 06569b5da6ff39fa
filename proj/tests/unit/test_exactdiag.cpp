#include <gtest/gtest.h>

#include <cmath>

#include "semidiag/builtins.hpp"
#include "semidiag/exactdiag.hpp"
#include "semidiag/symbol.hpp"

using namespace semidiag;
using exactdiag::AnalyticBlockSystem;

namespace {

// diag(1, -1) with a single coupling entry theta12(x).
AnalyticBlockSystem upper_coupling(std::function<cplx(cplx)> theta12, std::function<cplx(cplx)> a11 = nullptr) {
  auto a = MatrixFunction::from_callable("diag", 2, [a11](cplx x, double) {
    Mat m = Mat::Zero(2, 2);
    m(0, 0) = a11 ? a11(x) : cplx(1.0);
    m(1, 1) = -1.0;
    return m;
  });
  auto th = MatrixFunction::from_callable("theta", 2, [theta12](cplx x, double) {
    Mat m = Mat::Zero(2, 2);
    m(0, 1) = theta12(x);
    return m;
  });
  return {a, th, 1, 1};
}

}  // namespace

// h a' = 2 a + e^{-x} has the decaying solution -e^{-x} / (2 + h).
TEST(ExactInfinity, MatchesScalarClosedForm) {
  const auto sys = upper_coupling([](cplx x) { return std::exp(-x); });
  for (double h : {0.1, 0.05}) {
    exactdiag::WedgeParams w;
    w.R = 10.0;
    const auto c = exactdiag::solve_infinity(sys, h, w);
    double err = 0.0;
    int checked = 0;
    for (size_t k = 0; k < c.points.size(); ++k) {
      const cplx x = c.points[k];
      if (x.real() < 2.0 || x.real() > 10.0) continue;
      err = std::max(err, std::abs(c.alpha12[k](0, 0) + std::exp(-x) / (2.0 + h)));
      ++checked;
    }
    EXPECT_GT(checked, 10);
    EXPECT_LT(err, 1e-8) << "h = " << h;
    EXPECT_LT(c.certificate, 1e-8);
    EXPECT_NEAR(exactdiag::decay_rate(c, 2.0), 1.0, 0.05);
  }
}

// h a' = 2 a + e^{x} near 0: the bounded particular solution is e^x / (h - 2),
// and the boundary layer from the diamond tip is below e^{-2 M / h}.
TEST(ExactFinite, ConstantDiagonalAgreesWithParticularSolution) {
  const auto sys = upper_coupling([](cplx x) { return std::exp(x); });
  const double h = 0.02;
  const auto c = exactdiag::solve_finite(sys, 0.0, h, {});
  const cplx at0 = c.alpha12[c.nearest(0.0)](0, 0);
  EXPECT_LT(std::abs(at0 - 1.0 / (h - 2.0)), 1e-7);
  EXPECT_LT(c.certificate, 1e-8);
  EXPECT_LT(c.contraction, 0.9);
}

TEST(ExactFinite, DeviationScalesLikeH) {
  const auto sys = upper_coupling([](cplx) { return cplx(1.0); }, [](cplx x) { return 1.0 + x; });
  const auto a = exactdiag::solve_finite(sys, 0.0, 0.05, {});
  const auto b = exactdiag::solve_finite(sys, 0.0, 0.025, {});
  EXPECT_NEAR(std::log(a.deviation() / b.deviation()) / std::log(2.0), 1.0, 0.15);
  EXPECT_LT(exactdiag::contour_discrepancy(sys, 0.0, 0.05, {}), 1e-10);
}

// On the real line with coupling e^{ix} the bounded solution is e^{ix} / (i h - 2).
TEST(ExactGap, OscillatoryCouplingClosedForm) {
  const auto sys = upper_coupling([](cplx x) { return std::exp(cplx(0, 1) * x); });
  const double h = 0.05;
  const auto c = exactdiag::solve_gap_cr(sys, h, {});
  double err = 0.0;
  for (size_t k = 0; k < c.points.size(); ++k) {
    const cplx x = c.points[k];
    if (std::abs(x.real()) > 1.0) continue;
    err = std::max(err, std::abs(c.alpha12[k](0, 0) - std::exp(cplx(0, 1) * x) / (cplx(0, h) - 2.0)));
  }
  EXPECT_LT(err, 1e-8);
  EXPECT_LT(c.certificate, 1e-8);
}

TEST(ExactSingular, TaylorSeriesOracleOffResonance) {
  const std::vector<cplx> phi{1.0, 0.5, -0.25};
  const Symbol s = Symbol::custom("phi", [phi](cplx z, double) { return phi[0] + phi[1] * z + phi[2] * z * z; });
  const auto sys = AnalyticBlockSystem::from_matrix(builtins::singular_example(s), 1, 1);
  const double h = 0.045;
  const auto r = exactdiag::solve_singular(sys, h, {});
  ASSERT_FALSE(r.resonant);
  for (size_t k = 0; k < r.conj.points.size(); ++k) {
    const cplx z = r.conj.points[k];
    cplx series = 0.0;
    for (int j = 1; j <= 3; ++j) series += phi[j - 1] / (j * h - 1.0) * std::pow(z, j);
    EXPECT_LT(std::abs(r.conj.alpha12[k](0, 0) - series), 1e-8);
  }
  EXPECT_LT(std::abs(r.alpha12_at_origin(0, 0)), 1e-8);
}

TEST(ExactSingular, ResonanceFlaggedAtReciprocalIntegers) {
  const Symbol s = Symbol::custom("phi", [](cplx z, double) { return 1.0 + z; });
  const auto sys = AnalyticBlockSystem::from_matrix(builtins::singular_example(s), 1, 1);
  const auto r1 = exactdiag::solve_singular(sys, 0.5, {});
  EXPECT_TRUE(r1.resonant);
  EXPECT_EQ(r1.resonant_index, 2);
  const auto r2 = exactdiag::solve_singular(sys, 1.0 / 3.0, {});
  EXPECT_FALSE(r2.resonant);  // phi_2 = 0
}

TEST(ExactDiag, DirectionMaximizesRealPartMargin) {
  Vec ev(2);
  ev << cplx(0.0, 1.0), cplx(0.0, -1.0);
  const auto d = exactdiag::choose_direction(ev, 64);
  EXPECT_NEAR(d.margin, 1.0, 1e-2);
  EXPECT_NEAR(std::abs(d.gamma), 1.0, 1e-14);
}
