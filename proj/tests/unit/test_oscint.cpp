#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "semidiag/errors.hpp"
#include "semidiag/oscint.hpp"

using namespace semidiag;
using oscint::Contour;

namespace {

// Composite Simpson on [a, b] with n (even) intervals along the real axis.
cplx simpson(const std::function<cplx(double)>& f, double a, double b, int n) {
  const double dx = (b - a) / n;
  cplx s = f(a) + f(b);
  for (int k = 1; k < n; ++k) s += (k % 2 ? 4.0 : 2.0) * f(a + k * dx);
  return s * dx / 3.0;
}

cplx quad_phase(double y, double h) { return std::exp(-(y * y + cplx(0, 2) * y) / h); }

}  // namespace

TEST(Oscint, GaussianOracle) {
  for (double h : {0.2, 0.1, 0.05, 0.025}) {
    const auto q = oscint::saddle_deformed_quad(Symbol::constant(1.0), oscint::quadratic_phase(), 2.0, h);
    const double exact = std::sqrt(std::numbers::pi * h) * std::exp(-1.0 / h);
    EXPECT_LT(std::abs(q.value - exact) / exact, 1e-8) << "h = " << h;
  }
}

TEST(Oscint, StraightSegmentAgreesWithBruteForce) {
  const double h = 0.2;
  const Symbol a = Symbol::from_expression(mexpr::Expression::parse("1 + x*x"));
  const auto q = oscint::quad_contour(a, oscint::quadratic_phase(), Contour::segment(-1.0, 1.5), h);
  const cplx ref = simpson([&](double y) { return (1.0 + y * y) * quad_phase(y, h); }, -1.0, 1.5, 200000);
  EXPECT_LT(std::abs(q.value - ref), 1e-11);
}

// (y + i) e^{-(y^2 + 2iy)/h} is an exact derivative, so the integral over
// [-2, 2] is i h e^{-4/h} sin(4/h) and carries no saddle contribution.
TEST(Oscint, ShiftedAmplitudeIntegralIsEndpointOnly) {
  const Symbol a = Symbol::from_expression(mexpr::Expression::parse("x + i"));
  for (double h : {0.2, 0.1}) {
    const auto q = oscint::saddle_deformed_quad(a, oscint::quadratic_phase(), 2.0, h);
    const cplx exact = cplx(0, 1) * h * std::exp(-4.0 / h) * std::sin(4.0 / h);
    EXPECT_LT(std::abs(q.value - exact), 1e-6 * std::abs(exact) + 1e-14 * q.magnitude) << "h = " << h;
    EXPECT_LT(std::abs(oscint::stationary_phase_estimate(a, oscint::quadratic_phase(), -cplx(0, 1), h)), 1e-15);
  }
}

TEST(Oscint, StationaryPhaseLeadingTerm) {
  const double h = 0.05;
  const cplx est = oscint::stationary_phase_estimate(Symbol::constant(1.0), oscint::quadratic_phase(), -cplx(0, 1), h);
  EXPECT_LT(std::abs(est - std::sqrt(std::numbers::pi * h) * std::exp(-1.0 / h)), 1e-15);
}

TEST(Oscint, ContourIndependenceForEntireAmplitude) {
  const Symbol a = Symbol::from_expression(mexpr::Expression::parse("exp(x/3)"));
  const double h = 0.1;
  const auto p = oscint::quadratic_phase();
  // The real segment itself is cancellation-limited; both contours below
  // stay under the saddle level away from their endpoints.
  const auto rect = oscint::quad_contour(a, p, Contour::polyline({-2.0, cplx(-2.0, -1.0), cplx(2.0, -1.0), 2.0}), h);
  const auto bent = oscint::quad_contour(a, p, Contour::polyline({-2.0, cplx(-1.0, -1.5), cplx(1.0, -0.5), 2.0}), h);
  ASSERT_FALSE(rect.cancellation_limited);
  ASSERT_FALSE(bent.cancellation_limited);
  EXPECT_LT(std::abs(rect.value - bent.value), 1e-10 * std::abs(rect.value));
}

TEST(Oscint, CrHalflineMatchesBruteForce) {
  for (int r : {1, 3}) {
    const double h = 0.1;
    const cplx ref = simpson([&](double y) { return std::pow(y, r) * quad_phase(y, h); }, 0.0, 2.0, 400000);
    const cplx v = oscint::cr_halfline_integral(r, h, 2.0);
    EXPECT_LT(std::abs(v - ref), 1e-9 * std::abs(ref)) << "r = " << r;
  }
}

TEST(Oscint, GevreyHalflineMatchesBruteForce) {
  const double h = 0.2;
  auto f = [&](double y) { return y <= 0.0 ? cplx(0.0) : std::exp(-1.0 / y) * quad_phase(y, h); };
  const cplx ref = simpson(f, 0.0, 8.0, 800000);
  const cplx v = oscint::gevrey_halfline_integral(1.0, h);
  EXPECT_LT(std::abs(v - ref), 1e-7 * std::abs(ref));
}

TEST(Oscint, FitLawRecoversSyntheticParameters) {
  const double C = 1.7, p = 0.75, c = 2.0, s = 2.0;
  std::vector<double> hs{0.2, 0.1, 0.05, 0.025, 0.0125};
  std::vector<cplx> vals;
  for (double h : hs) vals.emplace_back(C * std::pow(h, p) * std::exp(-c * std::pow(h, -1.0 / s)));
  const auto fit = oscint::fit_law(hs, vals, s);
  EXPECT_NEAR(fit.C, C, 1e-8);
  EXPECT_NEAR(fit.p, p, 1e-8);
  EXPECT_NEAR(fit.c, c, 1e-8);
  EXPECT_NEAR(fit.stretch, 1.0 / s, 0.1);
  const auto pure = oscint::fit_law(hs, vals, std::numeric_limits<double>::infinity());
  EXPECT_GT(pure.residual, fit.residual);
}

TEST(Oscint, ContourValidation) {
  EXPECT_THROW(Contour::polyline({1.0}).validate(), InputError);
  EXPECT_THROW(Contour::polyline({0.0, 1.0, 1.0}).validate(), InputError);
  const Contour c = Contour::segment(0.0, 1.0).then(Contour::segment(1.0, cplx(1.0, 1.0)));
  EXPECT_NEAR(c.length(), 2.0, 1e-15);
  EXPECT_EQ(c.reversed().vertices.front(), cplx(1.0, 1.0));
}

TEST(Oscint, GevreyNormFiniteForTrigPolynomial) {
  const Symbol a = Symbol::from_expression(mexpr::Expression::parse("1 + sin(x)"));
  const auto n = oscint::gevrey_norm(a, 2.0 * std::numbers::pi, 2.0, 1.0, 8);
  EXPECT_FALSE(n.diverging);
  // Modes 0 and +-1: 1 + 2 * 4 e^{2} / 4.
  EXPECT_NEAR(n.value, std::sqrt(1.0 + 2.0 * 4.0 * std::exp(2.0) * 0.25), 1e-10);
}

// Integrating by parts r + 1 times at y = 0 gives r! (h / 2i)^{r+1}; the far
// endpoint is exponentially small.
TEST(Oscint, CrHalflineLeadingTermIsOrderRPlusOne) {
  for (int r : {1, 2, 3}) {
    const double h = 0.002;
    const cplx lead = std::tgamma(r + 1.0) * std::pow(h / cplx(0, 2), r + 1);
    const cplx v = oscint::cr_halfline_integral(r, h, 2.0);
    EXPECT_LT(std::abs(v / lead - 1.0), 0.02 * r) << "r = " << r;
  }
}
