#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "semidiag/errors.hpp"
#include "semidiag/mexpr.hpp"

using namespace semidiag;
using mexpr::Expression;

TEST(Mexpr, MatchesStdOnRandomPoints) {
  const Expression e = Expression::parse("exp(-x) * sin(2*x) + tanh(x)/(1 + x*x) - h*pow(x, 3) + i");
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int k = 0; k < 50; ++k) {
    const cplx x(u(rng), u(rng));
    const double h = 0.1 + 0.05 * k;
    const cplx ref = std::exp(-x) * std::sin(2.0 * x) + std::tanh(x) / (1.0 + x * x) - h * x * x * x + cplx(0, 1);
    EXPECT_LT(std::abs(e.eval(x, h) - ref), 1e-13 * (1.0 + std::abs(ref)));
  }
}

TEST(Mexpr, PrecedenceAndUnaryMinus) {
  EXPECT_NEAR(Expression::parse("-2*3 + 4/2").eval(0.0, 0.0).real(), -4.0, 1e-15);
  EXPECT_NEAR(Expression::parse("2 - -1").eval(0.0, 0.0).real(), 3.0, 1e-15);
  EXPECT_NEAR(std::abs(Expression::parse("(x + i)*(x - i)").eval(2.0, 0.0) - cplx(5.0, 0.0)), 0.0, 1e-14);
}

TEST(Mexpr, RoundTripThroughToString) {
  const Expression e = Expression::parse("1/(1 + 9*exp(x)) - h*log(x + 2)");
  const Expression back = Expression::parse(e.to_string());
  for (double x : {0.0, 0.5, 3.0}) EXPECT_LT(std::abs(e.eval(x, 0.3) - back.eval(x, 0.3)), 1e-14);
}

TEST(Mexpr, ParseErrorCarriesLocation) {
  try {
    Expression::parse("x + * 2");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1);
    EXPECT_EQ(e.column(), 5);
  }
  EXPECT_THROW(Expression::parse("foo(x)"), InputError);
  EXPECT_THROW(Expression::parse("sin(x"), InputError);
}

TEST(Mexpr, PoleRaisesEvalError) {
  const Expression e = Expression::parse("1/x");
  EXPECT_THROW(e.eval(0.0, 0.1), EvalError);
}

TEST(Mexpr, LogRecordsBranchCut) {
  EXPECT_TRUE(Expression::parse("log(x + 1)").domain().slit());
  EXPECT_FALSE(Expression::parse("exp(x)").domain().slit());
}

// tanh(i tau) = i tan(tau) has its first pole at tau = pi/2.
TEST(Mexpr, TanhPoleOnImaginaryAxis) {
  const Expression e = Expression::parse("tanh(x)");
  EXPECT_THROW(e.eval(cplx(0.0, 1.5707963), 0.0), EvalError);
  EXPECT_NEAR(e.eval(cplx(0.0, 1.0), 0.0).imag(), std::tan(1.0), 1e-14);
}
