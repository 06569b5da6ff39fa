#include <gtest/gtest.h>

#include <cmath>

#include "semidiag/lobatto.hpp"
#include "semidiag/path_solver.hpp"

using namespace semidiag;

TEST(Quadrature, GaussLegendreIntegratesPolynomialsExactly) {
  const auto& gl = GaussLegendreRule::get(16);
  for (int k = 0; k <= 31; ++k) {
    double s = 0.0;
    for (int j = 0; j < gl.n; ++j) s += gl.weights(j) * std::pow(gl.nodes(j), k);
    const double exact = k % 2 ? 0.0 : 2.0 / (k + 1);
    EXPECT_NEAR(s, exact, 1e-14) << "degree " << k;
  }
}

TEST(Quadrature, LobattoIntegrationMatrixIsExactOnPolynomials) {
  const auto& lr = LobattoRule::get(16);
  Eigen::VectorXd f(lr.n);
  for (int j = 0; j < lr.n; ++j) f(j) = std::pow(lr.nodes(j), 7);
  const Eigen::VectorXd integral = lr.integration * f;
  for (int j = 0; j < lr.n; ++j) EXPECT_NEAR(integral(j), std::pow(lr.nodes(j), 8) / 8.0, 1e-14);
  const Eigen::VectorXd d = lr.differentiation * f;
  for (int j = 0; j < lr.n; ++j) EXPECT_NEAR(d(j), 7.0 * std::pow(lr.nodes(j), 6), 1e-10);
}

// h c' = -c + g with constant g, c(0) = 0: c = g (1 - e^{-z/h}) along a complex path.
TEST(PathSolve, ScalarForwardSweepMatchesExponential) {
  const auto mesh = pathsolve::PathMesh::build({0.0, cplx(1.0, 0.2), cplx(2.0, 0.0)}, 0.1);
  pathsolve::Channel ch;
  ch.basis = Mat::Identity(1, 1);
  ch.dual = Mat::Identity(1, 1);
  ch.generator = -Mat::Identity(1, 1);
  ch.forward = true;
  const double h = 0.3;
  pathsolve::Field g = pathsolve::Field::Constant(1, mesh.nodes(), cplx(2.0, 0.0));
  pathsolve::Field out = pathsolve::Field::Zero(1, mesh.nodes());
  pathsolve::sweep(mesh, ch, g, h, out);
  double err = 0.0;
  for (int k = 0; k < mesh.nodes(); ++k)
    err = std::max(err, std::abs(out(0, k) - 2.0 * (1.0 - std::exp(-mesh.z[k] / h))));
  EXPECT_LT(err, 1e-12);
}

// Backward channel: h c' = c + 1 with c(L) = 0 gives c = e^{(z-L)/h} - 1.
TEST(PathSolve, BackwardSweepAndDerivative) {
  const auto mesh = pathsolve::PathMesh::build({0.0, 1.5}, 0.1);
  pathsolve::Channel ch;
  ch.basis = Mat::Identity(1, 1);
  ch.dual = Mat::Identity(1, 1);
  ch.generator = Mat::Identity(1, 1);
  ch.forward = false;
  const double h = 0.2;
  pathsolve::Field g = pathsolve::Field::Ones(1, mesh.nodes());
  pathsolve::Field out = pathsolve::Field::Zero(1, mesh.nodes());
  pathsolve::sweep(mesh, ch, g, h, out);
  const cplx L = mesh.z.back();
  double err = 0.0, derr = 0.0;
  const auto d = pathsolve::differentiate(mesh, out);
  for (int k = 0; k < mesh.nodes(); ++k) {
    err = std::max(err, std::abs(out(0, k) - (std::exp((mesh.z[k] - L) / h) - 1.0)));
    derr = std::max(derr, std::abs(d(0, k) - std::exp((mesh.z[k] - L) / h) / h));
  }
  EXPECT_LT(err, 1e-12);
  EXPECT_LT(derr, 1e-9);
}

// alpha = 1 + 0.1 alpha^2 has the fixed point (1 - sqrt(0.6)) / 0.2.
TEST(PathSolve, PicardReachesFixedPoint) {
  const int n = 5;
  auto forcing = [](const pathsolve::Field& a, pathsolve::Field& g) { g = (1.0 + 0.1 * a.array().square()).matrix(); };
  auto prop = [](const pathsolve::Field& g, pathsolve::Field& next) { next = g; };
  const auto r = pathsolve::picard(n, 1, forcing, prop);
  const double fp = (1.0 - std::sqrt(0.6)) / 0.2;
  EXPECT_LT((r.alpha.array() - fp).abs().maxCoeff(), 1e-10);
  EXPECT_LT(r.contraction, 0.5);
}
