#include <gtest/gtest.h>

#include <cmath>

#include "semidiag/errors.hpp"
#include "semidiag/manifold.hpp"

using namespace semidiag;

namespace {

Vec vec1(cplx a) {
  Vec v(1);
  v << a;
  return v;
}

Vec vec2(cplx a, cplx b) {
  Vec v(2);
  v << a, b;
  return v;
}

Vec rk4(const manifold::VectorField& f, Vec u, cplx t0, cplx t1, int steps) {
  const cplx dt = (t1 - t0) / static_cast<double>(steps);
  for (int k = 0; k < steps; ++k) {
    const Vec k1 = f(u), k2 = f(u + 0.5 * dt * k1), k3 = f(u + 0.5 * dt * k2), k4 = f(u + dt * k3);
    u += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return u;
}

}  // namespace

// u' = u^2 - u with u(0) = 0.1 is u(t) = 1 / (1 + 9 e^t), also for complex t.
TEST(Manifold, LogisticClosedFormOnEveryRay) {
  const auto f = manifold::VectorField::logistic();
  const auto eq = manifold::linearize(f, vec1(0.0));
  manifold::WedgeOptions opt;
  opt.delta = 0.2;
  const auto sol = manifold::solve_stable_manifold(eq, f, vec1(0.1), opt);
  ASSERT_EQ(sol.rays.size(), 3u);
  for (const auto& r : sol.rays) {
    double err = 0.0;
    for (size_t k = 0; k < r.t.size(); ++k) {
      if (r.t[k].real() > 10.0) continue;
      err = std::max(err, std::abs(r.w(0, k) - 1.0 / (1.0 + 9.0 * std::exp(r.t[k]))));
    }
    EXPECT_LT(err, 1e-8) << "angle " << r.angle;
    EXPECT_GE(r.decay_rate, 0.85);
  }
  EXPECT_LT(sol.ray_discrepancy, 1e-10);
}

TEST(Manifold, SaddleTrajectoryAgreesWithRK4) {
  const auto f = manifold::VectorField::saddle2d();
  const auto eq = manifold::linearize(f, vec2(0.0, 0.0));
  ASSERT_EQ(eq.stable_dim(), 1);
  const auto sol = manifold::solve_stable_manifold(eq, f, 0.05 * eq.basis_s.col(0));
  const manifold::Ray* real = nullptr;
  for (const auto& r : sol.rays)
    if (r.angle == 0.0) real = &r;
  ASSERT_NE(real, nullptr);
  Vec u = real->w.col(0);
  double err = 0.0;
  for (size_t k = 1; k < real->t.size() && real->t[k].real() <= 6.0; ++k) {
    u = rk4(f, u, real->t[k - 1], real->t[k], 20);
    err = std::max(err, (u - real->w.col(k)).norm());
  }
  EXPECT_LT(err, 1e-9);
}

// On v = Phi(u) invariance gives Phi(u) = -u^2 / 3 + O(u^3).
TEST(Manifold, SaddleGraphHasQuadraticCoefficient) {
  const auto f = manifold::VectorField::saddle2d();
  const auto eq = manifold::linearize(f, vec2(0.0, 0.0));
  for (double a : {1e-2, 5e-3}) {
    const auto sol = manifold::solve_stable_manifold(eq, f, vec2(a, 0.0));
    EXPECT_NEAR(sol.phi(1).real() / (a * a), -1.0 / 3.0, 5.0 * a);
    EXPECT_NEAR(sol.phi(0).real(), 0.0, 1e-12);
  }
  const auto rep = manifold::tangency_check(eq, f, vec2(1.0, 0.0));
  EXPECT_TRUE(rep.tangent);
  EXPECT_NEAR(rep.slope, 2.0, 0.05);
}

TEST(Manifold, PreconditionsAreEnforced) {
  const auto f = manifold::VectorField::saddle2d();
  EXPECT_THROW(manifold::linearize(f, vec2(0.5, 0.0)), PreconditionError);
  const auto eq = manifold::linearize(f, vec2(0.0, 0.0));
  EXPECT_THROW(manifold::solve_stable_manifold(eq, f, vec2(0.0, 0.1)), PreconditionError);
  manifold::WedgeOptions bad;
  bad.eta_tilde = 1.5;
  EXPECT_THROW(manifold::solve_stable_manifold(eq, f, vec2(0.01, 0.0), bad), PreconditionError);
}

TEST(Manifold, BuiltinLookup) {
  EXPECT_EQ(manifold::builtin_field("logistic").dim, 1);
  EXPECT_THROW(manifold::builtin_field("nope"), InputError);
}

TEST(Manifold, ZeroDatumGivesZeroSolution) {
  const auto f = manifold::VectorField::saddle2d();
  const auto eq = manifold::linearize(f, vec2(0.0, 0.0));
  const auto sol = manifold::solve_stable_manifold(eq, f, vec2(0.0, 0.0));
  EXPECT_EQ(sol.phi.norm(), 0.0);
  for (const auto& r : sol.rays) EXPECT_EQ(r.w.norm(), 0.0);
}

TEST(Manifold, ScalarStableCaseHasTrivialGraphAndContracts) {
  const auto f = manifold::VectorField::logistic();
  const auto eq = manifold::linearize(f, vec1(0.0));
  EXPECT_EQ(eq.stable_dim(), 1);
  const auto rep = manifold::tangency_check(eq, f, vec1(1.0));
  EXPECT_TRUE(rep.trivial);
  manifold::WedgeOptions opt;
  opt.delta = 0.2;
  EXPECT_LE(manifold::solve_stable_manifold(eq, f, vec1(0.05), opt).contraction, 0.5);
  const auto unstable = manifold::linearize(f, vec1(1.0));
  EXPECT_EQ(unstable.stable_dim(), 0);
  EXPECT_NEAR(unstable.eigenvalues(0).real(), 1.0, 1e-9);
}
