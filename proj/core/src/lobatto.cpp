#include "semidiag/lobatto.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>

#include "semidiag/errors.hpp"

namespace semidiag {

namespace {

GaussLegendreRule make_gauss_legendre(int n) {
  GaussLegendreRule r;
  r.n = n;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    r.nodes(n - 1 - i) = x;
    r.weights(n - 1 - i) = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return r;
}

LobattoRule make_lobatto(int n) {
  if (n < 3) throw InputError("Lobatto rule needs at least 3 nodes");
  const int N = n - 1;
  Eigen::VectorXd x(n), xold(n);
  for (int i = 0; i < n; ++i) x(i) = std::cos(M_PI * i / N);
  Eigen::MatrixXd p(n, n);
  for (int it = 0; it < 200; ++it) {
    xold = x;
    p.col(0).setOnes();
    p.col(1) = x;
    for (int k = 2; k <= N; ++k)
      p.col(k) = ((2.0 * k - 1.0) * x.cwiseProduct(p.col(k - 1)) - (k - 1.0) * p.col(k - 2)) / k;
    x = xold - (x.cwiseProduct(p.col(N)) - p.col(N - 1)).cwiseQuotient(n * p.col(N));
    if ((x - xold).cwiseAbs().maxCoeff() < 1e-16) break;
  }
  LobattoRule r;
  r.n = n;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    // x is descending on [-1, 1]
    r.nodes(i) = 0.5 * (1.0 - x(i));
    r.weights(i) = 1.0 / (N * n * p(i, N) * p(i, N));
  }
  r.nodes(0) = 0.0;
  r.nodes(n - 1) = 1.0;

  r.bary.resize(n);
  for (int k = 0; k < n; ++k) {
    double w = 1.0;
    for (int j = 0; j < n; ++j)
      if (j != k) w *= (r.nodes(k) - r.nodes(j));
    r.bary(k) = 1.0 / w;
  }
  r.differentiation.setZero(n, n);
  for (int j = 0; j < n; ++j) {
    double diag = 0.0;
    for (int k = 0; k < n; ++k) {
      if (k == j) continue;
      r.differentiation(j, k) = (r.bary(k) / r.bary(j)) / (r.nodes(j) - r.nodes(k));
      diag -= r.differentiation(j, k);
    }
    r.differentiation(j, j) = diag;
  }

  // Exact for the degree n-1 basis with a Gauss rule of n points.
  const GaussLegendreRule& gl = GaussLegendreRule::get(n);
  r.integration.setZero(n, n);
  for (int j = 1; j < n; ++j) {
    const double b = r.nodes(j);
    for (int q = 0; q < gl.n; ++q) {
      const double t = 0.5 * b * (gl.nodes(q) + 1.0);
      const double w = 0.5 * b * gl.weights(q);
      double den = 0.0;
      Eigen::VectorXd num(n);
      for (int k = 0; k < n; ++k) {
        num(k) = r.bary(k) / (t - r.nodes(k));
        den += num(k);
      }
      r.integration.row(j) += w * num.transpose() / den;
    }
  }
  return r;
}

template <class Rule, class Make>
const Rule& cached(int n, Make make) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<Rule>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<Rule>(make(n));
  return *slot;
}

}  // namespace

const LobattoRule& LobattoRule::get(int n) { return cached<LobattoRule>(n, make_lobatto); }

const GaussLegendreRule& GaussLegendreRule::get(int n) { return cached<GaussLegendreRule>(n, make_gauss_legendre); }

}  // namespace semidiag
