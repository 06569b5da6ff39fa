#pragma once

#include <Eigen/Dense>

namespace semidiag {

/// Gauss-Lobatto nodes on [0, 1] with the matrices used by the panel solver.
struct LobattoRule {
  int n = 0;
  Eigen::VectorXd nodes;        // ascending, nodes(0) = 0, nodes(n-1) = 1
  Eigen::VectorXd weights;      // quadrature weights on [0, 1]
  Eigen::MatrixXd integration;  // (j, k): integral over [0, nodes(j)] of the k-th Lagrange basis
  Eigen::MatrixXd differentiation;  // (j, k): derivative of the k-th Lagrange basis at nodes(j)
  Eigen::VectorXd bary;         // barycentric weights

  /// Interpolates samples f (one per node) at t in [0, 1].
  template <class V>
  auto interpolate(const V& f, double t) const -> typename V::Scalar {
    typename V::Scalar num = 0.0;
    double den = 0.0;
    for (int k = 0; k < n; ++k) {
      double d = t - nodes(k);
      if (d == 0.0) return f(k);
      double w = bary(k) / d;
      num += w * f(k);
      den += w;
    }
    return num / den;
  }

  static const LobattoRule& get(int n);
};

/// Gauss-Legendre rule on [-1, 1].
struct GaussLegendreRule {
  int n = 0;
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
  static const GaussLegendreRule& get(int n);
};

}  // namespace semidiag
