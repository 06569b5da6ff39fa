#pragma once

#include <functional>
#include <string>
#include <vector>

#include "semidiag/types.hpp"

namespace semidiag::manifold {

/// Autonomous analytic vector field u' = f(u) on C^n.
struct VectorField {
  std::string name;
  int dim = 0;
  std::function<Vec(const Vec&)> f;

  Vec operator()(const Vec& u) const { return f(u); }

  /// u^2 - u.
  static VectorField logistic();
  /// (-u + u v, v + u^2), a saddle at the origin.
  static VectorField saddle2d();
};

/// Names of the shipped vector fields, and lookup by name (throws InputError).
std::vector<std::string> builtin_fields();
VectorField builtin_field(const std::string& name);

struct Equilibrium {
  Vec u_star;
  Mat jacobian;
  /// Spectral projectors for Re < 0, |Re| small and Re > 0.
  Mat pi_s, pi_c, pi_u;
  /// Bases and dual rows of the three subspaces (possibly zero columns).
  Mat basis_s, dual_s, basis_c, dual_c, basis_u, dual_u;
  Vec eigenvalues;
  /// Smallest |Re| over the stable and unstable eigenvalues.
  double eta = 0.0;
  bool defective_center = false;

  int stable_dim() const { return static_cast<int>(basis_s.cols()); }
  Mat pi_cu() const { return pi_c + pi_u; }
};

struct LinearizeOptions {
  double residual_tol = 1e-10;
  /// Eigenvalues with |Re| below this are put in the center part.
  double center_band = 1e-8;
};

/// Finite-difference Jacobian at u_star and its stable/center/unstable split.
/// Throws PreconditionError when |f(u_star)| exceeds residual_tol.
Equilibrium linearize(const VectorField& f, const Vec& u_star, const LinearizeOptions& opt = {});

struct WedgeOptions {
  double nu = 0.3;
  /// Weight exponent of the norm sup e^{eta_tilde Re t}|w(t)|.
  double eta_tilde = 0.9;
  /// Ray length; 0 selects 12 / eta_tilde.
  double t_max = 0.0;
  double max_panel = 0.5;
  double tol = 1e-10;
  int max_iterations = 200;
  /// Advisory size limit for |w_s|; 0 selects 0.05 * eta.
  double delta = 0.0;
};

struct Ray {
  double angle = 0.0;
  std::vector<cplx> t;
  Mat w;  // dim x nodes
  double decay_rate = 0.0;
  double flow_residual = 0.0;
  int iterations = 0;
  double contraction = 0.0;
  double weighted_norm = 0.0;
};

struct ManifoldSolution {
  Vec w_s;
  std::vector<Ray> rays;  // angles -nu, 0, nu
  /// Component of w(0) in the center-unstable subspace, from the real ray.
  Vec phi;
  double projection_error = 0.0;
  /// Largest |w(0)| mismatch between rays.
  double ray_discrepancy = 0.0;
  /// e^{-eta_tilde T_max} times the weighted norm of the nonlinearity.
  double tail_bound = 0.0;
  double contraction = 0.0;
  double min_decay_rate = 0.0;
  double max_flow_residual = 0.0;
  std::vector<std::string> notes;

  std::string to_csv() const;
  std::string to_json() const;
};

/// Duhamel fixed point along the rays t = tau e^{i angle}: the stable part
/// starts from w_s at t = 0, the center-unstable part is pinned to zero at
/// t = T_max. Throws PreconditionError when w_s leaves the stable subspace and
/// ConvergenceFailure (carrying the measured ratio) when Picard does not contract.
ManifoldSolution solve_stable_manifold(const Equilibrium& eq, const VectorField& f, const Vec& w_s,
                                       const WedgeOptions& opt = {});

struct TangencyReport {
  std::vector<double> scales;
  std::vector<double> phi_norms;
  /// log-log slope of |Phi(w_s)| against |w_s|; NaN when Phi vanishes identically.
  double slope = 0.0;
  bool trivial = false;
  bool tangent = false;
};

/// Sweeps w_s = scale * direction and fits the order of |Phi(w_s)|.
TangencyReport tangency_check(const Equilibrium& eq, const VectorField& f, const Vec& direction,
                              const std::vector<double>& scales = {1e-2, 5e-3, 2.5e-3},
                              const WedgeOptions& opt = {}, double min_slope = 1.8);

}  // namespace semidiag::manifold
