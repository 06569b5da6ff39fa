#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "semidiag/matrix_function.hpp"
#include "semidiag/path_solver.hpp"
#include "semidiag/types.hpp"

namespace semidiag::exactdiag {

/// h W' = (diag(A11, A22) + h^p Theta) W with coefficients analytic in x.
/// Only the diagonal blocks of `a` are used; `theta` may be full.
struct AnalyticBlockSystem {
  MatrixFunction a;
  MatrixFunction theta;
  int m = 1;
  int p = 1;

  int n() const { return a.dim(); }
  /// Splits a single matrix f into its block diagonal and h^-p times the rest.
  static AnalyticBlockSystem from_matrix(const MatrixFunction& f, int m, int p);
};

struct SolverOptions {
  pathsolve::PicardOptions picard;
  int nodes_per_panel = 16;
  double certificate_tol = 1e-8;
  /// Throw when the certificate exceeds certificate_tol.
  bool require_certificate = true;
};

/// Block-diagonalizer T = I + h^p [[0, alpha12], [alpha21, 0]] sampled at points.
struct Conjugator {
  int p = 1;
  double h = 0.0;
  int m = 0, n = 0;
  std::vector<cplx> points;
  std::vector<Mat> alpha12, alpha21;
  /// sup of ||offdiag(T^-1 (A + h^p Theta) T - h T^-1 T')||.
  double certificate = 0.0;
  /// sup of the mismatch between the diagonal blocks above and
  /// A_jj + h^p (Theta_jj + h^p Theta_jk alpha_kj).
  double diagonal_mismatch = 0.0;
  int iterations = 0;
  double contraction = 0.0;
  std::vector<double> picard_diffs;
  /// Dichotomy rate used for the panel length: min |Re(direction * mu)|.
  double eta = 0.0;
  cplx gamma{1.0};
  /// Largest disagreement between different contours at shared points (NaN if none).
  double path_discrepancy = std::nan("");
  /// Bound on the neglected tail of the truncated infinite contours (0 if none).
  double tail_bound = 0.0;
  std::string method;
  std::vector<std::string> notes;

  Mat transform(int i) const;
  /// sup ||T - I||.
  double deviation() const;
  /// Index of the sample nearest to z.
  int nearest(cplx z) const;
  /// Grid points, alpha values as [re, im] pairs (row-major per block) and metadata.
  std::string to_json() const;
};

/// Eigenvalue-direction bookkeeping shared by the solvers.
struct Direction {
  cplx gamma{1.0};
  double margin = 0.0;  // min |Re(gamma mu)|
};

/// Scans `count` unimodular directions and keeps the one maximizing
/// min |Re(gamma mu)| over `eigenvalues` (first one on ties).
Direction choose_direction(const Vec& eigenvalues, int count = 64);

// ---- finite point ---------------------------------------------------------

struct DiamondParams {
  double half_length = 0.2;  // M: endpoints are center -/+ M gamma
  double eps = 0.1;          // half-angle
  std::optional<cplx> gamma;
  /// Apex offsets in units of M tan(eps); each gives one path through the diamond.
  std::vector<double> apex_fractions{-1.0, -0.5, 0.0, 0.5, 1.0};
};

/// Solution along one polyline. Stable modes of gamma A(center) are integrated
/// from the first vertex, unstable ones from the last.
struct PathSolution {
  pathsolve::PathMesh mesh;
  Conjugator conj;
};

std::vector<PathSolution> solve_on_paths(const AnalyticBlockSystem& sys, cplx center, double h, cplx gamma,
                                         const std::vector<std::vector<cplx>>& paths,
                                         const SolverOptions& opt = {});

Conjugator solve_finite(const AnalyticBlockSystem& sys, cplx center, double h, const DiamondParams& diamond,
                        const SolverOptions& opt = {});

/// Solves on polylines through `center` that bulge to the diamond edges for
/// half-angles scale * eps (one per scale, both bulge signs) and returns the
/// largest difference of alpha(center) from the straight-line value.
double contour_discrepancy(const AnalyticBlockSystem& sys, cplx center, double h, const DiamondParams& diamond,
                           const std::vector<double>& scales = {0.8, 1.2}, const SolverOptions& opt = {});

// ---- infinity -------------------------------------------------------------

struct WedgeParams {
  double apex = 0.0;  // M'
  double eps = 0.2;   // half-angle
  double R = 10.0;    // reported range end (real part)
  /// Ray direction for the one-dimensional solver; chosen automatically when empty.
  std::optional<cplx> direction;
  /// Extra length beyond R that stands in for infinity; 0 picks 28 h / eta.
  double pad = 0.0;
  /// Real part where the limit operator is sampled; 0 means R + pad.
  double probe = 0.0;
  /// Sample spacing of the returned points along each reported grid line.
  int output_stride = 1;
};

Conjugator solve_infinity(const AnalyticBlockSystem& sys, double h, const WedgeParams& wedge,
                          const SolverOptions& opt = {});

/// Solves along one ray from `start` in direction `dir` (unit), reporting the
/// points up to `report_length` and padding the ray by `pad`. The linear part
/// is frozen at `a_limit` (n x n, only its diagonal blocks are used). Modes with
/// Re(mu dir) < 0 are integrated from the start, the others from the far end.
Conjugator solve_ray(const AnalyticBlockSystem& sys, double h, cplx start, cplx dir, double report_length,
                     double pad, const Mat& a_limit, const SolverOptions& opt = {});

/// Exponential decay rate of sup ||alpha|| against Re x, fitted over the
/// real-axis points with Re x >= re_min.
double decay_rate(const Conjugator& c, double re_min);

// ---- regular singular point -----------------------------------------------

struct SlitDiskParams {
  double radius = 1.5;         // starting circle |z| = radius of every ray
  double sample_radius = 0.5;  // report circle
  int samples = 16;            // points on the report circle, avoiding the cut
  double origin_depth = 30.0;  // -ln|z| reached on the positive real ray for the value at 0
  double eps = 0.2;            // wedge half-angle used for the eigenvalue classification
};

struct SingularResult {
  Conjugator conj;          // points are z values on the report circle
  Mat alpha12_at_origin;    // limit along the positive real axis
  Mat alpha21_at_origin;
  bool resonant = false;
  int resonant_index = 0;  // Taylor order j with j h equal to an eigenvalue of the linear part
  std::string note;
};

/// `sys` is given in the variable z near 0 for h z W' = (A + h^p Theta) W.
/// Solved in x = -ln z, where the equation reads h W_x = -(A + h^p Theta)(e^-x) W.
SingularResult solve_singular(const AnalyticBlockSystem& sys, double h, const SlitDiskParams& params,
                              const SolverOptions& opt = {});

// ---- real line with a numerical-range gap ----------------------------------

struct GapParams {
  double x_lo = -3.0;
  double x_hi = 3.0;
  double pad = 0.0;  // extension beyond x_hi for the backward channel
  double max_panel = 0.0;  // 0: 2h / max|mu|, capped at 2h
};

Conjugator solve_gap_cr(const AnalyticBlockSystem& sys, double h, const GapParams& params,
                        const SolverOptions& opt = {});

/// Recomputes the certificate of a conjugator on a mesh with its derivatives.
double certify(const AnalyticBlockSystem& sys, double h, const std::vector<cplx>& points, const Mat& alpha,
               const Mat& dalpha, double* diagonal_mismatch = nullptr);

}  // namespace semidiag::exactdiag
