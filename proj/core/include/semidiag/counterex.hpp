#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "semidiag/symbol.hpp"
#include "semidiag/types.hpp"

namespace semidiag::counterex {

/// h W' = [[x + i, h^p theta], [0, -(x + i)]] W on [-L, L].
struct TriangularSystem {
  Symbol theta;
  int p = 1;
  double L = 1.0;

  cplx lambda1(cplx x) const { return x + kI; }
  cplx lambda2(cplx x) const { return -(x + kI); }
  Mat operator()(cplx x, double h) const;
};

struct AlphaOptions {
  /// x-grid density (points per unit length).
  int points_per_unit = 64;
  double quad_tol = 1e-12;
};

struct AlphaSample {
  std::vector<double> x;
  std::vector<cplx> alpha;
  cplx alpha0{};
  double sup = 0.0;
};

/// The bounded-candidate solution of h alpha' = 2 (x + i) alpha + theta with
/// alpha(0) = -h^-1 int_0^L e^{-(y^2 + 2 i y)/h} theta(y) dy, i.e.
/// alpha(x) = -e^{(x^2 + 2 i x)/h} h^-1 int_x^L e^{-(y^2 + 2 i y)/h} theta(y) dy.
/// When `alpha0` is given it replaces the default initial value.
AlphaSample alpha_solution(const TriangularSystem& ts, double h, const std::optional<cplx>& alpha0 = std::nullopt,
                           const AlphaOptions& opt = {});

struct VerdictRow {
  double h = 0.0;
  std::vector<double> x_alpha, abs_alpha;  // alpha_solution grid on [-L, L]
  std::vector<double> x_rho, rho;          // criterion grid on (0, L]
  double sup_ratio = 0.0;   // sup_x of the criterion ratio
  double argmax_x = 0.0;
  double sup_alpha = 0.0;   // from alpha_solution
  bool cancellation_limited = false;
};

struct Verdict {
  bool bounded = false;           // from the criterion integrals
  bool alpha_bounded = false;     // from the direct alpha construction
  bool sides_agree = false;
  double bound = 100.0;
  double growth = 0.0;            // fitted g in log sup ~ g / h (criterion side)
  double growth_alpha = 0.0;      // same fit for sup |alpha|
  double fit_residual = 0.0;      // relative residual of the criterion fit
  double fit_residual_alpha = 0.0;
  std::vector<VerdictRow> rows;
  std::string note;

  std::string to_json() const;
  std::string to_csv() const;
};

struct CertificateOptions {
  double bound = 100.0;
  /// Allowed growth of the sup ratio per halving of h on the tail of a
  /// bounded sequence.
  double tail_growth = 1.5;
  /// Relative residual allowed in the exponential growth fit.
  double fit_tolerance = 0.15;
  AlphaOptions alpha;
};

/// rho(x, h) = |int_{-x}^{x} e^{-(y^2 + 2 i y)/h} theta(y) dy| / (h e^{-x^2/h}).
double criterion_ratio(const TriangularSystem& ts, double x, double h, bool* cancellation_limited = nullptr);

Verdict boundedness_certificate(const TriangularSystem& ts, const std::vector<double>& h_grid,
                                const CertificateOptions& opt = {});

/// theta(y) = y^r for y > 0 and 0 otherwise.
Verdict cr_counterexample(int r, double L, const std::vector<double>& h_grid, const CertificateOptions& opt = {});

struct ResonanceReport {
  bool resonant = false;
  int index = 0;                     // failing Taylor order
  std::vector<cplx> alpha_coeffs;    // alpha_j; the resonant entry is left at 0
};

/// (j h - mu) alpha_j = c_j for j = 0 .. c.size()-1.
ResonanceReport scalar_resonance(const std::vector<cplx>& c, cplx mu, double h, double tol = 1e-12);

/// h z alpha' = alpha + z phi(z): (j h - 1) alpha_j = phi_{j-1}.
ResonanceReport singular_resonance(const std::vector<cplx>& phi_coeffs, double h, double tol = 1e-12);

/// Builds T = [[1, h^p alpha], [0, 1]] from alpha_solution on a collocation
/// mesh of [-L, L] and returns its conjugation residual.
double triangular_certificate(const TriangularSystem& ts, double h, double* diagonal_mismatch = nullptr);

/// First `count` Taylor coefficients at 0 from samples on |z| = radius.
std::vector<cplx> taylor_coefficients(const std::function<cplx(cplx)>& f, int count, double radius, int samples = 0);

}  // namespace semidiag::counterex
