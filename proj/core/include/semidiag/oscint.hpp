#pragma once

#include <functional>
#include <string>
#include <vector>

#include "semidiag/mexpr.hpp"
#include "semidiag/symbol.hpp"
#include "semidiag/types.hpp"

namespace semidiag::oscint {

/// Oriented polyline. `panels` optionally fixes the starting panel count of
/// each segment; otherwise it is derived from the segment length and h.
struct Contour {
  std::vector<cplx> vertices;
  std::vector<int> panels;

  static Contour segment(cplx a, cplx b) { return {{a, b}, {}}; }
  static Contour polyline(std::vector<cplx> v) { return {std::move(v), {}}; }
  Contour reversed() const;
  /// Concatenation; the first vertex of `next` must equal the last vertex here.
  Contour then(const Contour& next) const;
  double length() const;
  /// Throws InputError on fewer than two vertices or repeated consecutive vertices.
  void validate() const;
};

/// phi(y, h); the integrand is e^{phi/h} a(y, h).
using Phase = std::function<cplx(cplx, double)>;

/// Phase given as an expression in x (the integration variable) and h.
Phase phase_from_expression(const mexpr::Expression& e);
/// -(y^2 + 2 i y), the phase of the triangular counterexample.
Phase quadratic_phase();

struct QuadOptions {
  double rel_tol = 1e-12;
  double abs_floor = 1e-300;
  int max_levels = 12;
};

struct QuadResult {
  cplx value{};
  double error = 0.0;
  /// Integral of |integrand| along the contour; sets the roundoff floor.
  double magnitude = 0.0;
  /// Convergence was declared at the roundoff floor rather than at rel_tol.
  bool cancellation_limited = false;
  int panels = 0;
};

/// Composite 16-point Gauss-Legendre rule; the panel count of every segment is
/// doubled until two successive levels agree. Real segments crossing 0 are
/// split there when the symbol has a cutoff at 0.
QuadResult quad_contour(const Symbol& a, const Phase& phi, const Contour& c, double h, const QuadOptions& opt = {});

/// Same driver for an arbitrary integrand; `scale` sets the starting panel
/// length (about one panel per scale unit).
QuadResult quad_function(const std::function<cplx(cplx)>& f, const Contour& c, double scale,
                         const QuadOptions& opt = {});

/// Integral over [-x, x] along a contour through the saddle: -x, saddle - eps,
/// saddle + eps, x. When x does not clear the crossing, a rectangle at height
/// Im(saddle) is used instead.
QuadResult saddle_deformed_quad(const Symbol& a, const Phase& phi, double x, double h, cplx saddle = -kI,
                                double eps = 0.25, const QuadOptions& opt = {});

/// Leading term h^{1/2} e^{phi(z0)/h} a(z0) sqrt(2 pi / -phi''(z0)). The root
/// is the one with positive real part after division by `direction`, the
/// direction in which the contour crosses z0.
cplx stationary_phase_estimate(const Symbol& a, const Phase& phi, cplx z0, double h, cplx direction = 1.0);

/// log|I| = log C + p log h - c h^{-1/s}, with s fixed (s = infinity drops the
/// last regressor and gives a pure power law).
struct AsymptoticFit {
  std::string model;
  double C = 0.0, p = 0.0, c = 0.0, s = 0.0;
  /// Largest |log|I| - model| relative to |log|I||.
  double residual = 0.0;
  /// Slope-based estimate of 1/s from log(-log|I|) against log(1/h).
  double stretch = 0.0;
  std::vector<double> h_grid;
  std::vector<cplx> values;
  bool zero_signal = false;
  std::string note;

  double predict(double h) const;
  std::string to_json() const;
  std::string to_csv() const;
};

AsymptoticFit fit_law(const std::vector<double>& h_grid, const std::vector<cplx>& values, double s);

/// Default dyadic grid {0.2, 0.1, 0.05, 0.025, 0.0125}.
std::vector<double> default_h_grid();

/// I(h) = int_0^inf e^{-(y^2 + 2 i y)/h} e^{-y^-theta} dy along a ray below the real axis.
cplx gevrey_halfline_integral(double gevrey_theta, double h, const QuadOptions& opt = {});
AsymptoticFit gevrey_halfline_asymptotics(double gevrey_theta, const std::vector<double>& h_grid);

/// I(h) = int_0^x e^{-(y^2 + 2 i y)/h} y^r dy.
cplx cr_halfline_integral(int r, double h, double x = 2.0, const QuadOptions& opt = {});
AsymptoticFit cr_halfline_rate(int r, const std::vector<double>& h_grid, double x = 2.0);

struct GevreyNorm {
  double value = 0.0;
  /// Weighted mass of the top quarter of the resolved modes.
  double tail = 0.0;
  /// Resolved modes (|coefficient| above the roundoff floor).
  int resolved = 0;
  bool diverging = false;
  int divergence_mode = 0;
};

/// sqrt(sum_j (1 + |j|)^2 e^{2 T |j|^{1/s}} |a_j|^2) with a_j the Fourier
/// coefficients of a over [0, period), from 2^log2_samples samples.
GevreyNorm gevrey_norm(const Symbol& a, double period, double s, double T, int log2_samples = 12);

}  // namespace semidiag::oscint
