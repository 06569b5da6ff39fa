#include "semidiag/counterex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <json.hpp>
#include <unsupported/Eigen/FFT>

#include "semidiag/errors.hpp"
#include "semidiag/exactdiag.hpp"
#include "semidiag/fit.hpp"
#include "semidiag/oscint.hpp"
#include "semidiag/path_solver.hpp"

namespace semidiag::counterex {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

struct Integral {
  cplx value{};
  double magnitude = 0.0;
  bool cancellation_limited = false;
};

Integral integrate_on(const Symbol& theta, const oscint::Contour& c, double h) {
  oscint::QuadResult q = oscint::quad_contour(theta, oscint::quadratic_phase(), c, h);
  Integral out;
  out.value = q.value;
  out.magnitude = q.magnitude;
  out.cancellation_limited = q.cancellation_limited || std::abs(q.value) < 1e3 * kEps * q.magnitude;
  return out;
}

// int_a^b e^{-(y^2 + 2 i y)/h} theta(y) dy. The phase has its minimum in Im y
// at Im y = -1 for every Re y, so on contours through that line the integrand
// never exceeds its endpoint and saddle values.
// Analytic symbols use the rectangle a, a - i, b - i, b. Half-line symbols are
// clipped at 0 and continue analytically into Re y > 0; they leave 0 along the
// diagonal to 1 - i unless the real segment carries less absolute mass, which
// happens for short intervals where the saddle dominates the true value.
// Other symbols are only known on the real line.
Integral weighted_integral(const Symbol& theta, double a, double b, double h) {
  if (theta.identically_zero()) return {};
  if (theta.analytic()) {
    if (a == b) return {};
    return integrate_on(theta, oscint::Contour::polyline({a, cplx(a, -1.0), cplx(b, -1.0), b}), h);
  }
  if (!theta.cutoff_at_zero()) {
    if (a == b) return {};
    return integrate_on(theta, oscint::Contour::segment(a, b), h);
  }
  a = std::max(a, 0.0);
  if (a >= b) return {};
  oscint::Contour c = a > 0.0    ? oscint::Contour::polyline({a, cplx(a, -1.0), cplx(b, -1.0), b})
                      : b == 1.0 ? oscint::Contour::polyline({0.0, cplx(1.0, -1.0), b})
                                 : oscint::Contour::polyline({0.0, cplx(1.0, -1.0), cplx(b, -1.0), b});
  Integral deformed = integrate_on(theta, c, h);
  if (!deformed.cancellation_limited) return deformed;
  Integral straight = integrate_on(theta, oscint::Contour::segment(a, b), h);
  return straight.magnitude < deformed.magnitude ? straight : deformed;
}

// alpha(x) = e^{(x^2 + 2 i x)/h} (alpha0 + h^-1 int_0^x ...), evaluated in log
// form so that large prefactors and tiny integrals do not over- or underflow.
cplx alpha_at(const TriangularSystem& ts, double h, cplx alpha0, bool default_alpha0, double x) {
  const cplx expo = (x * x + 2.0 * kI * x) / h;
  cplx inner;
  if (default_alpha0) {
    inner = -weighted_integral(ts.theta, x, ts.L, h).value / h;
  } else {
    inner = alpha0 + weighted_integral(ts.theta, 0.0, x, h).value / h;
  }
  if (inner == 0.0) return 0.0;
  return std::exp(expo + std::log(inner));
}

std::vector<double> uniform(double a, double b, int per_unit, bool skip_first) {
  const int n = std::max(1, static_cast<int>(std::lround((b - a) * per_unit)));
  std::vector<double> x;
  for (int k = skip_first ? 1 : 0; k <= n; ++k) x.push_back(a + (b - a) * k / n);
  return x;
}

struct GrowthFit {
  double g = 0.0;
  double residual = 0.0;
};

// log y = a + g / h + b log h.
GrowthFit growth_fit(const std::vector<double>& h, const std::vector<double>& y) {
  std::vector<std::vector<double>> rows;
  std::vector<double> ly;
  for (size_t i = 0; i < h.size(); ++i) {
    rows.push_back({1.0, 1.0 / h[i], std::log(h[i])});
    ly.push_back(std::log(std::max(y[i], 1e-300)));
  }
  fit::LinearFit lf = fit::least_squares(rows, ly);
  GrowthFit g;
  g.g = lf.coef[1];
  double scale = 1.0;
  for (double v : ly) scale = std::max(scale, std::abs(v));
  g.residual = lf.max_abs_residual / scale;
  return g;
}

// Bounded: everything below the bound and the last halving grows by at most `tail`.
bool bounded_sequence(const std::vector<double>& v, double bound, double tail) {
  double mx = 0.0;
  for (double x : v) mx = std::max(mx, x);
  if (!(mx <= bound)) return false;
  const size_t n = v.size();
  return n < 2 || v[n - 1] <= tail * v[n - 2];
}

}  // namespace

Mat TriangularSystem::operator()(cplx x, double h) const {
  Mat m(2, 2);
  m << lambda1(x), std::pow(h, p) * theta(x, h), 0.0, lambda2(x);
  return m;
}

AlphaSample alpha_solution(const TriangularSystem& ts, double h, const std::optional<cplx>& alpha0,
                           const AlphaOptions& opt) {
  if (!(h > 0.0) || !(ts.L > 0.0)) throw InputError("alpha_solution needs h > 0 and L > 0");
  AlphaSample s;
  s.alpha0 = alpha0 ? *alpha0 : alpha_at(ts, h, 0.0, true, 0.0);
  for (double x : uniform(-ts.L, ts.L, opt.points_per_unit, false)) {
    const cplx a = alpha_at(ts, h, s.alpha0, !alpha0, x);
    s.x.push_back(x);
    s.alpha.push_back(a);
    s.sup = std::max(s.sup, std::abs(a));
  }
  return s;
}

double criterion_ratio(const TriangularSystem& ts, double x, double h, bool* cancellation_limited) {
  if (!(x > 0.0)) throw InputError("criterion ratio needs x > 0");
  Integral j = weighted_integral(ts.theta, -x, x, h);
  if (cancellation_limited) *cancellation_limited = j.cancellation_limited;
  if (j.value == 0.0) return 0.0;
  return std::exp(std::log(std::abs(j.value)) - std::log(h) + x * x / h);
}

Verdict boundedness_certificate(const TriangularSystem& ts, const std::vector<double>& h_grid,
                                const CertificateOptions& opt) {
  if (h_grid.size() < 4) throw InputError("boundedness certificate needs at least four step sizes");
  std::vector<double> hs = h_grid;
  std::sort(hs.begin(), hs.end(), std::greater<>());
  Verdict v;
  v.bound = opt.bound;
  bool limited = false;
  std::vector<double> sup_rho, sup_alpha;
  for (double h : hs) {
    VerdictRow row;
    row.h = h;
    for (double x : uniform(0.0, ts.L, opt.alpha.points_per_unit, true)) {
      bool lim = false;
      const double r = criterion_ratio(ts, x, h, &lim);
      row.cancellation_limited = row.cancellation_limited || lim;
      row.x_rho.push_back(x);
      row.rho.push_back(r);
      if (r > row.sup_ratio) {
        row.sup_ratio = r;
        row.argmax_x = x;
      }
    }
    AlphaSample a = alpha_solution(ts, h, std::nullopt, opt.alpha);
    row.x_alpha = a.x;
    for (cplx z : a.alpha) row.abs_alpha.push_back(std::abs(z));
    row.sup_alpha = a.sup;
    limited = limited || row.cancellation_limited;
    sup_rho.push_back(row.sup_ratio);
    sup_alpha.push_back(row.sup_alpha);
    v.rows.push_back(std::move(row));
  }
  v.alpha_bounded = bounded_sequence(sup_alpha, opt.bound, opt.tail_growth);
  v.bounded = bounded_sequence(sup_rho, opt.bound, opt.tail_growth);
  GrowthFit gr = growth_fit(hs, sup_rho), ga = growth_fit(hs, sup_alpha);
  v.growth = gr.g;
  v.fit_residual = gr.residual;
  v.growth_alpha = ga.g;
  v.fit_residual_alpha = ga.residual;
  if (limited) {
    v.note = "criterion integrals are cancellation-limited; the verdict uses the direct alpha construction";
    v.bounded = v.alpha_bounded;
  }
  v.sides_agree = v.bounded == v.alpha_bounded;
  if (!v.bounded && !(v.growth > 0.0 && v.fit_residual < opt.fit_tolerance)) {
    if (!v.note.empty()) v.note += "; ";
    v.note += "growth fit does not certify exponential blow-up";
  }
  return v;
}

Verdict cr_counterexample(int r, double L, const std::vector<double>& h_grid, const CertificateOptions& opt) {
  TriangularSystem ts{Symbol::cr_halfline(r), 1, L};
  return boundedness_certificate(ts, h_grid, opt);
}

std::string Verdict::to_json() const {
  nlohmann::json j;
  j["bounded"] = bounded;
  j["alpha_bounded"] = alpha_bounded;
  j["unbounded"] = !bounded;
  j["sides_agree"] = sides_agree;
  j["bound"] = bound;
  j["growth"] = growth;
  j["growth_alpha"] = growth_alpha;
  j["fit_residual"] = fit_residual;
  j["fit_residual_alpha"] = fit_residual_alpha;
  j["note"] = note;
  nlohmann::json rs = nlohmann::json::array();
  for (const auto& r : rows)
    rs.push_back({{"h", r.h},
                  {"sup_ratio", r.sup_ratio},
                  {"argmax_x", r.argmax_x},
                  {"sup_alpha", r.sup_alpha},
                  {"cancellation_limited", r.cancellation_limited}});
  j["rows"] = rs;
  return j.dump();
}

std::string Verdict::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "h,x,abs_alpha,rho\n";
  for (const auto& r : rows) {
    for (size_t i = 0; i < r.x_alpha.size(); ++i) {
      os << r.h << ',' << r.x_alpha[i] << ',' << r.abs_alpha[i] << ',';
      auto it = std::find(r.x_rho.begin(), r.x_rho.end(), r.x_alpha[i]);
      if (it != r.x_rho.end()) os << r.rho[it - r.x_rho.begin()];
      os << '\n';
    }
  }
  return os.str();
}

double triangular_certificate(const TriangularSystem& ts, double h, double* diagonal_mismatch) {
  const pathsolve::PathMesh mesh = pathsolve::PathMesh::build({-ts.L, ts.L}, 0.25 * h);
  const cplx a0 = alpha_at(ts, h, 0.0, true, 0.0);
  pathsolve::Field alpha = pathsolve::Field::Zero(2, mesh.nodes());
  for (int i = 0; i < mesh.nodes(); ++i) alpha(0, i) = alpha_at(ts, h, a0, true, mesh.z[i].real());
  pathsolve::Field d = pathsolve::differentiate(mesh, alpha);
  MatrixFunction f = MatrixFunction::from_callable("triangular", 2, [ts](cplx x, double hh) { return ts(x, hh); });
  exactdiag::AnalyticBlockSystem sys = exactdiag::AnalyticBlockSystem::from_matrix(f, 1, ts.p);
  return exactdiag::certify(sys, h, mesh.z, alpha, d, diagonal_mismatch);
}

ResonanceReport scalar_resonance(const std::vector<cplx>& c, cplx mu, double h, double tol) {
  ResonanceReport r;
  r.alpha_coeffs.assign(c.size(), 0.0);
  for (size_t j = 0; j < c.size(); ++j) {
    const cplx denom = static_cast<double>(j) * h - mu;
    if (std::abs(denom) < tol * std::max(1.0, std::abs(mu))) {
      if (c[j] != 0.0 && !r.resonant) {
        r.resonant = true;
        r.index = static_cast<int>(j);
      }
      continue;
    }
    r.alpha_coeffs[j] = c[j] / denom;
  }
  return r;
}

ResonanceReport singular_resonance(const std::vector<cplx>& phi_coeffs, double h, double tol) {
  std::vector<cplx> c(phi_coeffs.size() + 1, 0.0);
  for (size_t j = 0; j < phi_coeffs.size(); ++j) c[j + 1] = phi_coeffs[j];
  return scalar_resonance(c, 1.0, h, tol);
}

std::vector<cplx> taylor_coefficients(const std::function<cplx(cplx)>& f, int count, double radius, int samples) {
  if (count < 1 || !(radius > 0.0)) throw InputError("taylor_coefficients needs count >= 1 and radius > 0");
  int n = 64;
  while (n < std::max(samples, 2 * count)) n *= 2;
  std::vector<cplx> vals(n), coef;
  for (int k = 0; k < n; ++k) vals[k] = f(std::polar(radius, 2.0 * std::numbers::pi * k / n));
  Eigen::FFT<double> fft;
  fft.fwd(coef, vals);
  std::vector<cplx> out(count);
  for (int j = 0; j < count; ++j) out[j] = coef[j] / (static_cast<double>(n) * std::pow(radius, j));
  return out;
}

}  // namespace semidiag::counterex
