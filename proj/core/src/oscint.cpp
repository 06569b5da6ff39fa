#include "semidiag/oscint.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <json.hpp>
#include <unsupported/Eigen/FFT>

#include "semidiag/errors.hpp"
#include "semidiag/fit.hpp"
#include "semidiag/lobatto.hpp"

namespace semidiag::oscint {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr int kNodes = 16;

struct SegmentSum {
  cplx value{};
  double magnitude = 0.0;
};

SegmentSum composite(const std::function<cplx(cplx)>& f, cplx a, cplx b, int panels) {
  const GaussLegendreRule& gl = GaussLegendreRule::get(kNodes);
  const cplx step = (b - a) / static_cast<double>(panels);
  const double scale = std::abs(step);
  SegmentSum s;
  for (int p = 0; p < panels; ++p) {
    const cplx start = a + step * static_cast<double>(p);
    for (int j = 0; j < kNodes; ++j) {
      const cplx v = f(start + step * (0.5 * (gl.nodes(j) + 1.0))) * (0.5 * gl.weights(j));
      s.value += v;
      s.magnitude += std::abs(v);
    }
  }
  s.value *= step;
  s.magnitude *= scale;
  return s;
}

QuadResult integrate(const std::function<cplx(cplx)>& f, const Contour& c, double scale, const QuadOptions& opt) {
  c.validate();
  QuadResult res;
  for (size_t k = 0; k + 1 < c.vertices.size(); ++k) {
    const cplx a = c.vertices[k], b = c.vertices[k + 1];
    int panels = k < c.panels.size() && c.panels[k] > 0
                     ? c.panels[k]
                     : std::max(1, static_cast<int>(std::ceil(std::abs(b - a) / scale)));
    SegmentSum prev = composite(f, a, b, panels);
    bool done = false;
    for (int level = 0; level < opt.max_levels; ++level) {
      panels *= 2;
      SegmentSum next = composite(f, a, b, panels);
      if (!std::isfinite(next.value.real()) || !std::isfinite(next.value.imag()))
        throw NumericalError("quadrature produced a non-finite value on segment " + std::to_string(k));
      const double diff = std::abs(next.value - prev.value);
      const double roundoff = 64.0 * kEps * next.magnitude;
      const double target = std::max(opt.rel_tol * std::abs(next.value), opt.abs_floor);
      prev = next;
      if (diff <= target) {
        res.error += diff;
        done = true;
      } else if (diff <= roundoff) {
        res.error += roundoff;
        res.cancellation_limited = true;
        done = true;
      }
      if (done) break;
    }
    if (!done)
      throw ConvergenceFailure("quadrature did not converge after " + std::to_string(opt.max_levels) +
                                   " refinements on segment " + std::to_string(k),
                               static_cast<double>(panels));
    res.value += prev.value;
    res.magnitude += prev.magnitude;
    res.panels += panels;
  }
  return res;
}

// Splits real segments at 0 so that a cutoff never sits inside a panel.
Contour split_at_zero(const Contour& c) {
  Contour out;
  out.vertices.push_back(c.vertices.front());
  for (size_t k = 0; k + 1 < c.vertices.size(); ++k) {
    const cplx a = c.vertices[k], b = c.vertices[k + 1];
    const int pk = k < c.panels.size() ? c.panels[k] : 0;
    if (a.imag() == 0.0 && b.imag() == 0.0 && a.real() * b.real() < 0.0) {
      out.vertices.push_back(0.0);
      out.panels.push_back(pk);
    }
    out.vertices.push_back(b);
    out.panels.push_back(pk);
  }
  return out;
}

}  // namespace

Contour Contour::reversed() const {
  Contour r;
  r.vertices.assign(vertices.rbegin(), vertices.rend());
  r.panels.assign(panels.rbegin(), panels.rend());
  return r;
}

Contour Contour::then(const Contour& next) const {
  if (vertices.empty()) return next;
  if (next.vertices.empty()) return *this;
  if (std::abs(vertices.back() - next.vertices.front()) > 1e-14 * (1.0 + std::abs(vertices.back())))
    throw InputError("contours do not connect");
  Contour r = *this;
  const size_t segs = vertices.size() - 1;
  r.panels.resize(panels.empty() && next.panels.empty() ? 0 : segs, 0);
  r.vertices.insert(r.vertices.end(), next.vertices.begin() + 1, next.vertices.end());
  if (!r.panels.empty()) {
    std::vector<int> np = next.panels;
    np.resize(next.vertices.size() - 1, 0);
    r.panels.insert(r.panels.end(), np.begin(), np.end());
  }
  return r;
}

double Contour::length() const {
  double len = 0.0;
  for (size_t k = 0; k + 1 < vertices.size(); ++k) len += std::abs(vertices[k + 1] - vertices[k]);
  return len;
}

void Contour::validate() const {
  if (vertices.size() < 2) throw InputError("contour needs at least two vertices");
  for (size_t k = 0; k + 1 < vertices.size(); ++k)
    if (vertices[k] == vertices[k + 1]) throw InputError("contour has repeated consecutive vertices");
  if (!panels.empty() && panels.size() != vertices.size() - 1)
    throw InputError("contour panel counts do not match its segments");
}

Phase phase_from_expression(const mexpr::Expression& e) {
  return [e](cplx y, double h) { return e.eval(y, h); };
}

Phase quadratic_phase() {
  return [](cplx y, double) { return -(y * y + 2.0 * kI * y); };
}

QuadResult quad_function(const std::function<cplx(cplx)>& f, const Contour& c, double scale, const QuadOptions& opt) {
  if (!(scale > 0.0)) throw InputError("quadrature scale must be positive");
  return integrate(f, c, scale, opt);
}

QuadResult quad_contour(const Symbol& a, const Phase& phi, const Contour& c, double h, const QuadOptions& opt) {
  if (!(h > 0.0)) throw InputError("h must be positive");
  c.validate();
  auto f = [&](cplx y) { return std::exp(phi(y, h) / h) * a(y, h); };
  return integrate(f, a.cutoff_at_zero() ? split_at_zero(c) : c, h, opt);
}

QuadResult saddle_deformed_quad(const Symbol& a, const Phase& phi, double x, double h, cplx saddle, double eps,
                                const QuadOptions& opt) {
  if (!a.analytic()) throw PreconditionError("saddle deformation needs an analytic symbol; got " + a.name());
  if (!(x > 0.0)) throw InputError("half-width must be positive");
  Contour c;
  if (x > std::abs(saddle.real()) + eps && saddle.imag() != 0.0)
    c = Contour::polyline({-x, saddle - eps, saddle + eps, x});
  else if (saddle.imag() != 0.0)
    c = Contour::polyline({-x, cplx(-x, saddle.imag()), cplx(x, saddle.imag()), x});
  else
    c = Contour::segment(-x, x);
  return quad_contour(a, phi, c, h, opt);
}

cplx stationary_phase_estimate(const Symbol& a, const Phase& phi, cplx z0, double h, cplx direction) {
  const double d = 1e-3 * (1.0 + std::abs(z0));
  auto f = [&](cplx z) { return phi(z, h); };
  const cplx f0 = f(z0);
  const cplx second =
      (-f(z0 + 2.0 * d) + 16.0 * f(z0 + d) - 30.0 * f0 + 16.0 * f(z0 - d) - f(z0 - 2.0 * d)) / (12.0 * d * d);
  if (std::abs(second) < 1e-10) throw PreconditionError("degenerate saddle: second derivative vanishes");
  cplx root = std::sqrt(2.0 * kPi / (-second));
  if ((root / direction).real() < 0.0) root = -root;
  return std::sqrt(h) * std::exp(f0 / h) * a(z0, h) * root;
}

double AsymptoticFit::predict(double h) const {
  double lg = std::log(C) + p * std::log(h);
  if (std::isfinite(s)) lg -= c * std::pow(h, -1.0 / s);
  return std::exp(lg);
}

std::string AsymptoticFit::to_json() const {
  nlohmann::json j;
  j["model"] = model;
  j["C"] = C;
  j["p"] = p;
  j["c"] = c;
  j["s"] = std::isfinite(s) ? nlohmann::json(s) : nlohmann::json(nullptr);
  j["residual"] = residual;
  j["stretch"] = stretch;
  j["h_grid"] = h_grid;
  j["zero_signal"] = zero_signal;
  j["note"] = note;
  return j.dump();
}

std::string AsymptoticFit::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "h,re,im,abs,model\n";
  for (size_t i = 0; i < h_grid.size(); ++i)
    os << h_grid[i] << ',' << values[i].real() << ',' << values[i].imag() << ',' << std::abs(values[i]) << ','
       << (zero_signal ? 0.0 : predict(h_grid[i])) << '\n';
  return os.str();
}

AsymptoticFit fit_law(const std::vector<double>& h_grid, const std::vector<cplx>& values, double s) {
  AsymptoticFit f;
  f.s = s;
  f.model = std::isfinite(s) ? "C h^p exp(-c h^(-1/s))" : "C h^p";
  std::vector<std::vector<double>> rows;
  std::vector<double> y, hs;
  for (size_t i = 0; i < h_grid.size(); ++i) {
    const double v = std::abs(values[i]);
    if (!(v > 1e-280)) continue;
    hs.push_back(h_grid[i]);
    f.h_grid.push_back(h_grid[i]);
    f.values.push_back(values[i]);
    y.push_back(std::log(v));
    std::vector<double> row{1.0, std::log(h_grid[i])};
    if (std::isfinite(s)) row.push_back(-std::pow(h_grid[i], -1.0 / s));
    rows.push_back(row);
  }
  const size_t need = std::isfinite(s) ? 3 : 2;
  if (y.size() < need) {
    f.zero_signal = true;
    f.C = f.p = f.c = std::nan("");
    f.note = "too few nonzero samples to fit";
    f.h_grid = h_grid;
    f.values = values;
    return f;
  }
  fit::LinearFit lf = fit::least_squares(rows, y);
  f.C = std::exp(lf.coef[0]);
  f.p = lf.coef[1];
  f.c = std::isfinite(s) ? lf.coef[2] : 0.0;
  for (size_t i = 0; i < y.size(); ++i) {
    double model = 0.0;
    for (size_t k = 0; k < rows[i].size(); ++k) model += rows[i][k] * lf.coef[k];
    f.residual = std::max(f.residual, std::abs(y[i] - model) / std::max(1.0, std::abs(y[i])));
  }
  std::vector<double> inv_h, ll;
  bool ok = true;
  for (size_t i = 0; i < y.size(); ++i) {
    if (!(y[i] < 0.0)) ok = false;
    inv_h.push_back(1.0 / hs[i]);
    ll.push_back(-y[i]);
  }
  f.stretch = ok && y.size() >= 2 ? fit::loglog_slope(inv_h, ll) : std::nan("");
  if (f.residual > 0.1) f.note = "fit residual above 10%; extend the h-grid";
  return f;
}

std::vector<double> default_h_grid() { return {0.2, 0.1, 0.05, 0.025, 0.0125}; }

cplx gevrey_halfline_integral(double gevrey_theta, double h, const QuadOptions& opt) {
  if (!(gevrey_theta > 0.0)) throw InputError("gevrey_theta must be positive");
  const double s = 1.0 + 1.0 / gevrey_theta;
  const cplx d = s >= 2.0 ? std::polar(1.0, -kPi / 4) : std::polar(1.0, -kPi * (1.0 - 1.0 / s) / 2.0);
  const Symbol a = Symbol::gevrey_halfline(gevrey_theta);
  const Phase phi = quadratic_phase();
  auto logmag = [&](double t) {
    const cplx z = d * t;
    return (phi(z, h) / h).real() + std::log(std::abs(a(z, h)) + 1e-300);
  };
  // Peak of the integrand on a geometric scan, then out until 60 e-folds below it.
  double peak = -INFINITY, tpeak = 0.0;
  for (double t = 1e-4 * std::pow(h, 1.0 - 1.0 / s); t < 1e4; t *= 1.05) {
    const double v = logmag(t);
    if (v > peak) {
      peak = v;
      tpeak = t;
    }
  }
  std::vector<cplx> verts{0.0};
  double t = tpeak / 8.0;
  for (; t < tpeak; t *= 2.0) verts.push_back(d * t);
  verts.push_back(d * tpeak);
  double step = tpeak;
  t = tpeak;
  while (logmag(t) > peak - 60.0) {
    t += step;
    step *= 1.5;
    verts.push_back(d * t);
  }
  auto f = [&](cplx z) { return std::exp(phi(z, h) / h) * a(z, h); };
  return quad_function(f, Contour::polyline(verts), h, opt).value;
}

AsymptoticFit gevrey_halfline_asymptotics(double gevrey_theta, const std::vector<double>& h_grid) {
  std::vector<cplx> vals;
  for (double h : h_grid) vals.push_back(gevrey_halfline_integral(gevrey_theta, h));
  AsymptoticFit f = fit_law(h_grid, vals, 1.0 + 1.0 / gevrey_theta);
  if (!f.zero_signal && !(f.c > 0.0)) f.note += (f.note.empty() ? "" : "; ") + std::string("fitted c is not positive");
  return f;
}

cplx cr_halfline_integral(int r, double h, double x, const QuadOptions& opt) {
  if (r < 1) throw InputError("cr_halfline_rate needs r >= 1");
  const Symbol a = Symbol::cr_halfline(r);
  // Descent through 0 - i: the endpoint at 0 dominates and nothing cancels.
  return quad_contour(a, quadratic_phase(), Contour::polyline({0.0, -kI, x - kI, x}), h, opt).value;
}

AsymptoticFit cr_halfline_rate(int r, const std::vector<double>& h_grid, double x) {
  std::vector<cplx> vals;
  for (double h : h_grid) vals.push_back(cr_halfline_integral(r, h, x));
  AsymptoticFit f = fit_law(h_grid, vals, INFINITY);
  return f;
}

GevreyNorm gevrey_norm(const Symbol& a, double period, double s, double T, int log2_samples) {
  if (!(period > 0.0) || !(s >= 1.0) || log2_samples < 2 || log2_samples > 24)
    throw InputError("gevrey_norm: bad period, index or sample count");
  const int n = 1 << log2_samples;
  std::vector<cplx> samples(n), coef;
  for (int k = 0; k < n; ++k) samples[k] = a(period * k / n, 0.0);
  Eigen::FFT<double> fft;
  fft.fwd(coef, samples);
  double amax = 0.0;
  for (auto& c : coef) {
    c /= static_cast<double>(n);
    amax = std::max(amax, std::abs(c));
  }
  GevreyNorm g;
  const double floor = 1e3 * kEps * amax;
  std::vector<double> weighted(n / 2 + 1, 0.0);
  int top = 0;
  for (int j = 0; j <= n / 2; ++j) {
    double w2 = 0.0;
    const double weight = (1.0 + j) * std::exp(T * std::pow(static_cast<double>(j), 1.0 / s));
    for (int sign : {1, -1}) {
      if (j == 0 && sign < 0) break;
      if (j == n / 2 && sign < 0) break;
      const cplx c = coef[sign > 0 ? j : n - j];
      if (std::abs(c) <= floor) continue;
      w2 += std::norm(weight * c);
      top = std::max(top, j);
    }
    weighted[j] = w2;
  }
  g.resolved = top;
  double sum = 0.0;
  int arg = 0;
  for (int j = 0; j <= top; ++j) {
    sum += weighted[j];
    if (weighted[j] > weighted[arg]) arg = j;
  }
  for (int j = 3 * top / 4 + 1; j <= top; ++j) g.tail += weighted[j];
  if (!std::isfinite(sum)) throw NumericalError("gevrey norm overflows at mode " + std::to_string(arg));
  g.value = std::sqrt(sum);
  g.tail = std::sqrt(g.tail);
  // Weighted terms that peak in the top quarter indicate a divergent series.
  if (top >= 4 && arg > 3 * top / 4) {
    g.diverging = true;
    g.divergence_mode = arg;
  }
  return g;
}

}  // namespace semidiag::oscint
