#include "experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include <unsupported/Eigen/KroneckerProduct>

#include "semidiag/builtins.hpp"
#include "semidiag/counterex.hpp"
#include "semidiag/errors.hpp"
#include "semidiag/exactdiag.hpp"
#include "semidiag/fit.hpp"
#include "semidiag/kato.hpp"
#include "semidiag/manifold.hpp"
#include "semidiag/oscint.hpp"
#include "semidiag/repeated.hpp"
#include "semidiag/spectral.hpp"

namespace semidiag::cli {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Ctx {
  Report& report;
  int jobs = 1;

  void add(std::string name, double value, std::string rel, double bound, double target = 0.0) {
    Assertion a{std::move(name), value, std::move(rel), bound, target, false};
    if (a.relation == "<=") a.pass = value <= bound;
    else if (a.relation == ">=") a.pass = value >= bound;
    else if (a.relation == "within") a.pass = std::abs(value - target) <= bound;
    else a.pass = value == target;
    report.assertions.push_back(std::move(a));
  }
  void at_most(std::string n, double v, double b) { add(std::move(n), v, "<=", b); }
  void at_least(std::string n, double v, double b) { add(std::move(n), v, ">=", b); }
  void within(std::string n, double v, double target, double tol) { add(std::move(n), v, "within", tol, target); }
  void equals(std::string n, bool v, bool expected) { add(std::move(n), v ? 1.0 : 0.0, "==", 0.0, expected ? 1.0 : 0.0); }
  void note(std::string s) { report.notes.push_back(std::move(s)); }
  void file(const std::string& name, std::string content) { report.artifacts[name] = std::move(content); }
};

/// Runs fn(i) for i < n on up to `jobs` threads; results keep index order and
/// the first exception by index is rethrown.
template <class T>
std::vector<T> parallel_map(int jobs, int n, const std::function<T(int)>& fn) {
  std::vector<T> out(n);
  std::vector<std::exception_ptr> errs(n);
  auto work = [&](int start) {
    for (int i = start; i < n; i += jobs) {
      try {
        out[i] = fn(i);
      } catch (...) {
        errs[i] = std::current_exception();
      }
    }
  };
  if (jobs <= 1 || n <= 1) {
    work(0);
  } else {
    jobs = std::min(jobs, n);
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(work, t);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
  return out;
}

std::string two_column(const std::vector<double>& x, const std::vector<double>& y) {
  std::ostringstream os;
  os.precision(17);
  for (size_t i = 0; i < x.size(); ++i) os << x[i] << ' ' << y[i] << '\n';
  return os.str();
}

MatrixFunction read_system(Section& s, const std::string& key = "system") {
  const json v = s.raw(key);
  try {
    return parse_matrix(v.dump());
  } catch (const InputError& e) {
    s.fail(key, e.what());
  }
}

Symbol read_symbol(Section& s, const std::string& key) {
  const json v = s.raw(key);
  try {
    return parse_symbol(v.dump());
  } catch (const InputError& e) {
    s.fail(key, e.what());
  }
}

mexpr::Expression read_expression(Section& s, const std::string& key) {
  const std::string src = s.text(key);
  try {
    return mexpr::Expression::parse(src);
  } catch (const InputError& e) {
    s.fail(key, e.what());
  }
}

exactdiag::SolverOptions read_solver(Section& parent) {
  Section s = parent.child("solver");
  exactdiag::SolverOptions o;
  o.certificate_tol = s.number("certificate_tol", 1e-8);
  o.picard.tol = s.number("picard_tol", 1e-11);
  o.picard.max_iterations = s.integer("max_iterations", 100, 1);
  o.nodes_per_panel = s.integer("nodes_per_panel", 16, 3);
  o.require_certificate = s.flag("require_certificate", false);
  parent.adopt("solver", s);
  return o;
}

double slope_or_nan(const std::vector<double>& h, const std::vector<double>& y) {
  if (h.size() < 2) return kNaN;
  for (double v : y)
    if (!(v > 0.0)) return kNaN;
  return fit::loglog_slope(h, y);
}

Symbol polynomial_symbol(const std::vector<cplx>& c) {
  return Symbol::custom("polynomial", [c](cplx z, double) {
    cplx v = 0.0;
    for (size_t k = c.size(); k-- > 0;) v = v * z + c[k];
    return v;
  });
}

// ---- kinds ------------------------------------------------------------------

void run_repeated(Section& s, Ctx& ctx, bool dry) {
  const MatrixFunction f = read_system(s);
  const int m = s.integer("m", 1, 1);
  const int order = s.integer("order", 1, 1);
  const int target = s.integer("target_order", order + 2, order + 1);
  const std::vector<double> hg = s.numbers("h_grid", {0.1, 0.05, 0.025, 0.0125}, true);
  Section dom = s.child("domain");
  const cplx a = dom.complex("start", 0.0), b = dom.complex("end", 1.0);
  const double ppu = dom.number("points_per_unit", 400.0);
  s.adopt("domain", dom);
  Section nw = s.child("newton");
  repeated::NewtonOptions nopt;
  nopt.tol = nw.number("tol", 1e-12);
  nopt.max_iterations = nw.integer("max_iterations", 25, 1);
  s.adopt("newton", nw);
  Section as = s.child("assert");
  const bool check_slopes = as.flag("check_slopes", true);
  const double slope_tol = as.number("slope_tol", 0.15);
  const bool cap = as.has("max_final_residual");
  const double max_final = cap ? as.number("max_final_residual") : 0.0;
  const bool cap_conj = as.has("max_conjugation_residual");
  const double max_conj = cap_conj ? as.number("max_conjugation_residual") : 0.0;
  s.adopt("assert", as);
  if (m >= f.dim()) s.fail("m", "block size must be smaller than the system dimension");
  if (dry) return;

  const Grid grid = Grid::uniform(a, b, ppu);
  auto make = [&](double h) { return SampledBlockSystem::from_matrix(f, m, order, h, grid); };
  const repeated::HStudy st = repeated::study(make, hg, target, nopt);

  json rows = json::array();
  std::ostringstream csv;
  csv.precision(17);
  csv << "order,h,sup_residual\n";
  double final_sup = 0.0;
  for (const auto& r : st.rows) {
    rows.push_back({{"order", r.order}, {"h", r.h}, {"sup_residual", r.sup_residual}});
    csv << r.order << ',' << r.h << ',' << r.sup_residual << '\n';
    if (r.order == target) final_sup = std::max(final_sup, r.sup_residual);
  }
  ctx.report.metrics["rows"] = rows;
  ctx.report.metrics["order_slopes"] = st.order_slopes;
  ctx.report.metrics["conjugation_residuals"] = st.conjugation_residuals;
  ctx.report.metrics["conjugation_slope"] = st.conjugation_slope;
  ctx.report.metrics["max_condition"] = st.max_condition;
  ctx.report.metrics["fd_noise"] = st.fd_noise;
  ctx.report.metrics["final_sup_residual"] = final_sup;
  ctx.file("repeated_rows.csv", csv.str());
  for (int k = order; k <= target; ++k) {
    std::vector<double> x, y;
    for (const auto& r : st.rows)
      if (r.order == k) {
        x.push_back(r.h);
        y.push_back(r.sup_residual);
      }
    ctx.file("residual_order" + std::to_string(k) + ".dat", two_column(x, y));
  }
  if (check_slopes)
    for (size_t i = 0; i < st.order_slopes.size(); ++i) {
      const int k = order + static_cast<int>(i);
      ctx.within("order_slope_k" + std::to_string(k), st.order_slopes[i], k, slope_tol);
    }
  if (cap) ctx.at_most("final_sup_residual", final_sup, max_final);
  if (cap_conj)
    ctx.at_most("conjugation_residual",
                *std::max_element(st.conjugation_residuals.begin(), st.conjugation_residuals.end()), max_conj);
}

void run_finite(Section& s, Ctx& ctx, bool dry) {
  const MatrixFunction f = read_system(s);
  const int m = s.integer("m", 1, 1);
  const int p = s.integer("p", 1, 1);
  const cplx center = s.complex("center", 0.0);
  const std::vector<double> hg = s.numbers("h_grid", {0.05, 0.025}, true);
  Section d = s.child("diamond");
  exactdiag::DiamondParams dp;
  dp.half_length = d.number("half_length", dp.half_length);
  dp.eps = d.number("eps", dp.eps);
  if (d.has("gamma")) dp.gamma = d.complex("gamma", 1.0);
  dp.apex_fractions = d.numbers("apex_fractions", dp.apex_fractions);
  s.adopt("diamond", d);
  const exactdiag::SolverOptions sopt = read_solver(s);
  const bool contour_check = s.flag("contour_check", true);
  Section as = s.child("assert");
  const double cert_tol = as.number("certificate", 1e-8);
  const double contraction = as.number("contraction", 0.9);
  const double slope_tol = as.number("slope_tol", 0.15);
  const double contour_tol = as.number("contour", 1e-10);
  s.adopt("assert", as);
  if (m >= f.dim()) s.fail("m", "block size must be smaller than the system dimension");
  if (dry) return;

  const auto sys = exactdiag::AnalyticBlockSystem::from_matrix(f, m, p);
  struct Out {
    exactdiag::Conjugator c;
    double contour = kNaN;
  };
  auto res = parallel_map<Out>(ctx.jobs, static_cast<int>(hg.size()), [&](int i) {
    Out o;
    o.c = exactdiag::solve_finite(sys, center, hg[i], dp, sopt);
    if (contour_check) o.contour = exactdiag::contour_discrepancy(sys, center, hg[i], dp, {0.8, 1.2}, sopt);
    return o;
  });
  json rows = json::array();
  std::vector<double> dev;
  for (size_t i = 0; i < hg.size(); ++i) {
    const auto& c = res[i].c;
    dev.push_back(c.deviation());
    const Mat a12 = c.alpha12[c.nearest(center)];
    rows.push_back({{"h", hg[i]},
                    {"certificate", c.certificate},
                    {"diagonal_mismatch", c.diagonal_mismatch},
                    {"contraction", c.contraction},
                    {"iterations", c.iterations},
                    {"deviation", c.deviation()},
                    {"path_discrepancy", c.path_discrepancy},
                    {"contour_discrepancy", res[i].contour},
                    {"alpha12_center", complex_to_json(a12(0, 0))},
                    {"gamma", complex_to_json(c.gamma)},
                    {"eta", c.eta}});
    const std::string tag = "h" + std::to_string(i);
    ctx.at_most("certificate_" + tag, c.certificate, cert_tol);
    ctx.at_most("contraction_" + tag, c.contraction, contraction);
    if (contour_check) ctx.at_most("contour_discrepancy_" + tag, res[i].contour, contour_tol);
    ctx.file("conjugator_" + tag + ".json", c.to_json());
    for (const auto& n : c.notes) ctx.note(tag + ": " + n);
  }
  const double slope = slope_or_nan(hg, dev);
  ctx.report.metrics["rows"] = rows;
  ctx.report.metrics["deviation_slope"] = slope;
  ctx.file("deviation.dat", two_column(hg, dev));
  if (hg.size() >= 2) ctx.within("deviation_slope", slope, p, slope_tol);
}

void run_infinity(Section& s, Ctx& ctx, bool dry) {
  const MatrixFunction f = read_system(s);
  const int m = s.integer("m", 1, 1);
  const int p = s.integer("p", 1, 1);
  const std::vector<double> hg = s.numbers("h_grid", {0.05}, true);
  Section w = s.child("wedge");
  exactdiag::WedgeParams wp;
  wp.apex = w.number("apex", wp.apex);
  wp.eps = w.number("eps", wp.eps);
  wp.R = w.number("R", wp.R);
  wp.pad = w.number("pad", wp.pad);
  wp.probe = w.number("probe", wp.probe);
  wp.output_stride = w.integer("output_stride", 1, 1);
  if (w.has("direction")) wp.direction = w.complex("direction", 1.0);
  s.adopt("wedge", w);
  const exactdiag::SolverOptions sopt = read_solver(s);
  Section cf = s.child("closed_form");
  const bool has_cf = cf.has("alpha12");
  mexpr::Expression expr;
  double re_min = 0.0, re_max = 0.0;
  if (has_cf) {
    expr = read_expression(cf, "alpha12");
    re_min = cf.number("re_min", 2.0);
    re_max = cf.number("re_max", 10.0);
  }
  s.adopt("closed_form", cf);
  Section dc = s.child("decay");
  const bool check_decay = dc.has("theta_rate");
  const double theta_rate = check_decay ? dc.number("theta_rate") : 0.0;
  const double decay_from = dc.number("re_min", 2.0);
  s.adopt("decay", dc);
  Section as = s.child("assert");
  const double cert_tol = as.number("certificate", 1e-8);
  const double err_tol = as.number("max_error", 1e-8);
  const double decay_factor = as.number("decay_factor", 0.9);
  s.adopt("assert", as);
  if (dry) return;

  const auto sys = exactdiag::AnalyticBlockSystem::from_matrix(f, m, p);
  auto res = parallel_map<exactdiag::Conjugator>(ctx.jobs, static_cast<int>(hg.size()),
                                                 [&](int i) { return exactdiag::solve_infinity(sys, hg[i], wp, sopt); });
  json rows = json::array();
  for (size_t i = 0; i < hg.size(); ++i) {
    const auto& c = res[i];
    const double h = hg[i];
    const std::string tag = "h" + std::to_string(i);
    double err = kNaN;
    std::vector<double> re, mag;
    for (size_t k = 0; k < c.points.size(); ++k) {
      const cplx x = c.points[k];
      if (x.imag() == 0.0) {
        re.push_back(x.real());
        mag.push_back(c.alpha12[k].norm());
      }
      if (has_cf && x.real() >= re_min && x.real() <= re_max) {
        const double e = std::abs(c.alpha12[k](0, 0) - expr.eval(x, h));
        err = std::isnan(err) ? e : std::max(err, e);
      }
    }
    const double rate = check_decay ? exactdiag::decay_rate(c, decay_from) : kNaN;
    rows.push_back({{"h", h},
                    {"certificate", c.certificate},
                    {"contraction", c.contraction},
                    {"iterations", c.iterations},
                    {"method", c.method},
                    {"eta", c.eta},
                    {"tail_bound", c.tail_bound},
                    {"max_closed_form_error", err},
                    {"decay_rate", rate},
                    {"points", c.points.size()}});
    ctx.at_most("certificate_" + tag, c.certificate, cert_tol);
    if (has_cf) ctx.at_most("closed_form_error_" + tag, err, err_tol);
    if (check_decay) ctx.at_least("decay_rate_" + tag, rate, decay_factor * std::min(theta_rate, c.eta / h));
    ctx.file("alpha12_real_axis_" + tag + ".dat", two_column(re, mag));
    ctx.file("conjugator_" + tag + ".json", c.to_json());
    for (const auto& n : c.notes) ctx.note(tag + ": " + n);
  }
  ctx.report.metrics["rows"] = rows;
}

bool expected_singular_resonance(const std::vector<cplx>& phi, double h, int* index) {
  for (size_t j = 1; j <= phi.size(); ++j)
    if (std::abs(static_cast<double>(j) * h - 1.0) < 1e-12 && phi[j - 1] != 0.0) {
      *index = static_cast<int>(j);
      return true;
    }
  return false;
}

void run_singular(Section& s, Ctx& ctx, bool dry) {
  const std::vector<cplx> phi = s.complexes("phi", {1.0, 0.5, -0.25});
  if (phi.empty()) s.fail("phi", "needs at least one coefficient");
  const std::vector<double> hg = s.numbers("h_grid", {0.045}, true);
  const std::vector<double> res_h = s.numbers("resonance_h", {1.0 / 3.0}, true);
  Section sd = s.child("slit_disk");
  exactdiag::SlitDiskParams sp;
  sp.radius = sd.number("radius", sp.radius);
  sp.sample_radius = sd.number("sample_radius", sp.sample_radius);
  sp.samples = sd.integer("samples", sp.samples, 1);
  sp.origin_depth = sd.number("origin_depth", sp.origin_depth);
  sp.eps = sd.number("eps", sp.eps);
  s.adopt("slit_disk", sd);
  const exactdiag::SolverOptions sopt = read_solver(s);
  Section as = s.child("assert");
  const double err_tol = as.number("max_error", 1e-8);
  const double cert_tol = as.number("certificate", 1e-8);
  s.adopt("assert", as);
  if (dry) return;

  const auto sys = exactdiag::AnalyticBlockSystem::from_matrix(builtins::singular_example(polynomial_symbol(phi)), 1, 1);
  json rows = json::array();
  for (size_t i = 0; i < hg.size(); ++i) {
    const double h = hg[i];
    const std::string tag = "h" + std::to_string(i);
    int idx = 0;
    if (expected_singular_resonance(phi, h, &idx)) {
      ctx.note(tag + ": h is resonant; listed in h_grid but skipped");
      continue;
    }
    const auto r = exactdiag::solve_singular(sys, h, sp, sopt);
    double err = 0.0;
    for (size_t k = 0; k < r.conj.points.size(); ++k) {
      const cplx z = r.conj.points[k];
      cplx series = 0.0;
      for (size_t j = 1; j <= phi.size(); ++j)
        series += phi[j - 1] / (static_cast<double>(j) * h - 1.0) * std::pow(z, static_cast<double>(j));
      err = std::max(err, std::abs(r.conj.alpha12[k](0, 0) - series));
    }
    rows.push_back({{"h", h},
                    {"certificate", r.conj.certificate},
                    {"max_series_error", err},
                    {"alpha12_at_origin", complex_to_json(r.alpha12_at_origin(0, 0))},
                    {"resonant", r.resonant},
                    {"note", r.note}});
    ctx.at_most("series_error_" + tag, err, err_tol);
    ctx.at_most("certificate_" + tag, r.conj.certificate, cert_tol);
    ctx.at_most("origin_value_" + tag, std::abs(r.alpha12_at_origin(0, 0)), err_tol);
    ctx.file("conjugator_" + tag + ".json", r.conj.to_json());
  }
  json rrows = json::array();
  for (size_t i = 0; i < res_h.size(); ++i) {
    int idx = 0;
    const bool expected = expected_singular_resonance(phi, res_h[i], &idx);
    const auto r = exactdiag::solve_singular(sys, res_h[i], sp, sopt);
    rrows.push_back({{"h", res_h[i]}, {"resonant", r.resonant}, {"index", r.resonant_index}, {"note", r.note}});
    ctx.equals("resonance_detected_" + std::to_string(i), r.resonant, expected);
    if (expected) ctx.within("resonance_index_" + std::to_string(i), r.resonant_index, idx, 0.0);
  }
  ctx.report.metrics["rows"] = rows;
  ctx.report.metrics["resonance"] = rrows;
}

void run_gap(Section& s, Ctx& ctx, bool dry) {
  const MatrixFunction f = read_system(s);
  const int m = s.integer("m", 1, 1);
  const int p = s.integer("p", 1, 1);
  const std::vector<double> hg = s.numbers("h_grid", {0.05, 0.025}, true);
  Section g = s.child("interval");
  exactdiag::GapParams gp;
  gp.x_lo = g.number("x_lo", gp.x_lo);
  gp.x_hi = g.number("x_hi", gp.x_hi);
  gp.pad = g.number("pad", gp.pad);
  gp.max_panel = g.number("max_panel", gp.max_panel);
  s.adopt("interval", g);
  const exactdiag::SolverOptions sopt = read_solver(s);
  Section as = s.child("assert");
  const double cert_tol = as.number("certificate", 1e-8);
  const double slope_tol = as.number("slope_tol", 0.15);
  s.adopt("assert", as);
  if (!(gp.x_lo < gp.x_hi)) s.fail("interval", "x_lo must be below x_hi");
  if (dry) return;

  const auto sys = exactdiag::AnalyticBlockSystem::from_matrix(f, m, p);
  auto res = parallel_map<exactdiag::Conjugator>(ctx.jobs, static_cast<int>(hg.size()),
                                                 [&](int i) { return exactdiag::solve_gap_cr(sys, hg[i], gp, sopt); });
  json rows = json::array();
  std::vector<double> dev;
  for (size_t i = 0; i < hg.size(); ++i) {
    const auto& c = res[i];
    dev.push_back(c.deviation());
    rows.push_back({{"h", hg[i]},
                    {"certificate", c.certificate},
                    {"contraction", c.contraction},
                    {"deviation", c.deviation()},
                    {"method", c.method}});
    ctx.at_most("certificate_h" + std::to_string(i), c.certificate, cert_tol);
    ctx.file("conjugator_h" + std::to_string(i) + ".json", c.to_json());
  }
  const double slope = slope_or_nan(hg, dev);
  ctx.report.metrics["rows"] = rows;
  ctx.report.metrics["deviation_slope"] = slope;
  ctx.file("deviation.dat", two_column(hg, dev));
  if (hg.size() >= 2) ctx.within("deviation_slope", slope, p, slope_tol);
}

void run_quadstat(Section& s, Ctx& ctx, bool dry) {
  const std::string mode = s.text("mode", "gaussian");
  if (mode != "gaussian" && mode != "regimes") s.fail("mode", "must be \"gaussian\" or \"regimes\"");
  const bool gaussian = mode == "gaussian";
  const std::vector<double> hg =
      s.numbers("h_grid", gaussian ? std::vector<double>{0.2, 0.1, 0.05} : oscint::default_h_grid(), true);
  const double eps = s.number("saddle_eps", 0.25);
  Section as = s.child("assert");
  double rel_tol = 0, ratio_bound = 0, const_tol = 0, slope_target = 0, slope_tol = 0, x_a = 0, x_b = 0;
  if (gaussian) {
    x_b = s.number("x", 2.0);
    rel_tol = as.number("rel_error", 1e-6);
  } else {
    x_a = s.number("x_inner", 0.5);
    x_b = s.number("x_outer", 2.0);
    ratio_bound = as.number("inner_ratio_bound", 10.0);
    const_tol = as.number("constant_rel_tol", 0.02);
    slope_target = as.number("extra_slope", 0.5);
    slope_tol = as.number("extra_slope_tol", 0.1);
  }
  s.adopt("assert", as);
  if (dry) return;

  const oscint::Phase phi = oscint::quadratic_phase();
  const Symbol one = Symbol::constant(1.0);
  json rows = json::array();
  if (gaussian) {
    double worst = 0.0;
    for (double h : hg) {
      const auto q = oscint::saddle_deformed_quad(one, phi, x_b, h, -kI, eps);
      const cplx exact = std::sqrt(std::numbers::pi * h) * std::exp(-1.0 / h);
      const double rel = std::abs(q.value - exact) / std::abs(exact);
      worst = std::max(worst, rel);
      rows.push_back({{"h", h}, {"value", complex_to_json(q.value)}, {"rel_error", rel}, {"panels", q.panels}});
    }
    ctx.report.metrics["rows"] = rows;
    ctx.at_most("max_rel_error", worst, rel_tol);
    return;
  }
  const Symbol shifted = Symbol::from_expression(mexpr::Expression::parse("x + i"));
  std::vector<double> ratio_a, const_b, extra;
  bool limited = false;
  for (double h : hg) {
    const auto qa = oscint::saddle_deformed_quad(one, phi, x_a, h, -kI, eps);
    const auto qb = oscint::saddle_deformed_quad(one, phi, x_b, h, -kI, eps);
    const auto qc = oscint::saddle_deformed_quad(shifted, phi, x_b, h, -kI, eps);
    limited = limited || qc.cancellation_limited;
    ratio_a.push_back(std::abs(qa.value) / (h * std::exp(-x_a * x_a / h)));
    const_b.push_back(std::abs(qb.value) / (std::sqrt(h) * std::exp(-1.0 / h)));
    extra.push_back(std::abs(qc.value) / std::abs(qb.value));
    rows.push_back({{"h", h},
                    {"inner_ratio", ratio_a.back()},
                    {"outer_constant", const_b.back()},
                    {"shifted_over_plain", extra.back()},
                    {"shifted_cancellation_limited", qc.cancellation_limited}});
  }
  if (limited) ctx.note("the shifted-amplitude integral hit the roundoff floor of its contour on part of the grid");
  const double slope = fit::loglog_slope(hg, extra);
  ctx.report.metrics["rows"] = rows;
  ctx.report.metrics["extra_slope"] = slope;
  ctx.file("inner_ratio.dat", two_column(hg, ratio_a));
  ctx.file("outer_constant.dat", two_column(hg, const_b));
  ctx.file("shifted_over_plain.dat", two_column(hg, extra));
  ctx.at_most("inner_ratio_max", *std::max_element(ratio_a.begin(), ratio_a.end()), ratio_bound);
  ctx.within("outer_constant_rel", const_b.back() / std::sqrt(std::numbers::pi), 1.0, const_tol);
  ctx.within("extra_slope", slope, slope_target, slope_tol);
}

void run_gevrey(Section& s, Ctx& ctx, bool dry) {
  const double t = s.number("gevrey_theta", 1.0);
  if (!(t > 0.0)) s.fail("gevrey_theta", "must be positive");
  const std::vector<double> hg = s.numbers("h_grid", oscint::default_h_grid(), true);
  Section as = s.child("assert");
  const double sgev = 1.0 + 1.0 / t;
  const double stretch_tol = as.number("stretch_tol", 0.05);
  const double c_target = as.number("c", 2.0);
  const double c_tol = as.number("c_tol", 0.2);
  const double p_tol = as.number("p_tol", 0.1);
  s.adopt("assert", as);
  if (dry) return;
  const auto fit = oscint::gevrey_halfline_asymptotics(t, hg);
  ctx.report.metrics["fit"] = json::parse(fit.to_json());
  ctx.file("gevrey_values.csv", fit.to_csv());
  ctx.within("stretch", fit.stretch, 1.0 / sgev, stretch_tol);
  ctx.within("c", fit.c, c_target, c_tol);
  ctx.within("p", fit.p, 1.0 - 1.0 / (2.0 * sgev), p_tol);
}

void run_cr(Section& s, Ctx& ctx, bool dry) {
  const std::vector<double> rs = s.numbers("r", {1, 3}, true);
  const std::vector<double> hg = s.numbers("h_grid", {0.1, 0.05, 0.025, 0.0125}, true);
  const double x = s.number("x", 2.0);
  Section as = s.child("assert");
  const double tol = as.number("slope_tol", 0.15);
  s.adopt("assert", as);
  for (double r : rs)
    if (r != std::floor(r)) s.fail("r", "orders must be integers");
  if (dry) return;
  json fits = json::array();
  for (double r : rs) {
    const auto fit = oscint::cr_halfline_rate(static_cast<int>(r), hg, x);
    fits.push_back(json::parse(fit.to_json()));
    ctx.file("cr" + std::to_string(static_cast<int>(r)) + ".csv", fit.to_csv());
    ctx.within("power_r" + std::to_string(static_cast<int>(r)), fit.p, r, tol);
  }
  ctx.report.metrics["fits"] = fits;
}

void run_counterexample(Section& s, Ctx& ctx, bool dry) {
  counterex::TriangularSystem ts;
  ts.theta = read_symbol(s, "theta");
  ts.p = s.integer("p", 1, 1);
  ts.L = s.number("L", 1.0);
  if (!(ts.L > 0.0)) s.fail("L", "must be positive");
  const std::vector<double> hg = s.numbers("h_grid", {0.1, 0.05, 0.025, 0.0125}, true);
  Section o = s.child("options");
  counterex::CertificateOptions co;
  co.bound = o.number("bound", co.bound);
  co.tail_growth = o.number("tail_growth", co.tail_growth);
  co.fit_tolerance = o.number("fit_tolerance", co.fit_tolerance);
  co.alpha.points_per_unit = o.integer("points_per_unit", co.alpha.points_per_unit, 1);
  s.adopt("options", o);
  Section ex = s.child("expect");
  const bool has_verdict = ex.has("bounded");
  const bool want_bounded = has_verdict ? ex.flag("bounded", false) : false;
  const bool has_growth = ex.has("growth");
  const double growth = has_growth ? ex.number("growth") : 0.0;
  const double growth_tol = ex.number("growth_tol", 0.2);
  const bool agree = ex.flag("sides_agree", true);
  s.adopt("expect", ex);
  if (hg.size() < 4) s.fail("h_grid", "needs at least four step sizes");
  if (dry) return;
  const auto v = counterex::boundedness_certificate(ts, hg, co);
  ctx.report.metrics["verdict"] = json::parse(v.to_json());
  ctx.report.metrics["unbounded"] = !v.bounded;
  ctx.file("verdict.json", v.to_json());
  ctx.file("counterexample.csv", v.to_csv());
  std::vector<double> sup;
  for (const auto& r : v.rows) sup.push_back(r.sup_ratio);
  std::vector<double> hs;
  for (const auto& r : v.rows) hs.push_back(r.h);
  ctx.file("sup_ratio.dat", two_column(hs, sup));
  if (!v.note.empty()) ctx.note(v.note);
  if (has_verdict) ctx.equals("bounded", v.bounded, want_bounded);
  if (agree) ctx.equals("sides_agree", v.sides_agree, true);
  if (has_growth) ctx.within("growth", v.growth, growth, growth_tol);
}

void run_resonance(Section& s, Ctx& ctx, bool dry) {
  const std::vector<cplx> phi = s.complexes("phi", {0.0, 0.0, 1.0});
  auto cases = s.children("cases");
  struct Case {
    double h;
    bool has_expect;
    bool expect;
  };
  std::vector<Case> cs;
  for (auto& c : cases) {
    Case k;
    k.h = c.number("h");
    if (!(k.h > 0.0)) c.fail("h", "must be positive");
    k.has_expect = c.has("expect_resonant");
    k.expect = k.has_expect ? c.flag("expect_resonant", false) : false;
    cs.push_back(k);
  }
  s.adopt("cases", cases);
  if (cs.empty()) s.fail("cases", "needs at least one case");
  if (dry) return;
  json rows = json::array();
  for (size_t i = 0; i < cs.size(); ++i) {
    const auto r = counterex::singular_resonance(phi, cs[i].h);
    json coeffs = json::array();
    for (cplx a : r.alpha_coeffs) coeffs.push_back(complex_to_json(a));
    rows.push_back({{"h", cs[i].h}, {"resonant", r.resonant}, {"index", r.index}, {"alpha_coeffs", coeffs}});
    if (cs[i].has_expect) ctx.equals("resonant_" + std::to_string(i), r.resonant, cs[i].expect);
  }
  ctx.report.metrics["cases"] = rows;
}

Vec to_vec(const std::vector<cplx>& v) {
  Vec out(static_cast<int>(v.size()));
  for (size_t i = 0; i < v.size(); ++i) out(static_cast<int>(i)) = v[i];
  return out;
}

void run_manifold(Section& s, Ctx& ctx, bool dry) {
  const std::string field = s.text("field", "logistic");
  manifold::VectorField f;
  try {
    f = manifold::builtin_field(field);
  } catch (const InputError& e) {
    s.fail("field", e.what());
  }
  const std::vector<cplx> u_star = s.complexes("u_star", std::vector<cplx>(f.dim, 0.0));
  const std::vector<cplx> w_s = s.complexes("w_s", std::vector<cplx>(f.dim, 0.1));
  if (static_cast<int>(u_star.size()) != f.dim) s.fail("u_star", "dimension does not match the field");
  if (static_cast<int>(w_s.size()) != f.dim) s.fail("w_s", "dimension does not match the field");
  Section w = s.child("wedge");
  manifold::WedgeOptions wo;
  wo.nu = w.number("nu", wo.nu);
  wo.eta_tilde = w.number("eta_tilde", wo.eta_tilde);
  wo.t_max = w.number("t_max", wo.t_max);
  wo.max_panel = w.number("max_panel", wo.max_panel);
  wo.tol = w.number("tol", wo.tol);
  wo.max_iterations = w.integer("max_iterations", wo.max_iterations, 1);
  wo.delta = w.number("delta", wo.delta);
  s.adopt("wedge", w);
  Section cf = s.child("closed_form");
  const bool has_cf = cf.has("w0");
  mexpr::Expression expr;
  double t_check = 10.0;
  if (has_cf) {
    expr = read_expression(cf, "w0");
    t_check = cf.number("t_max", 10.0);
  }
  s.adopt("closed_form", cf);
  Section tg = s.child("tangency");
  const bool has_tg = tg.has("field");
  std::string tfield;
  std::vector<cplx> t_u_star, t_dir;
  std::vector<double> scales;
  if (has_tg) {
    tfield = tg.text("field");
    t_u_star = tg.complexes("u_star", {});
    t_dir = tg.complexes("direction", {});
    scales = tg.numbers("scales", {1e-2, 5e-3, 2.5e-3}, true);
  }
  s.adopt("tangency", tg);
  Section as = s.child("assert");
  const double cf_tol = as.number("closed_form", 1e-8);
  const double decay_margin = as.number("decay_margin", 0.05);
  const double flow_tol = as.number("flow_residual", 1e-7);
  const double proj_tol = as.number("projection", 1e-8);
  const double slope_target = as.number("tangency_slope", 2.0);
  const double slope_tol = as.number("tangency_slope_tol", 0.2);
  s.adopt("assert", as);
  manifold::VectorField tf;
  if (has_tg) {
    try {
      tf = manifold::builtin_field(tfield);
    } catch (const InputError& e) {
      s.fail("tangency", e.what());
    }
  }
  if (dry) return;

  const auto eq = manifold::linearize(f, to_vec(u_star));
  const auto sol = manifold::solve_stable_manifold(eq, f, to_vec(w_s), wo);
  ctx.report.metrics["solution"] = json::parse(sol.to_json());
  ctx.report.metrics["eta"] = eq.eta;
  ctx.file("trajectory.csv", sol.to_csv());
  for (const auto& n : sol.notes) ctx.note(n);
  ctx.at_least("min_decay_rate", sol.min_decay_rate, wo.eta_tilde - decay_margin);
  ctx.at_most("max_flow_residual", sol.max_flow_residual, flow_tol);
  ctx.at_most("projection_error", sol.projection_error, proj_tol);
  if (has_cf) {
    double err = 0.0;
    for (const auto& r : sol.rays) {
      if (r.angle != 0.0) continue;
      for (size_t i = 0; i < r.t.size(); ++i)
        if (r.t[i].real() <= t_check) err = std::max(err, std::abs(r.w(0, i) - expr.eval(r.t[i], 0.0)));
    }
    ctx.report.metrics["closed_form_error"] = err;
    ctx.at_most("closed_form_error", err, cf_tol);
  }
  if (has_tg) {
    const Vec us = t_u_star.empty() ? Vec::Zero(tf.dim) : to_vec(t_u_star);
    const auto teq = manifold::linearize(tf, us);
    if (teq.stable_dim() == 0) throw PreconditionError("tangency field has no stable directions");
    const Vec dir = t_dir.empty() ? Vec(teq.basis_s.col(0)) : to_vec(t_dir);
    const auto rep = manifold::tangency_check(teq, tf, dir, scales, wo, slope_target - slope_tol);
    ctx.report.metrics["tangency"] = {{"scales", rep.scales}, {"phi_norms", rep.phi_norms}, {"slope", rep.slope},
                                      {"trivial", rep.trivial}};
    ctx.file("tangency.dat", two_column(rep.scales, rep.phi_norms));
    if (rep.trivial) ctx.note("Phi vanishes on the sweep; tangency holds trivially");
    else ctx.within("tangency_slope", rep.slope, slope_target, slope_tol);
  }
}

// Randomized algebraic and contour checks; the seed comes from the config.
void run_properties(Section& s, Ctx& ctx, bool dry, unsigned seed) {
  const int trials = s.integer("trials", 20, 1);
  const int n = s.integer("dimension", 4, 2);
  Section as = s.child("assert");
  const double proj_tol = as.number("projector", 1e-12);
  const double syl_tol = as.number("sylvester", 1e-10);
  const double contour_tol = as.number("contour", 1e-10);
  const double kato_tol = as.number("kato", 1e-8);
  const double cert_tol = as.number("certificate", 1e-8);
  s.adopt("assert", as);
  if (dry) return;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  auto rand_mat = [&](int r, int c) {
    Mat m(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) m(i, j) = cplx(g(rng), g(rng));
    return m;
  };
  double proj = 0.0, syl = 0.0;
  for (int t = 0; t < trials; ++t) {
    Vec d(n);
    for (int i = 0; i < n; ++i) d(i) = cplx((i % 2 ? -1.0 : 1.0) * (1.0 + 0.5 * std::abs(g(rng))), 0.5 * g(rng));
    const Mat v = Mat::Identity(n, n) + 0.3 * rand_mat(n, n);
    const Mat M = v * d.asDiagonal() * v.inverse();
    const auto sp = spectral::spectral_split(M, spectral::GroupingRule::sign_of_real_part());
    const double scale = std::max(1.0, sp.pi1.squaredNorm());
    const Mat I = Mat::Identity(n, n);
    proj = std::max({proj, (sp.pi1 * sp.pi1 - sp.pi1).norm() / scale, (sp.pi1 * sp.pi2).norm() / scale,
                     (sp.pi1 + sp.pi2 - I).norm() / scale, (M * sp.pi1 - sp.pi1 * M).norm() / (scale * M.norm())});

    const Mat a = rand_mat(2, 2) + 3.0 * Mat::Identity(2, 2), b = rand_mat(3, 3) - 3.0 * Mat::Identity(3, 3);
    const Mat c = rand_mat(2, 3);
    const Mat x = spectral::solve_sylvester(a, b, c);
    const Mat K = Eigen::kroneckerProduct(Mat::Identity(3, 3), a) - Eigen::kroneckerProduct(b.transpose(), Mat::Identity(2, 2));
    const Vec xv = K.partialPivLu().solve(Eigen::Map<const Vec>(c.data(), c.size()));
    syl = std::max(syl, (Eigen::Map<const Vec>(x.data(), x.size()) - xv).norm() / std::max(1.0, xv.norm()));
  }
  ctx.at_most("projector_algebra", proj, proj_tol);
  ctx.at_most("sylvester_vs_kronecker", syl, syl_tol);

  // Contour independence: a finite-point conjugator and a contour integral.
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  const double c1 = u(rng), c2 = u(rng);
  const auto sys = exactdiag::AnalyticBlockSystem::from_matrix(
      MatrixFunction::from_callable("random_finite", 2,
                                    [c1, c2](cplx x, double h) {
                                      Mat m(2, 2);
                                      m << 1.0 + c1 * x, h * (1.0 + c2 * x * x), h * std::exp(c2 * x), -1.0 - c2 * x;
                                      return m;
                                    }),
      1, 1);
  exactdiag::SolverOptions so;
  so.require_certificate = false;
  const double disc = exactdiag::contour_discrepancy(sys, 0.0, 0.05, {}, {0.8, 1.2}, so);
  const Symbol amp = Symbol::from_expression(mexpr::Expression::parse("1 + x*x/3"));
  const auto q1 = oscint::quad_contour(amp, oscint::quadratic_phase(),
                                       oscint::Contour::polyline({-2.0, cplx(-2.0, -1.0), cplx(2.0, -1.0), 2.0}), 0.1);
  const auto q2 = oscint::saddle_deformed_quad(amp, oscint::quadratic_phase(), 2.0, 0.1);
  const double quad_disc = std::abs(q1.value - q2.value) / std::abs(q1.value);
  ctx.at_most("contour_conjugator", disc, contour_tol);
  ctx.at_most("contour_quadrature", quad_disc, contour_tol);

  const kato::ProjectorField pf(builtins::rotation_family(), 0.1, spectral::GroupingRule::sign_of_real_part());
  const auto tb = kato::transport(pf, Grid::uniform(0.0, 2.0, 200.0));
  ctx.at_most("kato_invariance", tb.max_invariance_error, kato_tol);

  double cert = 0.0;
  cert = std::max(cert, exactdiag::solve_finite(sys, 0.0, 0.05, {}, so).certificate);
  Mat lim(2, 2);
  lim << 1.0, 0.0, 0.0, -1.0;
  const auto inf_sys = exactdiag::AnalyticBlockSystem{
      MatrixFunction::constant(lim),
      MatrixFunction::from_callable("decaying", 2, [](cplx x, double) {
        Mat m = Mat::Zero(2, 2);
        m(0, 1) = std::exp(-x);
        m(1, 0) = 0.5 * std::exp(-2.0 * x);
        return m;
      }),
      1, 1};
  cert = std::max(cert, exactdiag::solve_infinity(inf_sys, 0.05, {}, so).certificate);
  ctx.at_most("conjugator_certificates", cert, cert_tol);
  ctx.report.metrics = {{"projector_algebra", proj},     {"sylvester_vs_kronecker", syl},
                        {"contour_conjugator", disc},    {"contour_quadrature", quad_disc},
                        {"kato_invariance", tb.max_invariance_error}, {"conjugator_certificates", cert}};
}

}  // namespace

bool Report::passed() const {
  return std::all_of(assertions.begin(), assertions.end(), [](const Assertion& a) { return a.pass; });
}

json Report::to_json() const {
  json j;
  j["tool"] = "semidiag";
  j["version"] = SEMIDIAG_VERSION;
  j["config"] = config;
  j["metrics"] = metrics;
  json as = json::array();
  for (const auto& a : assertions) {
    json e = {{"name", a.name}, {"value", a.value}, {"relation", a.relation}, {"bound", a.bound}};
    if (a.relation == "within" || a.relation == "==") e["target"] = a.target;
    e["pass"] = a.pass;
    as.push_back(e);
  }
  j["assertions"] = as;
  j["notes"] = notes;
  j["artifacts"] = json::array();
  for (const auto& [k, v] : artifacts) j["artifacts"].push_back(k);
  j["pass"] = passed();
  j["runtime_seconds"] = runtime_seconds;
  return j;
}

std::vector<std::string> experiment_kinds() {
  return {"repeated_diag", "exact_finite", "exact_infinity", "exact_singular", "gap_cr",     "osc_quadstat",
          "osc_gevrey",    "osc_cr",       "counterexample", "resonance",      "manifold",   "property_suite"};
}

Report run_experiment(const json& config, const RunOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  Section s(config, "");
  const std::string kind = s.text("kind");
  const auto kinds = experiment_kinds();
  if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end()) s.fail("kind", "unknown experiment kind '" + kind + "'");
  s.text("name", kind);
  s.text("description", "");
  const unsigned seed = static_cast<unsigned>(s.integer("seed", 0, 0));
  Section out = s.child("output");
  out.text("dir", "");
  s.adopt("output", out);

  Report rep;
  Ctx ctx{rep, std::max(1, opt.jobs)};
  if (kind == "repeated_diag") run_repeated(s, ctx, opt.dry);
  else if (kind == "exact_finite") run_finite(s, ctx, opt.dry);
  else if (kind == "exact_infinity") run_infinity(s, ctx, opt.dry);
  else if (kind == "exact_singular") run_singular(s, ctx, opt.dry);
  else if (kind == "gap_cr") run_gap(s, ctx, opt.dry);
  else if (kind == "osc_quadstat") run_quadstat(s, ctx, opt.dry);
  else if (kind == "osc_gevrey") run_gevrey(s, ctx, opt.dry);
  else if (kind == "osc_cr") run_cr(s, ctx, opt.dry);
  else if (kind == "counterexample") run_counterexample(s, ctx, opt.dry);
  else if (kind == "resonance") run_resonance(s, ctx, opt.dry);
  else if (kind == "manifold") run_manifold(s, ctx, opt.dry);
  else run_properties(s, ctx, opt.dry, seed);
  s.finish();
  rep.config = s.echo();
  rep.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

}  // namespace semidiag::cli
