#include "semidiag/repeated.hpp"

#include <cmath>

#include <Eigen/LU>

#include "semidiag/errors.hpp"
#include "semidiag/fit.hpp"
#include "semidiag/spectral.hpp"

namespace semidiag::repeated {

namespace {

struct NewtonOutcome {
  Mat x;
  int iterations;
  double residual;
  bool converged;
};

// Solves p x - x q + c - eps x r x = 0 by damped Newton seeded with the
// Sylvester solution of the linear part.
NewtonOutcome riccati_newton(const Mat& p, const Mat& q, const Mat& c, const Mat& r, double eps,
                             const NewtonOptions& opt) {
  auto residual = [&](const Mat& x) -> Mat { return p * x - x * q + c - eps * x * r * x; };
  Mat x = spectral::solve_sylvester(p, q, -c);
  Mat f = residual(x);
  const double scale_a = std::max(p.norm(), q.norm());
  int it = 0;
  auto tol = [&](const Mat& xx) { return opt.tol * (scale_a * xx.norm() + c.norm()) + 1e-300; };
  while (f.norm() > tol(x)) {
    if (it == opt.max_iterations) return {x, it, f.norm(), false};
    ++it;
    Mat dx = spectral::solve_sylvester(p - eps * x * r, q + eps * r * x, -f);
    double lambda = 1.0;
    Mat xn = x + dx;
    Mat fn = residual(xn);
    for (int k = 0; k < 10 && fn.norm() > f.norm(); ++k) {
      lambda *= 0.5;
      xn = x + lambda * dx;
      fn = residual(xn);
    }
    if (fn.norm() >= f.norm()) {
      // stagnation at roundoff level still counts as converged
      return {x, it, f.norm(), f.norm() <= 100.0 * tol(x)};
    }
    x = xn;
    f = fn;
  }
  return {x, it, f.norm(), true};
}

std::vector<Mat> multiply_pointwise(const std::vector<Mat>& a, const std::vector<Mat>& b) {
  std::vector<Mat> out(a.size());
  for (size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

}  // namespace

StepResult step(const SampledBlockSystem& bs, const NewtonOptions& opt) {
  const int npts = bs.size();
  const int m = bs.m(), n = bs.n();
  const double s = std::pow(bs.h, bs.order);
  const double eps = s * s;
  StepResult out;
  out.alpha12.resize(npts);
  out.alpha21.resize(npts);
  out.factor.resize(npts);
  std::vector<Mat> d(npts);

  for (int i = 0; i < npts; ++i) {
    const Mat& a11 = bs.a11[i];
    const Mat& a22 = bs.a22[i];
    NewtonOutcome ra = riccati_newton(a11, a22, bs.theta1[i], bs.theta2[i], eps, opt);
    NewtonOutcome rb = riccati_newton(a22, a11, bs.theta2[i], bs.theta1[i], eps, opt);
    if (!ra.converged || !rb.converged)
      throw ConvergenceFailure("repeated step: Newton did not converge at x = " +
                                   std::to_string(bs.grid.point(i).real()) + " for h = " + std::to_string(bs.h) +
                                   "; try h <= " + std::to_string(bs.h / 2),
                               bs.h / 2);
    out.max_iterations = std::max({out.max_iterations, ra.iterations, rb.iterations});
    out.max_newton_residual = std::max({out.max_newton_residual, ra.residual, rb.residual});
    out.alpha12[i] = ra.x;
    out.alpha21[i] = rb.x;
    Mat t = Mat::Identity(n, n);
    t.topRightCorner(m, n - m) = s * ra.x;
    t.bottomLeftCorner(n - m, m) = s * rb.x;
    out.factor[i] = t;
    out.factor_deviation = std::max(out.factor_deviation, (t - Mat::Identity(n, n)).norm());
    Mat di = Mat::Zero(n, n);
    di.topLeftCorner(m, m) = a11 + eps * bs.theta1[i] * rb.x;
    di.bottomRightCorner(n - m, n - m) = a22 + eps * bs.theta2[i] * ra.x;
    d[i] = di;
  }

  const cplx dx = bs.grid.step();
  std::vector<Mat> da = grid_derivative(out.alpha12, dx);
  std::vector<Mat> db = grid_derivative(out.alpha21, dx);

  // Truncation estimate: the same stencil on the even sub-grid.
  if (npts >= 9) {
    std::vector<Mat> even;
    for (int i = 0; i < npts; i += 2) even.push_back(out.alpha12[i]);
    std::vector<Mat> de = grid_derivative(even, 2.0 * dx);
    for (size_t j = 2; j + 2 < de.size(); ++j)
      out.fd_noise = std::max(out.fd_noise, (de[j] - da[2 * j]).norm() / 15.0);
  }

  SampledBlockSystem& nx = out.next;
  nx.grid = bs.grid;
  nx.h = bs.h;
  nx.order = bs.order + 1;
  for (int i = 0; i < npts; ++i) {
    Mat e = Mat::Zero(n, n);
    e.topRightCorner(m, n - m) = da[i];
    e.bottomLeftCorner(n - m, m) = db[i];
    Mat te = out.factor[i].partialPivLu().solve(e);
    // new coefficient: D - h s T^-1 E
    nx.a11.push_back(d[i].topLeftCorner(m, m) - bs.h * s * te.topLeftCorner(m, m));
    nx.a22.push_back(d[i].bottomRightCorner(n - m, n - m) - bs.h * s * te.bottomRightCorner(n - m, n - m));
    nx.theta1.push_back(-te.topRightCorner(m, n - m));
    nx.theta2.push_back(-te.bottomLeftCorner(n - m, m));
  }
  return out;
}

void ConjugatorChain::append(const std::vector<Mat>& factor) {
  factors.push_back(factor);
  composed = composed.empty() ? factor : multiply_pointwise(composed, factor);
}

RunResult run(const SampledBlockSystem& bs, int target_order, const NewtonOptions& opt, int max_order) {
  if (target_order > max_order)
    throw InputError("target order " + std::to_string(target_order) + " exceeds the maximum " +
                     std::to_string(max_order));
  if (target_order < bs.order) throw InputError("target order is below the input order");
  RunResult r;
  r.systems.push_back(bs);
  if (target_order == bs.order) {
    std::vector<Mat> id(bs.size(), Mat::Identity(bs.n(), bs.n()));
    r.chain.append(id);
    r.max_condition = 1.0;
    return r;
  }
  while (r.systems.back().order < target_order) {
    StepResult st = step(r.systems.back(), opt);
    r.chain.append(st.factor);
    r.systems.push_back(st.next);
    r.steps.push_back(std::move(st));
  }
  for (const Mat& t : r.chain.composed) {
    Eigen::JacobiSVD<Mat> svd(t);
    const auto& sv = svd.singularValues();
    double cond = sv(0) / sv(sv.size() - 1);
    r.max_condition = std::max(r.max_condition, cond);
  }
  if (!(r.max_condition < 1e8)) throw NumericalError("conjugator chain is ill-conditioned");
  return r;
}

double conjugation_residual(const SampledBlockSystem& original, const ConjugatorChain& chain,
                            const SampledBlockSystem& final_system) {
  const std::vector<Mat>& t = chain.composed;
  std::vector<Mat> dt = grid_derivative(t, original.grid.step());
  double sup = 0.0;
  for (int i = 0; i < original.size(); ++i) {
    Mat r = original.h * dt[i] + t[i] * final_system.block_diagonal(i) - original.full(i) * t[i];
    sup = std::max(sup, r.norm());
  }
  return sup;
}

double estimate_h_star(const SystemFactory& make, double h_start, const NewtonOptions& opt) {
  double h = h_start;
  for (int j = 0; j < 40; ++j, h *= 0.5) {
    try {
      step(make(h), opt);
      return h;
    } catch (const ConvergenceFailure&) {
    } catch (const SingularOperator&) {
    }
  }
  throw ConvergenceFailure("no converging step size found below " + std::to_string(h_start), h);
}

HStudy study(const SystemFactory& make, const std::vector<double>& h_grid, int target_order,
             const NewtonOptions& opt) {
  HStudy s;
  s.h_grid = h_grid;
  std::vector<std::vector<double>> per_order;   // [order index][h index]
  std::vector<std::vector<double>> theta_sup;   // same indexing, without the h^k factor
  std::vector<std::vector<double>> factor_dev;  // [step][h]
  int first_order = 0;
  for (size_t j = 0; j < h_grid.size(); ++j) {
    SampledBlockSystem bs = make(h_grid[j]);
    first_order = bs.order;
    RunResult r = run(bs, target_order, opt);
    s.max_condition = std::max(s.max_condition, r.max_condition);
    per_order.resize(r.systems.size());
    theta_sup.resize(r.systems.size());
    factor_dev.resize(r.steps.size());
    for (size_t k = 0; k < r.systems.size(); ++k) {
      per_order[k].push_back(r.systems[k].offdiag_sup());
      theta_sup[k].push_back(r.systems[k].theta_sup());
    }
    for (size_t k = 0; k < r.steps.size(); ++k) {
      factor_dev[k].push_back(r.steps[k].factor_deviation);
      s.fd_noise = std::max(s.fd_noise, r.steps[k].fd_noise);
    }
    s.conjugation_residuals.push_back(conjugation_residual(bs, r.chain, r.systems.back()));
  }
  auto slope_or_nan = [&](const std::vector<double>& y) {
    for (double v : y)
      if (!(v > 0.0)) return std::nan("");
    return h_grid.size() >= 2 ? fit::loglog_slope(h_grid, y) : std::nan("");
  };
  for (size_t k = 0; k < per_order.size(); ++k) {
    double sl = slope_or_nan(per_order[k]);
    s.order_slopes.push_back(sl);
    for (size_t j = 0; j < h_grid.size(); ++j)
      s.rows.push_back({first_order + static_cast<int>(k), h_grid[j], per_order[k][j], sl});
  }
  for (size_t k = 0; k + 1 < theta_sup.size(); ++k) {
    std::vector<double> ratio;
    for (size_t j = 0; j < h_grid.size(); ++j) ratio.push_back(per_order[k + 1][j] / per_order[k][j]);
    s.step_ratio_slopes.push_back(slope_or_nan(ratio));
  }
  for (const auto& f : factor_dev) s.factor_slopes.push_back(slope_or_nan(f));
  s.conjugation_slope = slope_or_nan(s.conjugation_residuals);
  return s;
}

}  // namespace semidiag::repeated
