#include "semidiag/manifold.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "semidiag/errors.hpp"
#include "semidiag/fit.hpp"
#include "semidiag/path_solver.hpp"
#include "semidiag/spectral.hpp"

namespace semidiag::manifold {

namespace {

Mat fd_jacobian(const VectorField& f, const Vec& u) {
  const int n = static_cast<int>(u.size());
  Mat J(n, n);
  for (int k = 0; k < n; ++k) {
    const double d = std::pow(std::numeric_limits<double>::epsilon(), 0.2) * (std::abs(u(k)) + 1.0);
    auto at = [&](double s) {
      Vec v = u;
      v(k) += s * d;
      return f(v);
    };
    J.col(k) = (8.0 * (at(1) - at(-1)) - (at(2) - at(-2))) / (12.0 * d);
  }
  return J;
}

double weighted_norm(const Mat& w, const std::vector<cplx>& t, double eta) {
  double m = 0.0;
  for (int i = 0; i < w.cols(); ++i) m = std::max(m, std::exp(eta * t[i].real()) * w.col(i).norm());
  return m;
}

pathsolve::Channel channel(const Mat& basis, const Mat& dual, const Mat& A, bool forward, const Vec& init) {
  pathsolve::Channel c;
  c.basis = basis;
  c.dual = dual;
  c.generator = dual * A * basis;
  c.forward = forward;
  c.initial = init;
  return c;
}

Ray solve_ray(const Equilibrium& eq, const VectorField& f, const Vec& w_s, double angle, double t_max,
              const WedgeOptions& opt, double* tail_norm) {
  const int n = static_cast<int>(eq.u_star.size());
  const cplx dir = std::polar(1.0, angle);
  const pathsolve::PathMesh mesh = pathsolve::PathMesh::build({0.0, t_max * dir}, opt.max_panel);
  const int N = mesh.nodes();

  const Mat basis_cu = [&] {
    Mat b(n, eq.basis_c.cols() + eq.basis_u.cols());
    b << eq.basis_c, eq.basis_u;
    return b;
  }();
  const Mat dual_cu = [&] {
    Mat d(eq.dual_c.rows() + eq.dual_u.rows(), n);
    d << eq.dual_c, eq.dual_u;
    return d;
  }();
  const pathsolve::Channel stable = channel(eq.basis_s, eq.dual_s, eq.jacobian, true, eq.dual_s * w_s);
  const pathsolve::Channel center_unstable = channel(basis_cu, dual_cu, eq.jacobian, false, Vec());
  pathsolve::SweepCache cache_s, cache_cu;

  const Vec f_star = f(eq.u_star);
  auto nonlinearity = [&](const Mat& w, Mat& g) {
    for (int i = 0; i < N; ++i) g.col(i) = f(eq.u_star + w.col(i)) - f_star - eq.jacobian * w.col(i);
  };
  auto propagate = [&](const Mat& g, Mat& next) {
    next.setZero(n, N);
    pathsolve::sweep(mesh, stable, g, 1.0, next, &cache_s);
    pathsolve::sweep(mesh, center_unstable, g, 1.0, next, &cache_cu);
  };

  Ray ray;
  ray.angle = angle;
  ray.t = mesh.z;
  Mat g = Mat::Zero(n, N), w = Mat::Zero(n, N), next;
  propagate(g, w);
  double prev = 0.0;
  int growing = 0;
  for (int it = 1;; ++it) {
    nonlinearity(w, g);
    propagate(g, next);
    const double diff = weighted_norm(next - w, ray.t, opt.eta_tilde);
    w.swap(next);
    ray.iterations = it;
    const double size = weighted_norm(w, ray.t, opt.eta_tilde);
    if (diff <= opt.tol * size || diff <= 1e-300) break;
    if (prev > 0.0 && diff > 1e3 * std::numeric_limits<double>::epsilon() * size) {
      const double ratio = diff / prev;
      ray.contraction = std::max(ray.contraction, ratio);
      growing = ratio >= 1.0 ? growing + 1 : 0;
      if (growing >= 3 || !std::isfinite(diff))
        throw ConvergenceFailure("stable manifold Picard iteration does not contract; w_s too large", ratio);
    }
    if (it >= opt.max_iterations)
      throw ConvergenceFailure("stable manifold Picard iteration hit the iteration limit", ray.contraction);
    prev = diff;
  }
  ray.w = w;
  ray.weighted_norm = weighted_norm(w, ray.t, opt.eta_tilde);

  nonlinearity(w, g);
  *tail_norm = std::max(*tail_norm, weighted_norm(g, ray.t, opt.eta_tilde));
  const Mat dw = pathsolve::differentiate(mesh, w);
  for (int i = 0; i < N; ++i)
    ray.flow_residual = std::max(ray.flow_residual, (dw.col(i) - eq.jacobian * w.col(i) - g.col(i)).norm());

  // Decay rate from nodes where |w| is above the roundoff floor of its start.
  std::vector<double> re, mag;
  const double floor = 1e-13 * std::max(w.col(0).norm(), 1e-300);
  for (int i = 0; i < N; ++i) {
    const double a = w.col(i).norm();
    if (a > floor && a > 0.0) {
      re.push_back(ray.t[i].real());
      mag.push_back(a);
    }
  }
  ray.decay_rate = re.size() >= 2 ? -fit::log_linear_slope(re, mag) : std::numeric_limits<double>::infinity();
  return ray;
}

}  // namespace

VectorField VectorField::logistic() {
  return {"logistic", 1, [](const Vec& u) {
            Vec r(1);
            r(0) = u(0) * u(0) - u(0);
            return r;
          }};
}

VectorField VectorField::saddle2d() {
  return {"saddle2d", 2, [](const Vec& u) {
            Vec r(2);
            r(0) = -u(0) + u(0) * u(1);
            r(1) = u(1) + u(0) * u(0);
            return r;
          }};
}

std::vector<std::string> builtin_fields() { return {"logistic", "saddle2d"}; }

VectorField builtin_field(const std::string& name) {
  if (name == "logistic") return VectorField::logistic();
  if (name == "saddle2d") return VectorField::saddle2d();
  throw InputError("unknown vector field '" + name + "'");
}

Equilibrium linearize(const VectorField& f, const Vec& u_star, const LinearizeOptions& opt) {
  if (u_star.size() != f.dim) throw InputError("equilibrium dimension does not match the vector field");
  const double res = f(u_star).norm();
  if (!(res <= opt.residual_tol))
    throw PreconditionError("f(u_star) = " + std::to_string(res) + " is not zero; not an equilibrium");
  Equilibrium eq;
  eq.u_star = u_star;
  eq.jacobian = fd_jacobian(f, u_star);
  const int n = f.dim;

  auto kind = [&](cplx mu) { return mu.real() < -opt.center_band ? 0 : (mu.real() > opt.center_band ? 2 : 1); };
  spectral::EigenResult er = spectral::eig(eq.jacobian);
  eq.eigenvalues = er.values;
  std::array<int, 3> slot{-1, -1, -1};
  int used = 0;
  for (int i = 0; i < n; ++i) {
    const int k = kind(er.values(i));
    if (slot[k] < 0) slot[k] = 0;
  }
  for (int k = 0; k < 3; ++k)
    if (slot[k] >= 0) slot[k] = used++;
  spectral::Decomposition d =
      spectral::decompose(eq.jacobian, [&](cplx mu) { return slot[kind(mu)]; }, used);

  auto part = [&](int k, Mat& basis, Mat& dual, Mat& pi) {
    if (slot[k] < 0) {
      basis = Mat::Zero(n, 0);
      dual = Mat::Zero(0, n);
      pi = Mat::Zero(n, n);
      return;
    }
    basis = d.parts[slot[k]].basis;
    dual = d.parts[slot[k]].dual;
    pi = basis * dual;
  };
  part(0, eq.basis_s, eq.dual_s, eq.pi_s);
  part(1, eq.basis_c, eq.dual_c, eq.pi_c);
  part(2, eq.basis_u, eq.dual_u, eq.pi_u);

  eq.eta = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i)
    if (kind(er.values(i)) != 1) eq.eta = std::min(eq.eta, std::abs(er.values(i).real()));
  if (slot[1] >= 0) {
    eq.defective_center = spectral::eig(d.parts[slot[1]].block).defective;
  }
  return eq;
}

ManifoldSolution solve_stable_manifold(const Equilibrium& eq, const VectorField& f, const Vec& w_s,
                                       const WedgeOptions& opt) {
  const int n = static_cast<int>(eq.u_star.size());
  if (w_s.size() != n) throw InputError("w_s dimension does not match the equilibrium");
  if (!(opt.eta_tilde > 0.0) || !(opt.eta_tilde < eq.eta))
    throw PreconditionError("weight rate must satisfy 0 < eta_tilde < eta = " + std::to_string(eq.eta));
  if (!(opt.nu >= 0.0) || !(opt.nu < std::numbers::pi / 2)) throw InputError("wedge slope must lie in [0, pi/2)");
  const double leak = (w_s - eq.pi_s * w_s).norm();
  if (leak > 1e-10 * std::max(1.0, w_s.norm()))
    throw PreconditionError("w_s has a component of size " + std::to_string(leak) + " outside the stable subspace");

  ManifoldSolution sol;
  sol.w_s = w_s;
  const double delta = opt.delta > 0.0 ? opt.delta : 0.05 * eq.eta;
  if (w_s.norm() > delta)
    sol.notes.push_back("|w_s| = " + std::to_string(w_s.norm()) + " exceeds the advisory size " +
                        std::to_string(delta) + "; contraction is measured instead");
  if (eq.basis_c.cols() > 0)
    sol.notes.push_back("center directions present: the solution is unique only among bounded solutions");
  if (eq.defective_center) sol.notes.push_back("center block is defective");

  const double t_max = opt.t_max > 0.0 ? opt.t_max : 12.0 / opt.eta_tilde;
  double tail = 0.0;
  const std::vector<double> angles = opt.nu > 0.0 ? std::vector<double>{-opt.nu, 0.0, opt.nu} : std::vector<double>{0.0};
  for (double a : angles) sol.rays.push_back(solve_ray(eq, f, w_s, a, t_max, opt, &tail));
  sol.tail_bound = std::exp(-opt.eta_tilde * t_max) * tail;

  const Ray& real_ray = sol.rays[angles.size() / 2];
  const Vec w0 = real_ray.w.col(0);
  sol.phi = eq.pi_cu() * w0;
  sol.projection_error = (eq.pi_s * w0 - w_s).norm();
  sol.min_decay_rate = std::numeric_limits<double>::infinity();
  for (const Ray& r : sol.rays) {
    sol.ray_discrepancy = std::max(sol.ray_discrepancy, (r.w.col(0) - w0).norm());
    sol.contraction = std::max(sol.contraction, r.contraction);
    sol.min_decay_rate = std::min(sol.min_decay_rate, r.decay_rate);
    sol.max_flow_residual = std::max(sol.max_flow_residual, r.flow_residual);
  }
  return sol;
}

TangencyReport tangency_check(const Equilibrium& eq, const VectorField& f, const Vec& direction,
                              const std::vector<double>& scales, const WedgeOptions& opt, double min_slope) {
  if (scales.size() < 2) throw InputError("tangency check needs at least two scales");
  TangencyReport rep;
  rep.scales = scales;
  const Vec unit = direction / direction.norm();
  for (double s : scales) {
    ManifoldSolution sol = solve_stable_manifold(eq, f, s * unit, opt);
    rep.phi_norms.push_back(sol.phi.norm());
  }
  const double largest = *std::max_element(rep.phi_norms.begin(), rep.phi_norms.end());
  if (largest <= 1e-14 * scales.front()) {
    rep.trivial = true;
    rep.tangent = true;
    rep.slope = std::numeric_limits<double>::quiet_NaN();
    return rep;
  }
  rep.slope = fit::loglog_slope(scales, rep.phi_norms);
  rep.tangent = rep.slope >= min_slope;
  return rep;
}

std::string ManifoldSolution::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "angle,re_t,im_t";
  const int n = rays.empty() ? 0 : static_cast<int>(rays[0].w.rows());
  for (int k = 0; k < n; ++k) os << ",re_w" << k << ",im_w" << k;
  os << '\n';
  for (const Ray& r : rays)
    for (size_t i = 0; i < r.t.size(); ++i) {
      os << r.angle << ',' << r.t[i].real() << ',' << r.t[i].imag();
      for (int k = 0; k < n; ++k) os << ',' << r.w(k, i).real() << ',' << r.w(k, i).imag();
      os << '\n';
    }
  return os.str();
}

std::string ManifoldSolution::to_json() const {
  nlohmann::json j;
  auto cvec = [](const Vec& v) {
    nlohmann::json a = nlohmann::json::array();
    for (int i = 0; i < v.size(); ++i) a.push_back({v(i).real(), v(i).imag()});
    return a;
  };
  j["w_s"] = cvec(w_s);
  j["phi"] = cvec(phi);
  j["projection_error"] = projection_error;
  j["ray_discrepancy"] = ray_discrepancy;
  j["tail_bound"] = tail_bound;
  j["contraction"] = contraction;
  j["min_decay_rate"] = min_decay_rate;
  j["max_flow_residual"] = max_flow_residual;
  j["notes"] = notes;
  nlohmann::json rs = nlohmann::json::array();
  for (const Ray& r : rays)
    rs.push_back({{"angle", r.angle},
                  {"decay_rate", r.decay_rate},
                  {"flow_residual", r.flow_residual},
                  {"iterations", r.iterations},
                  {"contraction", r.contraction},
                  {"weighted_norm", r.weighted_norm}});
  j["rays"] = rs;
  return j.dump();
}

}  // namespace semidiag::manifold
