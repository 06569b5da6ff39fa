#include "semidiag/exactdiag.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <json.hpp>

#include "semidiag/counterex.hpp"
#include "semidiag/errors.hpp"
#include "semidiag/fit.hpp"
#include "semidiag/spectral.hpp"

namespace semidiag::exactdiag {

using pathsolve::Channel;
using pathsolve::Field;
using pathsolve::PathMesh;

namespace {

constexpr double kPi = std::numbers::pi;

std::string fmt_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string fmt_cplx(cplx z) { return "(" + fmt_num(z.real()) + ", " + fmt_num(z.imag()) + ")"; }

// Coefficients in the chart the solver works in. The log chart x = -ln z
// turns h z W_z = (A + h^p Theta) W into h W_x = -(A + h^p Theta)(e^-x) W.
struct Model {
  const AnalyticBlockSystem* sys = nullptr;
  bool log_chart = false;

  int n() const { return sys->n(); }
  int m() const { return sys->m; }
  int r() const { return sys->n() - sys->m; }
  int p() const { return sys->p; }

  void eval(cplx x, double h, Mat& a, Mat& th) const {
    if (!log_chart) {
      a = sys->a(x, h);
      th = sys->theta(x, h);
      return;
    }
    const cplx z = std::exp(-x);
    a = -sys->a(z, h);
    th = -sys->theta(z, h);
  }
};

// Blocks of A and Theta at every node, one packed block per column.
struct Coeffs {
  int m = 0, r = 0;
  Mat a11, a22, t11, t12, t21, t22;

  int nodes() const { return static_cast<int>(a11.cols()); }

  static Eigen::Map<const Mat> blk(const Mat& packed, int i, int rows, int cols) {
    return Eigen::Map<const Mat>(packed.col(i).data(), rows, cols);
  }

  void build(const Model& md, double h, const std::vector<cplx>& pts) {
    m = md.m();
    r = md.r();
    const int np = static_cast<int>(pts.size());
    a11.resize(m * m, np);
    a22.resize(r * r, np);
    t11.resize(m * m, np);
    t12.resize(m * r, np);
    t21.resize(r * m, np);
    t22.resize(r * r, np);
    Mat a, th, tmp;
    auto pack = [&](Mat& dst, int i, const auto& block) {
      tmp = block;
      dst.col(i) = Eigen::Map<const Vec>(tmp.data(), tmp.size());
    };
    for (int i = 0; i < np; ++i) {
      md.eval(pts[i], h, a, th);
      if (!a.allFinite() || !th.allFinite()) throw EvalError("non-finite coefficient", pts[i]);
      pack(a11, i, a.topLeftCorner(m, m));
      pack(a22, i, a.bottomRightCorner(r, r));
      pack(t11, i, th.topLeftCorner(m, m));
      pack(t12, i, th.topRightCorner(m, r));
      pack(t21, i, th.bottomLeftCorner(r, m));
      pack(t22, i, th.bottomRightCorner(r, r));
    }
  }

  Mat full_a(int i) const {
    Mat a = Mat::Zero(m + r, m + r);
    a.topLeftCorner(m, m) = blk(a11, i, m, m);
    a.bottomRightCorner(r, r) = blk(a22, i, r, r);
    return a;
  }
  Mat full_theta(int i) const {
    Mat t(m + r, m + r);
    t.topLeftCorner(m, m) = blk(t11, i, m, m);
    t.topRightCorner(m, r) = blk(t12, i, m, r);
    t.bottomLeftCorner(r, m) = blk(t21, i, r, m);
    t.bottomRightCorner(r, r) = blk(t22, i, r, r);
    return t;
  }
};

// Right-hand side of h alpha' = L_ref alpha + g(alpha) for alpha = [vec a; vec b]:
//   g_a = (A11 - R11) a - a (A22 - R22) + Theta12 + s (Theta11 a - a Theta22) - s^2 a Theta21 a
// and the mirror image for b. Without a reference the linear part is omitted.
struct RiccatiForcing {
  const Coeffs* co;
  double s;
  const Mat* ref11;
  const Mat* ref22;

  void operator()(const Field& al, Field& g) const {
    const int m = co->m, r = co->r;
    const int nodes = co->nodes();
    Mat d11(m, m), d22(r, r), rr(r, r), mm(m, m);
    for (int i = 0; i < nodes; ++i) {
      Eigen::Map<const Mat> a(al.col(i).data(), m, r);
      Eigen::Map<const Mat> b(al.col(i).data() + m * r, r, m);
      Eigen::Map<Mat> ga(g.col(i).data(), m, r);
      Eigen::Map<Mat> gb(g.col(i).data() + m * r, r, m);
      auto A11 = Coeffs::blk(co->a11, i, m, m);
      auto A22 = Coeffs::blk(co->a22, i, r, r);
      auto T11 = Coeffs::blk(co->t11, i, m, m);
      auto T12 = Coeffs::blk(co->t12, i, m, r);
      auto T21 = Coeffs::blk(co->t21, i, r, m);
      auto T22 = Coeffs::blk(co->t22, i, r, r);
      ga = T12;
      gb = T21;
      if (ref11) {
        d11 = A11 - *ref11;
        d22 = A22 - *ref22;
        ga.noalias() += d11 * a;
        ga.noalias() -= a * d22;
        gb.noalias() += d22 * b;
        gb.noalias() -= b * d11;
      }
      if (s != 0.0) {
        ga.noalias() += s * (T11 * a);
        ga.noalias() -= s * (a * T22);
        gb.noalias() += s * (T22 * b);
        gb.noalias() -= s * (b * T11);
        rr.noalias() = T21 * a;
        ga.noalias() -= (s * s) * (a * rr);
        mm.noalias() = T12 * b;
        gb.noalias() -= (s * s) * (b * mm);
      }
    }
  }
};

// ||offdiag(T^-1 ((A + s Theta) T - h T'))|| at node i, and the mismatch of the
// diagonal blocks against A_jj + s Theta_jj + s^2 Theta_jk alpha_kj.
double node_certificate(const Coeffs& co, int p, double h, const cplx* al, const cplx* dal, int i, double& diag) {
  const int m = co.m, r = co.r, n = m + r;
  const double s = std::pow(h, p);
  Eigen::Map<const Mat> a(al, m, r), b(al + m * r, r, m);
  Eigen::Map<const Mat> da(dal, m, r), db(dal + m * r, r, m);
  Mat t = Mat::Identity(n, n), tp = Mat::Zero(n, n);
  t.topRightCorner(m, r) = s * a;
  t.bottomLeftCorner(r, m) = s * b;
  tp.topRightCorner(m, r) = s * da;
  tp.bottomLeftCorner(r, m) = s * db;
  const Mat th = co.full_theta(i);
  const Mat full = co.full_a(i) + s * th;
  Mat k = t.partialPivLu().solve(full * t - h * tp);
  Mat d1 = Coeffs::blk(co.a11, i, m, m) + s * th.topLeftCorner(m, m) + s * s * th.topRightCorner(m, r) * b;
  Mat d2 = Coeffs::blk(co.a22, i, r, r) + s * th.bottomRightCorner(r, r) + s * s * th.bottomLeftCorner(r, m) * a;
  diag = std::max((k.topLeftCorner(m, m) - d1).norm(), (k.bottomRightCorner(r, r) - d2).norm());
  return std::sqrt(k.topRightCorner(m, r).squaredNorm() + k.bottomLeftCorner(r, m).squaredNorm());
}

// Adds the selected nodes to a conjugator and folds their certificates in.
void append_nodes(Conjugator& c, const Coeffs& co, double h, const Field& al, const Field& dal,
                  const std::vector<int>& idx, const std::vector<cplx>& out_points) {
  const int m = co.m, r = co.r;
  for (size_t k = 0; k < idx.size(); ++k) {
    const int i = idx[k];
    c.points.push_back(out_points[k]);
    c.alpha12.push_back(Eigen::Map<const Mat>(al.col(i).data(), m, r));
    c.alpha21.push_back(Eigen::Map<const Mat>(al.col(i).data() + m * r, r, m));
    double dg = 0.0;
    c.certificate = std::max(c.certificate, node_certificate(co, c.p, h, al.col(i).data(), dal.col(i).data(), i, dg));
    c.diagonal_mismatch = std::max(c.diagonal_mismatch, dg);
  }
}

void check_certificate(const Conjugator& c, const SolverOptions& opt) {
  if (opt.require_certificate && !(c.certificate <= opt.certificate_tol))
    throw NumericalError(c.method + ": conjugation residual " + fmt_num(c.certificate) + " exceeds " +
                         fmt_num(opt.certificate_tol));
}

Conjugator empty_conjugator(const Model& md, double h, const std::string& method) {
  Conjugator c;
  c.p = md.p();
  c.h = h;
  c.m = md.m();
  c.n = md.n();
  c.method = method;
  return c;
}

Mat kron_operator(const Mat& a, int m) {
  const int n = static_cast<int>(a.rows());
  spectral::BlockSylvester bs{a.topLeftCorner(m, m), a.bottomRightCorner(n - m, n - m)};
  return bs.kronecker();
}

// One channel per label; channels of rank zero are kept so that indices stay
// aligned with labels.
std::vector<Channel> split_channels(const Mat& op, const std::function<int(cplx)>& label,
                                    const std::vector<bool>& forward) {
  const int k = static_cast<int>(forward.size());
  spectral::Decomposition d = spectral::decompose(op, label, k);
  std::vector<Channel> out(k);
  for (int g = 0; g < k; ++g) {
    out[g].basis = d.parts[g].basis;
    out[g].dual = d.parts[g].dual;
    out[g].generator = d.parts[g].block;
    out[g].forward = forward[g];
  }
  return out;
}

double panel_length(double h, double eta, double max_abs) {
  double len = h / eta;
  if (max_abs > 0.0) len = std::min(len, 2.0 * h / max_abs);
  return len;
}

struct LineProblem {
  PathMesh mesh;
  Coeffs co;
  pathsolve::PicardResult pic;
  Field dalpha;
};

void prepare(LineProblem& lp, const Model& md, double h, const std::vector<cplx>& vertices, double panel,
             const SolverOptions& opt) {
  lp.mesh = PathMesh::build(vertices, panel, opt.nodes_per_panel);
  lp.co.build(md, h, lp.mesh.z);
}

void run_line(LineProblem& lp, const Model& md, double h, const std::vector<Channel>& channels, const Mat* aref,
              const SolverOptions& opt) {
  const int m = md.m(), r = md.r();
  Mat r11, r22;
  if (aref) {
    r11 = aref->topLeftCorner(m, m);
    r22 = aref->bottomRightCorner(r, r);
  }
  RiccatiForcing f{&lp.co, std::pow(h, md.p()), aref ? &r11 : nullptr, aref ? &r22 : nullptr};
  pathsolve::Propagator prop = pathsolve::channel_propagator(lp.mesh, channels, h);
  lp.pic = pathsolve::picard(lp.mesh.nodes(), 2 * m * r, f, prop, opt.picard);
  lp.dalpha = pathsolve::differentiate(lp.mesh, lp.pic.alpha);
}

void record_picard(Conjugator& c, const pathsolve::PicardResult& pic) {
  c.iterations = std::max(c.iterations, pic.iterations);
  c.contraction = std::max(c.contraction, pic.contraction);
  if (c.picard_diffs.empty()) c.picard_diffs = pic.diffs;
}

struct Spectrum {
  Vec values;
  double max_abs = 0.0;
};

Spectrum spectrum_of(const Mat& op) {
  Spectrum s;
  s.values = spectral::eig(op).values;
  for (int i = 0; i < s.values.size(); ++i) s.max_abs = std::max(s.max_abs, std::abs(s.values(i)));
  return s;
}

// Every stable mode must decay forward along each segment and every unstable
// one backward, otherwise the path leaves the dichotomy cone.
void check_segments(const std::vector<cplx>& vertices, const Spectrum& sp, const std::function<bool(cplx)>& stable) {
  for (size_t k = 0; k + 1 < vertices.size(); ++k) {
    const cplx d = (vertices[k + 1] - vertices[k]) / std::abs(vertices[k + 1] - vertices[k]);
    for (int i = 0; i < sp.values.size(); ++i) {
      const double re = (sp.values(i) * d).real();
      const bool ok = stable(sp.values(i)) ? re < 0.0 : re > 0.0;
      if (!ok)
        throw PreconditionError("contour segment " + std::to_string(k) + " with direction " + fmt_cplx(d) +
                                " does not separate the mode " + fmt_cplx(sp.values(i)) +
                                "; reduce the half-angle");
    }
  }
}

// Direction along which group I decays forward and groups II, III backward.
struct RayChoice {
  bool found = false;
  cplx dir{1.0};
  double margin = 0.0;
};

RayChoice choose_ray(const Spectrum& sp, const std::vector<int>& group, const std::vector<cplx>& candidates) {
  RayChoice best;
  for (cplx d : candidates) {
    double margin = INFINITY;
    bool ok = true;
    for (int i = 0; i < sp.values.size(); ++i) {
      const double re = (sp.values(i) * d).real();
      if ((group[i] == 0) != (re < 0.0) || re == 0.0) {
        ok = false;
        break;
      }
      margin = std::min(margin, std::abs(re));
    }
    if (ok && (!best.found || margin > best.margin * (1.0 + 1e-9))) best = {true, d, margin};
  }
  return best;
}

std::vector<int> dichotomy_groups(const Spectrum& sp, double eps) {
  std::vector<int> g(sp.values.size());
  for (int i = 0; i < sp.values.size(); ++i) g[i] = spectral::dichotomy_group(sp.values(i), eps);
  return g;
}

// Ray solve shared by the infinity and slit-disk solvers. The linear part is
// frozen at a_limit; modes with Re(mu dir) < 0 run from the start.
struct RaySolve {
  LineProblem lp;
  double eta = 0.0;
  int report_node = 0;
};

void solve_ray_impl(RaySolve& rs, const Model& md, double h, cplx start, cplx dir, double report_length, double pad,
                    const Mat& a_limit, const SolverOptions& opt) {
  if (!(report_length > 0.0)) throw InputError("ray report length must be positive");
  const Mat op = kron_operator(a_limit, md.m());
  const Spectrum sp = spectrum_of(op);
  double eta = INFINITY;
  for (int i = 0; i < sp.values.size(); ++i) eta = std::min(eta, std::abs((sp.values(i) * dir).real()));
  if (!(eta > 1e-10 * std::max(1.0, sp.max_abs)))
    throw PreconditionError("ray direction " + fmt_cplx(dir) + " is parallel to a mode of the limit operator");
  if (pad <= 0.0) pad = 28.0 * h / eta;
  std::vector<cplx> vertices{start, start + dir * report_length, start + dir * (report_length + pad)};
  prepare(rs.lp, md, h, vertices, panel_length(h, eta, sp.max_abs), opt);
  std::vector<Channel> ch =
      split_channels(op, [dir](cplx mu) { return (mu * dir).real() < 0.0 ? 0 : 1; }, {true, false});
  run_line(rs.lp, md, h, ch, &a_limit, opt);
  rs.eta = eta;
  rs.report_node = rs.lp.mesh.vertex_node[1];
}

Conjugator ray_conjugator(const RaySolve& rs, const Model& md, double h, int stride, const std::string& method) {
  Conjugator c = empty_conjugator(md, h, method);
  std::vector<int> idx;
  std::vector<cplx> pts;
  stride = std::max(1, stride);
  for (int i = 0; i <= rs.report_node; ++i)
    if (i % stride == 0 || i == rs.report_node) {
      idx.push_back(i);
      pts.push_back(rs.lp.mesh.z[i]);
    }
  append_nodes(c, rs.lp.co, h, rs.lp.pic.alpha, rs.lp.dalpha, idx, pts);
  record_picard(c, rs.lp.pic);
  c.eta = rs.eta;
  return c;
}

}  // namespace

AnalyticBlockSystem AnalyticBlockSystem::from_matrix(const MatrixFunction& f, int m, int p) {
  const int n = f.dim();
  if (m <= 0 || m >= n) throw InputError("block size must lie strictly between 0 and the dimension");
  AnalyticBlockSystem s;
  s.m = m;
  s.p = p;
  s.a = MatrixFunction::from_callable(f.name() + "[diag]", n, [f, m, n](cplx x, double h) {
    Mat a = f(x, h);
    a.topRightCorner(m, n - m).setZero();
    a.bottomLeftCorner(n - m, m).setZero();
    return a;
  }, f.domain());
  s.theta = MatrixFunction::from_callable(f.name() + "[off]", n, [f, m, n, p](cplx x, double h) {
    Mat a = f(x, h);
    Mat t = Mat::Zero(n, n);
    const double scale = std::pow(h, -p);
    t.topRightCorner(m, n - m) = scale * a.topRightCorner(m, n - m);
    t.bottomLeftCorner(n - m, m) = scale * a.bottomLeftCorner(n - m, m);
    return t;
  }, f.domain());
  return s;
}

Mat Conjugator::transform(int i) const {
  const double s = std::pow(h, p);
  Mat t = Mat::Identity(n, n);
  t.topRightCorner(m, n - m) = s * alpha12[i];
  t.bottomLeftCorner(n - m, m) = s * alpha21[i];
  return t;
}

double Conjugator::deviation() const {
  const double s = std::pow(h, p);
  double d = 0.0;
  for (size_t i = 0; i < points.size(); ++i)
    d = std::max(d, s * std::sqrt(alpha12[i].squaredNorm() + alpha21[i].squaredNorm()));
  return d;
}

int Conjugator::nearest(cplx z) const {
  int best = -1;
  double dist = INFINITY;
  for (size_t i = 0; i < points.size(); ++i)
    if (std::abs(points[i] - z) < dist) {
      dist = std::abs(points[i] - z);
      best = static_cast<int>(i);
    }
  return best;
}

std::string Conjugator::to_json() const {
  using nlohmann::json;
  auto mat = [](const Mat& a) {
    json rows = json::array();
    for (int i = 0; i < a.rows(); ++i) {
      json row = json::array();
      for (int j = 0; j < a.cols(); ++j) row.push_back({a(i, j).real(), a(i, j).imag()});
      rows.push_back(row);
    }
    return rows;
  };
  json j;
  j["method"] = method;
  j["p"] = p;
  j["h"] = h;
  j["n"] = n;
  j["m"] = m;
  j["certificate"] = certificate;
  j["diagonal_mismatch"] = diagonal_mismatch;
  j["iterations"] = iterations;
  j["contraction"] = contraction;
  j["picard_diffs"] = picard_diffs;
  j["eta"] = eta;
  j["gamma"] = {gamma.real(), gamma.imag()};
  j["path_discrepancy"] = std::isnan(path_discrepancy) ? json(nullptr) : json(path_discrepancy);
  j["tail_bound"] = tail_bound;
  j["deviation"] = deviation();
  j["notes"] = notes;
  json pts = json::array(), a12 = json::array(), a21 = json::array();
  for (size_t i = 0; i < points.size(); ++i) {
    pts.push_back({points[i].real(), points[i].imag()});
    a12.push_back(mat(alpha12[i]));
    a21.push_back(mat(alpha21[i]));
  }
  j["points"] = pts;
  j["alpha12"] = a12;
  j["alpha21"] = a21;
  return j.dump();
}

Direction choose_direction(const Vec& eigenvalues, int count) {
  Direction best;
  best.margin = -1.0;
  for (int k = 0; k < count; ++k) {
    const cplx g = std::polar(1.0, 2.0 * kPi * k / count);
    double margin = INFINITY;
    for (int i = 0; i < eigenvalues.size(); ++i) margin = std::min(margin, std::abs((g * eigenvalues(i)).real()));
    if (eigenvalues.size() == 0) margin = 0.0;
    if (margin > best.margin * (1.0 + 1e-12) + 1e-300) best = {g, margin};
  }
  return best;
}

std::vector<PathSolution> solve_on_paths(const AnalyticBlockSystem& sys, cplx center, double h, cplx gamma,
                                         const std::vector<std::vector<cplx>>& paths, const SolverOptions& opt) {
  const Model md{&sys, false};
  const Mat aref = sys.a(center, h);
  const Mat op = kron_operator(aref, sys.m);
  const Spectrum sp = spectrum_of(op);
  double eta = INFINITY;
  for (int i = 0; i < sp.values.size(); ++i) eta = std::min(eta, std::abs((gamma * sp.values(i)).real()));
  if (!(eta > 1e-10 * std::max(1.0, sp.max_abs)))
    throw PreconditionError("no admissible direction: the linear part has a mode with Re(gamma mu) = 0 at " +
                            fmt_cplx(center));
  auto stable = [gamma](cplx mu) { return (gamma * mu).real() < 0.0; };
  for (const auto& path : paths) check_segments(path, sp, stable);
  const std::vector<Channel> ch =
      split_channels(op, [&](cplx mu) { return stable(mu) ? 0 : 1; }, {true, false});
  const double panel = panel_length(h, eta, sp.max_abs);

  std::vector<PathSolution> out;
  for (const auto& path : paths) {
    LineProblem lp;
    prepare(lp, md, h, path, panel, opt);
    run_line(lp, md, h, ch, &aref, opt);
    PathSolution ps;
    ps.conj = empty_conjugator(md, h, "finite");
    std::vector<int> idx(lp.mesh.nodes());
    for (int i = 0; i < lp.mesh.nodes(); ++i) idx[i] = i;
    append_nodes(ps.conj, lp.co, h, lp.pic.alpha, lp.dalpha, idx, lp.mesh.z);
    record_picard(ps.conj, lp.pic);
    ps.conj.eta = eta;
    ps.conj.gamma = gamma;
    ps.mesh = std::move(lp.mesh);
    out.push_back(std::move(ps));
  }
  return out;
}

Conjugator solve_finite(const AnalyticBlockSystem& sys, cplx center, double h, const DiamondParams& diamond,
                        const SolverOptions& opt) {
  if (!(diamond.half_length > 0.0) || !(diamond.eps > 0.0) || !(diamond.eps < kPi / 2))
    throw InputError("diamond needs a positive half-length and a half-angle in (0, pi/2)");
  cplx gamma;
  if (diamond.gamma) {
    gamma = *diamond.gamma / std::abs(*diamond.gamma);
  } else {
    const Spectrum sp = spectrum_of(kron_operator(sys.a(center, h), sys.m));
    gamma = choose_direction(sp.values).gamma;
  }
  const double M = diamond.half_length;
  const cplx z_lo = center - M * gamma, z_hi = center + M * gamma;
  std::vector<std::vector<cplx>> paths;
  int central = 0;
  for (size_t k = 0; k < diamond.apex_fractions.size(); ++k) {
    const double f = diamond.apex_fractions[k];
    if (std::abs(f) > 1.0) throw InputError("apex fractions must lie in [-1, 1]");
    if (f == 0.0) central = static_cast<int>(k);
    paths.push_back({z_lo, center + kI * gamma * (f * M * std::tan(diamond.eps)), z_hi});
  }
  if (paths.empty()) paths.push_back({z_lo, center, z_hi});
  std::vector<PathSolution> sols = solve_on_paths(sys, center, h, gamma, paths, opt);

  Conjugator c = sols[central].conj;
  double disc = 0.0;
  for (size_t k = 0; k < sols.size(); ++k) {
    if (static_cast<int>(k) == central) continue;
    const Conjugator& o = sols[k].conj;
    const size_t last = o.points.size() - 1, clast = sols[central].conj.points.size() - 1;
    disc = std::max({disc, (o.alpha12[0] - c.alpha12[0]).norm(), (o.alpha21[0] - c.alpha21[0]).norm(),
                     (o.alpha12[last] - sols[central].conj.alpha12[clast]).norm(),
                     (o.alpha21[last] - sols[central].conj.alpha21[clast]).norm()});
  }
  for (size_t k = 0; k < sols.size(); ++k) {
    if (static_cast<int>(k) == central) continue;
    const Conjugator& o = sols[k].conj;
    c.points.insert(c.points.end(), o.points.begin(), o.points.end());
    c.alpha12.insert(c.alpha12.end(), o.alpha12.begin(), o.alpha12.end());
    c.alpha21.insert(c.alpha21.end(), o.alpha21.begin(), o.alpha21.end());
    c.certificate = std::max(c.certificate, o.certificate);
    c.diagonal_mismatch = std::max(c.diagonal_mismatch, o.diagonal_mismatch);
    c.iterations = std::max(c.iterations, o.iterations);
    c.contraction = std::max(c.contraction, o.contraction);
  }
  if (sols.size() > 1) c.path_discrepancy = disc;
  c.notes.push_back("diamond half-length " + fmt_num(M) + ", half-angle " + fmt_num(diamond.eps) + ", " +
                    std::to_string(sols.size()) + " paths");
  check_certificate(c, opt);
  return c;
}

double contour_discrepancy(const AnalyticBlockSystem& sys, cplx center, double h, const DiamondParams& diamond,
                           const std::vector<double>& scales, const SolverOptions& opt) {
  cplx gamma;
  if (diamond.gamma) {
    gamma = *diamond.gamma / std::abs(*diamond.gamma);
  } else {
    const Spectrum sp = spectrum_of(kron_operator(sys.a(center, h), sys.m));
    gamma = choose_direction(sp.values).gamma;
  }
  const double M = diamond.half_length;
  const cplx z_lo = center - M * gamma, z_hi = center + M * gamma;
  std::vector<std::vector<cplx>> paths{{z_lo, center, z_hi}};
  for (double sc : scales)
    for (double sign : {1.0, -1.0}) {
      const double t = std::tan(sc * diamond.eps);
      paths.push_back({z_lo, center - 0.5 * M * gamma + sign * kI * (0.5 * M * t) * gamma, center,
                       center + 0.5 * M * gamma - sign * kI * (0.5 * M * t) * gamma, z_hi});
    }
  std::vector<PathSolution> sols = solve_on_paths(sys, center, h, gamma, paths, opt);
  const int c0 = sols[0].mesh.vertex_node[1];
  double disc = 0.0;
  for (size_t k = 1; k < sols.size(); ++k) {
    const int ck = sols[k].mesh.vertex_node[2];
    disc = std::max({disc, (sols[k].conj.alpha12[ck] - sols[0].conj.alpha12[c0]).norm(),
                     (sols[k].conj.alpha21[ck] - sols[0].conj.alpha21[c0]).norm()});
  }
  return disc;
}

Conjugator solve_ray(const AnalyticBlockSystem& sys, double h, cplx start, cplx dir, double report_length,
                     double pad, const Mat& a_limit, const SolverOptions& opt) {
  const Model md{&sys, false};
  dir /= std::abs(dir);
  RaySolve rs;
  solve_ray_impl(rs, md, h, start, dir, report_length, pad, a_limit, opt);
  Conjugator c = ray_conjugator(rs, md, h, 1, "ray");
  c.gamma = dir;
  check_certificate(c, opt);
  return c;
}

namespace {

// Oblique grid x = apex + s e^{i eps} + t e^{-i eps}. Group III runs backward
// along s, group II backward along t, group I forward from the apex along
// s and then along t.
Conjugator solve_wedge_2d(const Model& md, double h, const WedgeParams& w, const Mat& a_inf, const Spectrum& sp,
                          const std::vector<int>& group, const SolverOptions& opt) {
  const cplx ep = std::polar(1.0, w.eps), em = std::polar(1.0, -w.eps);
  double eta = INFINITY;
  for (int i = 0; i < sp.values.size(); ++i) {
    const cplx mu = sp.values(i);
    switch (group[i]) {
      case 0: eta = std::min({eta, -(mu * ep).real(), -(mu * em).real()}); break;
      case 1: eta = std::min(eta, (mu * em).real()); break;
      default: eta = std::min(eta, (mu * ep).real()); break;
    }
  }
  if (!(eta > 0.0)) throw PreconditionError("limit operator has a mode on a wedge boundary ray");
  const double pad = w.pad > 0.0 ? w.pad : 28.0 * h / eta;
  const double reach = std::max(w.R, w.apex + 10.0 / eta);
  const double len = (reach - w.apex) / std::cos(w.eps) + pad;
  const PathMesh base = PathMesh::build({0.0, len}, panel_length(h, eta, sp.max_abs), opt.nodes_per_panel);
  const int N = base.nodes();
  if (static_cast<double>(N) * N > 4.0e6)
    throw InputError("wedge grid needs " + std::to_string(N) + "^2 nodes; increase h or reduce R");

  PathMesh mesh_s = base, mesh_t = base;
  for (auto& e : mesh_s.ell) e *= ep;
  for (auto& e : mesh_t.ell) e *= em;
  std::vector<cplx> pts(static_cast<size_t>(N) * N);
  for (int it = 0; it < N; ++it)
    for (int is = 0; is < N; ++is) pts[is + static_cast<size_t>(N) * it] = w.apex + base.z[is].real() * ep + base.z[it].real() * em;
  for (int i = 0; i < N; ++i) {
    mesh_s.z[i] = w.apex + base.z[i].real() * ep;
    mesh_t.z[i] = w.apex + base.z[i].real() * em;
  }

  const Mat op = kron_operator(a_inf, md.m());
  std::vector<Channel> ch = split_channels(op, [&](cplx mu) { return spectral::dichotomy_group(mu, w.eps); },
                                           {true, false, false});
  Coeffs co;
  co.build(md, h, pts);
  const int m = md.m(), r = md.r(), dim = 2 * m * r;
  Mat r11 = a_inf.topLeftCorner(m, m), r22 = a_inf.bottomRightCorner(r, r);
  RiccatiForcing f{&co, std::pow(h, md.p()), &r11, &r22};

  pathsolve::SweepCache cache_is, cache_it, cache_ii, cache_iii;
  auto propagate = [&](const Field& g, Field& next) {
    Field lg(dim, N), lo(dim, N);
    if (ch[2].rank() > 0)
      for (int it = 0; it < N; ++it) {
        lg = g.middleCols(static_cast<Eigen::Index>(it) * N, N);
        lo.setZero();
        pathsolve::sweep(mesh_s, ch[2], lg, h, lo, &cache_iii);
        next.middleCols(static_cast<Eigen::Index>(it) * N, N) += lo;
      }
    if (ch[1].rank() > 0)
      for (int is = 0; is < N; ++is) {
        for (int it = 0; it < N; ++it) lg.col(it) = g.col(is + static_cast<Eigen::Index>(N) * it);
        lo.setZero();
        pathsolve::sweep(mesh_t, ch[1], lg, h, lo, &cache_ii);
        for (int it = 0; it < N; ++it) next.col(is + static_cast<Eigen::Index>(N) * it) += lo.col(it);
      }
    if (ch[0].rank() > 0) {
      Field edge = Field::Zero(dim, N);
      lg = g.leftCols(N);
      pathsolve::sweep(mesh_s, ch[0], lg, h, edge, &cache_is);
      Channel c0 = ch[0];
      for (int is = 0; is < N; ++is) {
        c0.initial = c0.dual * edge.col(is);
        for (int it = 0; it < N; ++it) lg.col(it) = g.col(is + static_cast<Eigen::Index>(N) * it);
        lo.setZero();
        pathsolve::sweep(mesh_t, c0, lg, h, lo, &cache_it);
        for (int it = 0; it < N; ++it) next.col(is + static_cast<Eigen::Index>(N) * it) += lo.col(it);
      }
    }
  };
  pathsolve::PicardResult pic = pathsolve::picard(N * N, dim, f, propagate, opt.picard);

  // Report the real axis and both edges up to Re x = R, differentiating along t.
  Conjugator c = empty_conjugator(md, h, "wedge-2d");
  const int stride = std::max(1, w.output_stride);
  const double re_tol = 1e-12 * (1.0 + std::abs(w.R));
  std::vector<int> idx;
  std::vector<cplx> outp;
  std::vector<int> lines;
  auto take = [&](int is, int it, int k) {
    const int node = is + N * it;
    if (pts[node].real() > w.R + re_tol || k % stride != 0) return;
    idx.push_back(node);
    outp.push_back(pts[node]);
  };
  for (int k = 0; k < N; ++k) take(k, k, k);
  for (int k = 1; k < N; ++k) take(k, 0, k);
  for (int k = 1; k < N; ++k) take(0, k, k);
  Field dal = Field::Zero(dim, static_cast<Eigen::Index>(N) * N);
  std::vector<bool> done(N, false);
  Field line(dim, N);
  for (int node : idx) {
    const int is = node % N;
    if (done[is]) continue;
    done[is] = true;
    for (int it = 0; it < N; ++it) line.col(it) = pic.alpha.col(is + static_cast<Eigen::Index>(N) * it);
    Field d = pathsolve::differentiate(mesh_t, line);
    for (int it = 0; it < N; ++it) dal.col(is + static_cast<Eigen::Index>(N) * it) = d.col(it);
  }
  append_nodes(c, co, h, pic.alpha, dal, idx, outp);
  record_picard(c, pic);
  c.eta = eta;
  c.tail_bound = std::exp(-eta * pad / h);
  c.notes.push_back("oblique grid " + std::to_string(N) + " x " + std::to_string(N) + ", pad " + fmt_num(pad));
  return c;
}

}  // namespace

Conjugator solve_infinity(const AnalyticBlockSystem& sys, double h, const WedgeParams& wedge,
                          const SolverOptions& opt) {
  if (!(wedge.eps > 0.0 && wedge.eps < kPi / 4)) throw InputError("wedge half-angle must lie in (0, pi/4)");
  if (!(wedge.R > wedge.apex)) throw InputError("wedge range end must exceed the apex");
  const Model md{&sys, false};
  const double probe = wedge.probe > 0.0 ? wedge.probe : wedge.R + 40.0;
  const Mat a_inf = sys.a(probe, h);
  const Spectrum sp = spectrum_of(kron_operator(a_inf, sys.m));
  const std::vector<int> group = dichotomy_groups(sp, wedge.eps);

  std::vector<cplx> candidates;
  if (wedge.direction)
    candidates.push_back(*wedge.direction / std::abs(*wedge.direction));
  else
    candidates = {1.0, std::polar(1.0, -wedge.eps), std::polar(1.0, wedge.eps)};
  const RayChoice ray = choose_ray(sp, group, candidates);
  if (!ray.found) {
    if (wedge.direction) throw PreconditionError("the given direction does not separate the eigenvalue groups");
    Conjugator c = solve_wedge_2d(md, h, wedge, a_inf, sp, group, opt);
    check_certificate(c, opt);
    return c;
  }
  const double eta = ray.margin;
  const double pad = wedge.pad > 0.0 ? wedge.pad : 28.0 * h / eta;
  const double reach = std::max(wedge.R, wedge.apex + 10.0 / eta);
  const double report = (wedge.R - wedge.apex) / ray.dir.real();
  const double extra = (reach - wedge.R) / ray.dir.real() + pad;
  RaySolve rs;
  solve_ray_impl(rs, md, h, wedge.apex, ray.dir, report, extra, a_inf, opt);
  Conjugator c = ray_conjugator(rs, md, h, wedge.output_stride, "wedge-ray");
  c.gamma = ray.dir;
  c.tail_bound = std::exp(-eta * extra / h);
  c.notes.push_back("limit operator sampled at Re x = " + fmt_num(probe) + ", pad " + fmt_num(extra));
  check_certificate(c, opt);
  return c;
}

double decay_rate(const Conjugator& c, double re_min) {
  std::vector<double> x, y;
  for (size_t i = 0; i < c.points.size(); ++i) {
    if (std::abs(c.points[i].imag()) > 1e-12 * (1.0 + std::abs(c.points[i])) || c.points[i].real() < re_min)
      continue;
    const double v = std::sqrt(c.alpha12[i].squaredNorm() + c.alpha21[i].squaredNorm());
    if (!(v > 0.0)) continue;
    x.push_back(c.points[i].real());
    y.push_back(v);
  }
  if (x.size() < 2) throw InputError("decay_rate needs at least two nonzero real-axis samples");
  return -fit::log_linear_slope(x, y);
}

SingularResult solve_singular(const AnalyticBlockSystem& sys, double h, const SlitDiskParams& params,
                              const SolverOptions& opt) {
  if (!(params.sample_radius > 0.0 && params.sample_radius < params.radius))
    throw InputError("sample radius must lie inside the starting circle");
  if (params.samples < 1) throw InputError("at least one sample is required");
  const Model md{&sys, true};
  const Mat a0 = sys.a(0.0, h);
  const Mat a_lim = -a0;
  const Spectrum sp = spectrum_of(kron_operator(a_lim, sys.m));
  const std::vector<int> group = dichotomy_groups(sp, params.eps);
  const RayChoice ray =
      choose_ray(sp, group, {1.0, std::polar(1.0, -params.eps), std::polar(1.0, params.eps)});
  if (!ray.found)
    throw PreconditionError("no single ray direction separates the modes at the singular point");
  const double apex = -std::log(params.radius);
  const double eta = ray.margin;
  const double pad = 28.0 * h / eta;

  SingularResult res;
  res.conj = empty_conjugator(md, h, "slit-disk");
  res.conj.gamma = ray.dir;
  res.conj.eta = eta;
  for (int k = 0; k < params.samples; ++k) {
    const double phi = -kPi + (k + 0.5) * 2.0 * kPi / params.samples;
    const cplx z = std::polar(params.sample_radius, phi);
    const cplx x = -std::log(params.sample_radius) - kI * phi;
    const double len = (x.real() - apex) / ray.dir.real();
    RaySolve rs;
    solve_ray_impl(rs, md, h, x - ray.dir * len, ray.dir, len, pad, a_lim, opt);
    const int node = rs.report_node;
    append_nodes(res.conj, rs.lp.co, h, rs.lp.pic.alpha, rs.lp.dalpha, {node}, {z});
    record_picard(res.conj, rs.lp.pic);
  }
  {
    RaySolve rs;
    const double len = (params.origin_depth - apex) / ray.dir.real();
    solve_ray_impl(rs, md, h, apex, ray.dir, len, pad, a_lim, opt);
    const int node = rs.report_node;
    const int m = sys.m, r = sys.n() - sys.m;
    res.alpha12_at_origin = Eigen::Map<const Mat>(rs.lp.pic.alpha.col(node).data(), m, r);
    res.alpha21_at_origin = Eigen::Map<const Mat>(rs.lp.pic.alpha.col(node).data() + m * r, r, m);
  }
  res.conj.tail_bound = std::exp(-eta * pad / h);

  // Taylor orders j with j h in the spectrum of the linear part at z = 0 and a
  // forcing coefficient with a component in that eigenspace.
  const Mat op0 = kron_operator(a0, sys.m);
  const Spectrum sp0 = spectrum_of(op0);
  const int count = std::min(512, static_cast<int>(std::ceil((sp0.max_abs + 1.0) / h)) + 2);
  const double rho = 0.9 * params.radius;
  const int m = sys.m, r = sys.n() - sys.m, dim = 2 * m * r;
  std::vector<std::vector<cplx>> coeffs(dim);
  double scale = 0.0;
  for (int e = 0; e < dim; ++e) {
    const bool upper = e < m * r;
    const int k = upper ? e : e - m * r;
    const int row = upper ? k % m : k % r, col = upper ? k / m : k / r;
    auto entry = [&](cplx z) {
      const Mat t = sys.theta(z, h);
      const cplx v = upper ? t(row, m + col) : t(m + row, col);
      scale = std::max(scale, std::abs(v));
      return v;
    };
    coeffs[e] = counterex::taylor_coefficients(entry, count, rho);
  }
  for (int j = 0; j < count && !res.resonant; ++j) {
    const cplx jh = static_cast<double>(j) * h;
    auto near = [&](cplx mu) { return std::abs(jh - mu) < 1e-12 * std::max(1.0, std::abs(mu)); };
    bool any = false;
    for (int i = 0; i < sp0.values.size(); ++i) any = any || near(sp0.values(i));
    if (!any) continue;
    spectral::Decomposition d = spectral::decompose(op0, [&](cplx mu) { return near(mu) ? 0 : 1; }, 2);
    Vec cj(dim);
    for (int e = 0; e < dim; ++e) cj(e) = coeffs[e][j];
    const double proj = (d.parts[0].dual * cj).norm();
    if (proj > 1e-9 * std::max(scale, 1e-300) / std::pow(rho, j)) {
      res.resonant = true;
      res.resonant_index = j;
      res.note = "resonance at Taylor order " + std::to_string(j) +
                 ": no conjugator analytic at z = 0 exists for this h (a z^j log z term appears)";
    }
  }
  if (!res.resonant) check_certificate(res.conj, opt);
  return res;
}

Conjugator solve_gap_cr(const AnalyticBlockSystem& sys, double h, const GapParams& params,
                        const SolverOptions& opt) {
  if (!(params.x_hi > params.x_lo)) throw InputError("gap interval is empty");
  const Model md{&sys, false};
  const int m = sys.m, r = sys.n() - sys.m;

  // Numerical ranges of the diagonal blocks decide the sweep directions.
  auto ranges = [&](cplx x) {
    const Mat a = sys.a(x, h);
    const Mat b11 = a.topLeftCorner(m, m), b22 = a.bottomRightCorner(r, r);
    Eigen::SelfAdjointEigenSolver<Mat> e1(Mat(0.5 * (b11 + b11.adjoint())), Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<Mat> e2(Mat(0.5 * (b22 + b22.adjoint())), Eigen::EigenvaluesOnly);
    return std::array<double, 4>{e1.eigenvalues()(0), e1.eigenvalues()(m - 1), e2.eigenvalues()(0),
                                 e2.eigenvalues()(r - 1)};
  };

  double max_norm = 0.0, gap12 = INFINITY, gap21 = INFINITY;
  const double coarse_end = params.x_hi + std::max(params.pad, 0.0);
  for (int k = 0; k <= 200; ++k) {
    const double x = params.x_lo + (coarse_end - params.x_lo) * k / 200.0;
    const Mat a = sys.a(x, h);
    max_norm = std::max(max_norm, a.topLeftCorner(m, m).norm() + a.bottomRightCorner(r, r).norm());
  }
  double panel = params.max_panel > 0.0 ? params.max_panel : std::min(2.0 * h / std::max(max_norm, 1e-300), 2.0 * h);

  // The strict gap, if any, sets the default pad.
  for (int k = 0; k <= 200; ++k) {
    const auto rg = ranges(params.x_lo + (params.x_hi - params.x_lo) * k / 200.0);
    gap12 = std::min(gap12, rg[0] - rg[3]);
    gap21 = std::min(gap21, rg[2] - rg[1]);
  }
  double pad = params.pad;
  const double gap = std::max(gap12, gap21);
  if (pad <= 0.0 && gap > 1e-12) pad = 28.0 * h / gap;

  LineProblem lp;
  std::vector<cplx> vertices{params.x_lo, params.x_hi};
  if (pad > 0.0) vertices.push_back(params.x_hi + pad);
  prepare(lp, md, h, vertices, panel, opt);

  const double tol = 1e-12 * (1.0 + max_norm);
  bool order12 = true, order21 = true;
  int fail12 = -1, fail21 = -1;
  for (int i = 0; i < lp.mesh.nodes(); ++i) {
    const auto rg = ranges(lp.mesh.z[i]);
    if (order12 && rg[0] < rg[3] - tol) {
      order12 = false;
      fail12 = i;
    }
    if (order21 && rg[2] < rg[1] - tol) {
      order21 = false;
      fail21 = i;
    }
  }
  if (!order12 && !order21) {
    const int at = std::max(fail12, fail21);
    throw PreconditionError("numerical ranges of the diagonal blocks are not ordered at x = " +
                            fmt_num(lp.mesh.z[at].real()));
  }

  // Channel a: h a' = A11 a - a A22 + g; channel b likewise with the blocks swapped.
  const Coeffs* co = &lp.co;
  Channel ca, cb;
  ca.basis = Mat::Zero(2 * m * r, m * r);
  ca.basis.topRows(m * r).setIdentity();
  ca.dual = ca.basis.transpose();
  cb.basis = Mat::Zero(2 * m * r, m * r);
  cb.basis.bottomRows(m * r).setIdentity();
  cb.dual = cb.basis.transpose();
  ca.variable_generator = [co, m, r](int i) {
    const Mat a11 = Coeffs::blk(co->a11, i, m, m), a22 = Coeffs::blk(co->a22, i, r, r);
    return spectral::BlockSylvester{a11, a22}.kronecker().topLeftCorner(m * r, m * r).eval();
  };
  cb.variable_generator = [co, m, r](int i) {
    const Mat a11 = Coeffs::blk(co->a11, i, m, m), a22 = Coeffs::blk(co->a22, i, r, r);
    return spectral::BlockSylvester{a11, a22}.kronecker().bottomRightCorner(m * r, m * r).eval();
  };
  ca.forward = !order12;
  cb.forward = order12;
  run_line(lp, md, h, {ca, cb}, nullptr, opt);

  Conjugator c = empty_conjugator(md, h, "gap-real-line");
  const int last = lp.mesh.vertex_node[1];
  std::vector<int> idx;
  std::vector<cplx> pts;
  for (int i = 0; i <= last; ++i) {
    idx.push_back(i);
    pts.push_back(lp.mesh.z[i]);
  }
  append_nodes(c, lp.co, h, lp.pic.alpha, lp.dalpha, idx, pts);
  record_picard(c, lp.pic);
  c.eta = std::max(gap, 0.0);
  c.notes.push_back(std::string("alpha12 integrated ") + (order12 ? "backward" : "forward") + ", pad " +
                    fmt_num(pad));
  check_certificate(c, opt);
  return c;
}

double certify(const AnalyticBlockSystem& sys, double h, const std::vector<cplx>& points, const Mat& alpha,
               const Mat& dalpha, double* diagonal_mismatch) {
  const Model md{&sys, false};
  Coeffs co;
  co.build(md, h, points);
  double sup = 0.0, dsup = 0.0;
  for (int i = 0; i < co.nodes(); ++i) {
    double dg = 0.0;
    sup = std::max(sup, node_certificate(co, sys.p, h, alpha.col(i).data(), dalpha.col(i).data(), i, dg));
    dsup = std::max(dsup, dg);
  }
  if (diagonal_mismatch) *diagonal_mismatch = dsup;
  return sup;
}

}  // namespace semidiag::exactdiag
