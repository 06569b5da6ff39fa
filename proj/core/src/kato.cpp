#include "semidiag/kato.hpp"

#include <cmath>

#include <Eigen/LU>

#include "semidiag/errors.hpp"

namespace semidiag::kato {

using spectral::GroupingRule;
using spectral::SpectralSplit;

ProjectorField::ProjectorField(MatrixFunction a, double h, GroupingRule initial, spectral::SplitOptions opt)
    : a_(std::move(a)), h_(h), initial_(std::move(initial)), opt_(opt) {}

SpectralSplit ProjectorField::at(cplx x, const GroupingRule& rule) const {
  try {
    return spectral::spectral_split(a_(x, h_), rule, opt_);
  } catch (const SeparationFailure& e) {
    throw SeparationFailure(std::string(e.what()) + " at x = " + std::to_string(x.real()) + "+" +
                                std::to_string(x.imag()) + "i",
                            e.gap(), x);
  }
}

Mat ProjectorField::derivative(cplx x, const SpectralSplit& split, cplx dir) const {
  const GroupingRule rule = split.continuation();
  return fd_derivative([&](cplx y) { return at(y, rule).pi1; }, x, dir);
}

namespace {

struct Sample {
  Mat pi, k;
};

Sample sample(const ProjectorField& f, cplx x, const GroupingRule& rule, cplx dir, SpectralSplit* out = nullptr) {
  SpectralSplit s = f.at(x, rule);
  Mat dp = f.derivative(x, s, dir);
  Sample r{s.pi1, dp * s.pi1 - s.pi1 * dp};
  if (out) *out = std::move(s);
  return r;
}

double condition(const Mat& t, const Mat& tinv) {
  return t.cwiseAbs().colwise().sum().maxCoeff() * tinv.cwiseAbs().colwise().sum().maxCoeff();
}

}  // namespace

TransportedBasis transport(const ProjectorField& field, const Grid& grid, std::optional<Mat> t0) {
  TransportedBasis tb;
  tb.grid = grid;
  const cplx dx = grid.step();
  const cplx dir = dx / std::abs(dx);

  SpectralSplit s0;
  Sample cur = sample(field, grid.point(0), field.initial_rule(), dir, &s0);
  tb.m = s0.size1;
  Mat t;
  if (t0) {
    t = *t0;
  } else {
    t.resize(s0.pi1.rows(), s0.pi1.cols());
    t << s0.part1.basis, s0.part2.basis;
  }
  const int m = tb.m;
  const int n = static_cast<int>(t.rows());
  GroupingRule rule = s0.continuation();

  auto record = [&](const Mat& tt, const Sample& smp) {
    Mat pi2 = Mat::Identity(n, n) - smp.pi;
    double err = (smp.pi * tt.leftCols(m) - tt.leftCols(m)).norm() + (pi2 * tt.rightCols(n - m) - tt.rightCols(n - m)).norm();
    err /= std::max(1.0, tt.norm());
    tb.max_invariance_error = std::max(tb.max_invariance_error, err);
    if (err > 1e-6)
      throw PreconditionError("Kato transport drifted off the spectral subspaces (" + std::to_string(err) +
                              "); refine the grid");
    tb.t_hat.push_back(tt);
    tb.generator.push_back(smp.k);
    tb.t_hat_prime.push_back(smp.k * tt);
    tb.pi1.push_back(smp.pi);
  };
  record(t, cur);

  for (int j = 0; j < grid.intervals; ++j) {
    const cplx x = grid.point(j);
    SpectralSplit smid, snext;
    Sample mid = sample(field, x + 0.5 * dx, rule, dir, &smid);
    Sample next = sample(field, x + dx, smid.continuation(), dir, &snext);
    tb.max_projector_jump = std::max(tb.max_projector_jump, (next.pi - cur.pi).norm());
    if ((next.pi - cur.pi).norm() > 0.1)
      throw PreconditionError("Kato transport: projector changes by more than 0.1 per grid step; refine the grid");
    Mat k1 = cur.k * t;
    Mat k2 = mid.k * (t + 0.5 * dx * k1);
    Mat k3 = mid.k * (t + 0.5 * dx * k2);
    Mat k4 = next.k * (t + dx * k3);
    t += dx / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    cur = next;
    rule = snext.continuation();
    record(t, cur);
  }
  return tb;
}

InitialReduction initial_blockdiag(const MatrixFunction& a, const MatrixFunction* b, double h, const Grid& grid,
                                   const GroupingRule& rule, const spectral::SplitOptions& opt) {
  ProjectorField field(a, h, rule, opt);
  InitialReduction out;
  out.basis = transport(field, grid);
  const TransportedBasis& tb = out.basis;
  const int m = tb.m;
  SampledBlockSystem& bs = out.system;
  bs.grid = grid;
  bs.h = h;
  bs.order = 1;
  for (int k = 0; k < grid.size(); ++k) {
    const cplx x = grid.point(k);
    const Mat& t = tb.t_hat[k];
    const int n = static_cast<int>(t.rows());
    Eigen::PartialPivLU<Mat> lu(t);
    Mat tinv = lu.inverse();
    double cond = condition(t, tinv);
    out.basis.max_condition = std::max(out.basis.max_condition, cond);
    if (!(cond < 1e8)) throw NumericalError("initial_blockdiag: transported basis is ill-conditioned");
    Mat ta = tinv * a(x, h) * t;
    Mat tbm = b ? Mat(tinv * (*b)(x, h) * t) : Mat::Zero(n, n);
    Mat tt = tinv * tb.t_hat_prime[k];
    double off = std::sqrt(ta.topRightCorner(m, n - m).squaredNorm() + ta.bottomLeftCorner(n - m, m).squaredNorm());
    out.offdiag_residual = std::max(out.offdiag_residual, off / std::max(1.0, ta.norm()));
    Mat g = ta + h * tbm - h * tt;
    bs.a11.push_back(g.topLeftCorner(m, m));
    bs.a22.push_back(g.bottomRightCorner(n - m, n - m));
    bs.theta1.push_back(tbm.topRightCorner(m, n - m) - tt.topRightCorner(m, n - m));
    bs.theta2.push_back(tbm.bottomLeftCorner(n - m, m) - tt.bottomLeftCorner(n - m, m));
  }
  return out;
}

}  // namespace semidiag::kato
