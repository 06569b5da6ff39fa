#include "semidiag/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "semidiag/errors.hpp"

namespace semidiag::spectral {

namespace {

bool canonical_less(cplx a, cplx b) {
  if (a.real() != b.real()) return a.real() > b.real();
  return a.imag() > b.imag();
}

double scale_of(const Mat& m) { return std::max(1.0, m.norm()); }

struct Schur {
  Mat t, q;
};

Schur complex_schur(const Mat& m) {
  if (!m.allFinite()) throw NumericalError("eig: matrix has non-finite entries");
  Eigen::ComplexSchur<Mat> cs(m);
  if (cs.info() != Eigen::Success) throw ConvergenceFailure("eig: Schur iteration did not converge", 0.0);
  return {cs.matrixT(), cs.matrixU()};
}

// Canonical index of every diagonal position of t.
std::vector<int> canonical_ranks(const Mat& t) {
  const int n = static_cast<int>(t.rows());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return canonical_less(t(a, a), t(b, b)); });
  std::vector<int> rank(n);
  for (int k = 0; k < n; ++k) rank[order[k]] = k;
  return rank;
}

// Swap adjacent diagonal entries k, k+1 of an upper triangular t by a unitary
// similarity built from the eigenvector of the 2x2 block for t(k+1,k+1).
void swap_adjacent(Mat& t, Mat& q, int k) {
  const int n = static_cast<int>(t.rows());
  cplx t11 = t(k, k), t22 = t(k + 1, k + 1), t12 = t(k, k + 1);
  cplx v1 = t12, v2 = t22 - t11;
  double r = std::hypot(std::abs(v1), std::abs(v2));
  if (r == 0.0) return;  // equal eigenvalues, already decoupled
  v1 /= r;
  v2 /= r;
  Eigen::Matrix2cd g;
  g << v1, -std::conj(v2), v2, std::conj(v1);
  t.middleRows(k, 2).rightCols(n - k) = g.adjoint() * t.middleRows(k, 2).rightCols(n - k);
  t.middleCols(k, 2).topRows(k + 2) = t.middleCols(k, 2).topRows(k + 2) * g;
  q.middleCols(k, 2) = q.middleCols(k, 2) * g;
  t(k + 1, k) = 0.0;
  t(k, k) = t22;
  t(k + 1, k + 1) = t11;
}

// Stable sort of the Schur diagonal by label, carrying the labels along.
void sort_by_label(Mat& t, Mat& q, std::vector<int>& label) {
  const int n = static_cast<int>(t.rows());
  for (int i = 1; i < n; ++i)
    for (int k = i; k > 0 && label[k - 1] > label[k]; --k) {
      swap_adjacent(t, q, k - 1);
      std::swap(label[k - 1], label[k]);
    }
}

Decomposition split_sorted(const Mat& t, const Mat& q, const std::vector<int>& label, int k) {
  const int n = static_cast<int>(t.rows());
  Decomposition d;
  d.parts.resize(k);
  d.eigenvalues.resize(k);
  Mat basis = q;            // spans the not-yet-split trailing subspace
  Mat dual = q.adjoint();
  Mat tt = t;
  int start = 0;
  for (int g = 0; g < k; ++g) {
    int cnt = static_cast<int>(std::count(label.begin(), label.end(), g));
    int rest = n - start - cnt;
    InvariantBasis& part = d.parts[g];
    d.eigenvalues[g] = tt.diagonal().head(cnt);
    if (cnt == 0) {
      part.basis = Mat::Zero(n, 0);
      part.dual = Mat::Zero(0, n);
      part.block = Mat::Zero(0, 0);
      continue;
    }
    if (rest == 0) {
      part.basis = basis;
      part.dual = dual;
      part.block = tt;
      start += cnt;
      continue;
    }
    Mat t11 = tt.topLeftCorner(cnt, cnt);
    Mat t22 = tt.bottomRightCorner(rest, rest);
    Mat x = solve_triangular_sylvester(t11, t22, -tt.topRightCorner(cnt, rest));
    part.basis = basis.leftCols(cnt);
    part.dual = dual.topRows(cnt) - x * dual.bottomRows(rest);
    part.block = t11;
    Mat nb = basis.leftCols(cnt) * x + basis.rightCols(rest);
    Mat nd = dual.bottomRows(rest);
    basis = nb;
    dual = nd;
    tt = t22;
    start += cnt;
  }
  return d;
}

}  // namespace

EigenResult eig(const Mat& m, double cluster_tol) {
  Schur s = complex_schur(m);
  const int n = static_cast<int>(m.rows());
  EigenResult r;
  r.schur_t = s.t;
  r.schur_q = s.q;
  std::vector<cplx> vals(n);
  for (int i = 0; i < n; ++i) vals[i] = s.t(i, i);
  std::stable_sort(vals.begin(), vals.end(), canonical_less);
  r.values = Eigen::Map<Vec>(vals.data(), n);

  const double tol = cluster_tol * scale_of(m);
  std::vector<bool> seen(n, false);
  for (int i = 0; i < n; ++i) {
    if (seen[i]) continue;
    cplx sum = 0.0;
    int mult = 0;
    for (int j = i; j < n; ++j)
      if (!seen[j] && std::abs(vals[j] - vals[i]) <= tol) {
        seen[j] = true;
        sum += vals[j];
        ++mult;
      }
    if (mult < 2) continue;
    cplx lam = sum / static_cast<double>(mult);
    Mat shifted = m - lam * Mat::Identity(n, n);
    Eigen::JacobiSVD<Mat> svd(shifted);
    RealVec sv = svd.singularValues();
    int nullity = 0;
    for (int k = 0; k < sv.size(); ++k)
      if (sv(k) <= std::sqrt(tol) * scale_of(m)) ++nullity;
    if (nullity < mult) r.defective = true;
  }
  return r;
}

void reorder_schur(Mat& t, Mat& q, const std::vector<bool>& select) {
  std::vector<int> label(select.size());
  for (size_t i = 0; i < select.size(); ++i) label[i] = select[i] ? 0 : 1;
  sort_by_label(t, q, label);
}

Decomposition decompose(const Mat& m, const std::function<int(cplx)>& label_of, int k) {
  Schur s = complex_schur(m);
  const int n = static_cast<int>(m.rows());
  std::vector<int> label(n);
  for (int i = 0; i < n; ++i) {
    label[i] = label_of(s.t(i, i));
    if (label[i] < 0 || label[i] >= k) throw InputError("decompose: label out of range");
  }
  sort_by_label(s.t, s.q, label);
  return split_sorted(s.t, s.q, label, k);
}

GroupingRule SpectralSplit::continuation() const {
  GroupingRule r;
  r.kind = GroupingRule::Kind::NearestReference;
  r.mean1 = mean1;
  r.mean2 = mean2;
  r.size1 = size1;
  return r;
}

SpectralSplit spectral_split(const Mat& m, const GroupingRule& rule, const SplitOptions& opt) {
  Schur s = complex_schur(m);
  const int n = static_cast<int>(m.rows());
  std::vector<int> rank = canonical_ranks(s.t);
  std::vector<int> canon_pos(n);
  for (int i = 0; i < n; ++i) canon_pos[rank[i]] = i;

  std::vector<int> group(n, 2);  // per canonical index
  switch (rule.kind) {
    case GroupingRule::Kind::SignOfRealPart:
      for (int c = 0; c < n; ++c) group[c] = s.t(canon_pos[c], canon_pos[c]).real() > 0 ? 1 : 2;
      break;
    case GroupingRule::Kind::IndexSets:
      for (int c : rule.group1) {
        if (c < 0 || c >= n) throw InputError("spectral_split: group index out of range");
        group[c] = 1;
      }
      break;
    case GroupingRule::Kind::NearestReference: {
      std::vector<int> order(n);
      std::iota(order.begin(), order.end(), 0);
      auto score = [&](int c) {
        cplx v = s.t(canon_pos[c], canon_pos[c]);
        return std::abs(v - rule.mean1) - std::abs(v - rule.mean2);
      };
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return score(a) < score(b); });
      for (int k = 0; k < rule.size1 && k < n; ++k) group[order[k]] = 1;
      break;
    }
  }

  SpectralSplit out;
  out.eigenvalues.resize(n);
  for (int c = 0; c < n; ++c) out.eigenvalues(c) = s.t(canon_pos[c], canon_pos[c]);
  out.group = group;
  int n1 = static_cast<int>(std::count(group.begin(), group.end(), 1));
  if (n1 == 0 || n1 == n)
    throw SeparationFailure("spectral_split: one eigenvalue group is empty", 0.0, 0.0);

  double gap = std::numeric_limits<double>::infinity();
  cplx sum1 = 0.0, sum2 = 0.0;
  for (int a = 0; a < n; ++a) {
    (group[a] == 1 ? sum1 : sum2) += out.eigenvalues(a);
    for (int b = 0; b < n; ++b)
      if (group[a] == 1 && group[b] == 2) gap = std::min(gap, std::abs(out.eigenvalues(a) - out.eigenvalues(b)));
  }
  out.gap = gap;
  out.size1 = n1;
  out.mean1 = sum1 / static_cast<double>(n1);
  out.mean2 = sum2 / static_cast<double>(n - n1);
  if (gap < opt.min_gap * scale_of(m))
    throw SeparationFailure("spectral_split: eigenvalue groups are " + std::to_string(gap) + " apart", gap, 0.0);

  std::vector<int> label(n);
  for (int i = 0; i < n; ++i) label[i] = group[rank[i]] - 1;
  sort_by_label(s.t, s.q, label);
  Decomposition d = split_sorted(s.t, s.q, label, 2);
  out.part1 = d.parts[0];
  out.part2 = d.parts[1];
  out.pi1 = out.part1.projector();
  out.pi2 = Mat::Identity(n, n) - out.pi1;
  return out;
}

Mat solve_triangular_sylvester(const Mat& ta, const Mat& tb, const Mat& c) {
  const int a = static_cast<int>(ta.rows()), b = static_cast<int>(tb.rows());
  const double tol = 1e-14 * std::max({1.0, ta.norm(), tb.norm()});
  Mat x(a, b);
  for (int j = 0; j < b; ++j) {
    Vec rhs = c.col(j);
    for (int k = 0; k < j; ++k) rhs += x.col(k) * tb(k, j);
    const cplx mu = tb(j, j);
    for (int i = a - 1; i >= 0; --i) {
      cplx acc = rhs(i);
      for (int l = i + 1; l < a; ++l) acc -= ta(i, l) * x(l, j);
      cplx d = ta(i, i) - mu;
      if (std::abs(d) <= tol)
        throw SingularOperator("Sylvester operator is singular: the blocks share the eigenvalue " +
                               std::to_string(mu.real()) + "+" + std::to_string(mu.imag()) + "i");
      x(i, j) = acc / d;
    }
  }
  return x;
}

Mat solve_sylvester(const Mat& a, const Mat& b, const Mat& c) {
  if (a.rows() == 0 || b.rows() == 0) return Mat::Zero(a.rows(), b.rows());
  Schur sa = complex_schur(a), sb = complex_schur(b);
  Mat ct = sa.q.adjoint() * c * sb.q;
  Mat y = solve_triangular_sylvester(sa.t, sb.t, ct);
  return sa.q * y * sb.q.adjoint();
}

double BlockSylvester::separation() const {
  Vec l = Eigen::ComplexEigenSolver<Mat>(a11, false).eigenvalues();
  Vec m = Eigen::ComplexEigenSolver<Mat>(a22, false).eigenvalues();
  double s = std::numeric_limits<double>::infinity();
  for (int i = 0; i < l.size(); ++i)
    for (int j = 0; j < m.size(); ++j) s = std::min(s, std::abs(l(i) - m(j)));
  return s;
}

std::pair<Mat, Mat> BlockSylvester::solve(const Mat& c12, const Mat& c21) const {
  return {solve_sylvester(a11, a22, -c12), solve_sylvester(a22, a11, -c21)};
}

std::pair<Mat, Mat> BlockSylvester::apply(const Mat& x12, const Mat& x21) const {
  return {a11 * x12 - x12 * a22, a22 * x21 - x21 * a11};
}

Mat BlockSylvester::kronecker() const {
  const int m = static_cast<int>(a11.rows()), r = static_cast<int>(a22.rows());
  const int N = m * r;
  Mat k = Mat::Zero(2 * N, 2 * N);
  Mat im = Mat::Identity(m, m), ir = Mat::Identity(r, r);
  // vec(A X) = (I kron A) vec X,  vec(X B) = (B^T kron I) vec X
  auto kron = [](const Mat& p, const Mat& q) {
    Mat out(p.rows() * q.rows(), p.cols() * q.cols());
    for (int i = 0; i < p.rows(); ++i)
      for (int j = 0; j < p.cols(); ++j) out.block(i * q.rows(), j * q.cols(), q.rows(), q.cols()) = p(i, j) * q;
    return out;
  };
  k.topLeftCorner(N, N) = kron(ir, a11) - kron(a22.transpose(), im);
  k.bottomRightCorner(N, N) = kron(im, a22) - kron(a11.transpose(), ir);
  return k;
}

Vec block_sylvester_eigenvalues(const Mat& a11, const Mat& a22) {
  Vec l = Eigen::ComplexEigenSolver<Mat>(a11, false).eigenvalues();
  Vec m = Eigen::ComplexEigenSolver<Mat>(a22, false).eigenvalues();
  Vec out(2 * l.size() * m.size());
  int k = 0;
  for (int i = 0; i < l.size(); ++i)
    for (int j = 0; j < m.size(); ++j) {
      out(k++) = l(i) - m(j);
      out(k++) = m(j) - l(i);
    }
  return out;
}

int dichotomy_group(cplx mu, double eps, double ray_tol) {
  if (std::abs(mu) == 0.0) throw PreconditionError("dichotomy split: zero eigenvalue");
  const double a = std::arg(mu);
  const double edge = M_PI / 2 + eps;
  if (std::abs(a - edge) < ray_tol || std::abs(a + edge) < ray_tol)
    throw PreconditionError("dichotomy split: eigenvalue on a boundary ray; use a smaller eps");
  if (a > -eps && a < edge) return 1;
  if (a > -edge && a < eps) return 2;
  return 0;
}

DichotomySplit dichotomy_projectors(const Mat& m, double eps) {
  const int n = static_cast<int>(m.rows());
  DichotomySplit d;
  d.parts = decompose(m, [eps](cplx mu) { return dichotomy_group(mu, eps); }, 3);
  d.pi_I = d.parts.parts[0].projector();
  d.pi_II = d.parts.parts[1].projector();
  d.pi_III = d.parts.parts[2].projector();
  EigenResult e = eig(m);
  d.eigenvalues = e.values;
  d.group.resize(n);
  for (int i = 0; i < n; ++i) d.group[i] = dichotomy_group(e.values(i), eps);
  return d;
}

}  // namespace semidiag::spectral
