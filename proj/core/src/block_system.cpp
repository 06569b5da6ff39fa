#include "semidiag/block_system.hpp"

#include <cmath>

#include "semidiag/errors.hpp"

namespace semidiag {

Mat SampledBlockSystem::block_diagonal(int i) const {
  const int mm = m(), nn = n();
  Mat d = Mat::Zero(nn, nn);
  d.topLeftCorner(mm, mm) = a11[i];
  d.bottomRightCorner(nn - mm, nn - mm) = a22[i];
  return d;
}

Mat SampledBlockSystem::full(int i) const {
  const int mm = m(), nn = n();
  Mat d = block_diagonal(i);
  const double s = std::pow(h, order);
  d.topRightCorner(mm, nn - mm) = s * theta1[i];
  d.bottomLeftCorner(nn - mm, mm) = s * theta2[i];
  return d;
}

double SampledBlockSystem::theta_sup() const {
  double s = 0.0;
  for (int i = 0; i < size(); ++i)
    s = std::max(s, std::sqrt(theta1[i].squaredNorm() + theta2[i].squaredNorm()));
  return s;
}

double SampledBlockSystem::offdiag_sup() const { return std::pow(h, order) * theta_sup(); }

SampledBlockSystem SampledBlockSystem::from_matrix(const MatrixFunction& f, int m, int order, double h,
                                                   const Grid& grid) {
  const int n = f.dim();
  if (m <= 0 || m >= n) throw InputError("block size must satisfy 0 < m < n");
  SampledBlockSystem bs;
  bs.grid = grid;
  bs.h = h;
  bs.order = order;
  const double s = std::pow(h, order);
  for (int k = 0; k < grid.size(); ++k) {
    Mat a = f(grid.point(k), h);
    bs.a11.push_back(a.topLeftCorner(m, m));
    bs.a22.push_back(a.bottomRightCorner(n - m, n - m));
    bs.theta1.push_back(a.topRightCorner(m, n - m) / s);
    bs.theta2.push_back(a.bottomLeftCorner(n - m, m) / s);
  }
  return bs;
}

}  // namespace semidiag
