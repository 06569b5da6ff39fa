#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace semidiag {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RealVec = Eigen::VectorXd;

inline constexpr cplx kI{0.0, 1.0};

}  // namespace semidiag
