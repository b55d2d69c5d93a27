#pragma once

#include <complex>
#include <cstdint>

#include <Eigen/Dense>

namespace pbit {

using cplx = std::complex<double>;

using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;
using BVec = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, 1>;  // {0,1} entries

using Index = Eigen::Index;

}  // namespace pbit
