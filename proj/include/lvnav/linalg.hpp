#pragma once

#include <Eigen/Dense>

namespace lvnav {

inline constexpr int kStateDim = 8;

using Vec3 = Eigen::Vector3d;
using Vec8 = Eigen::Matrix<double, kStateDim, 1>;
using Mat8 = Eigen::Matrix<double, kStateDim, kStateDim>;
using Eigen::MatrixXd;
using Eigen::VectorXd;

}  // namespace lvnav
