#pragma once

#include <Eigen/Dense>

namespace pswarm {

using Index = Eigen::Index;

/// Dense dynamic matrix. Row-major so that one time node occupies one
/// contiguous row, which is the access pattern of the dynamics evaluation.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Vec = Eigen::VectorXd;
using RowVec = Eigen::Matrix<double, 1, Eigen::Dynamic>;
using Vec3 = Eigen::Vector3d;

/// Components per Cartesian state (position + velocity).
inline constexpr Index state_dim = 6;

} // namespace pswarm
