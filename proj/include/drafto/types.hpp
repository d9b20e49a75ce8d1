#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

namespace drafto {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Iso3 = Eigen::Isometry3d;

// Read-only vector argument that accepts blocks and expressions without copies.
using VecRef = Eigen::Ref<const Eigen::VectorXd>;
using MatRef = Eigen::Ref<const Eigen::MatrixXd>;

}  // namespace drafto
