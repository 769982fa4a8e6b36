#pragma once

#include <Eigen/Core>

namespace epcal {

/// Rotation matrix for an axis-angle vector (direction = axis, norm = angle).
/// Total function; uses a second-order Taylor expansion near zero.
Eigen::Matrix3d rodrigues_to_matrix(const Eigen::Vector3d& axis_angle);

/// Inverse of rodrigues_to_matrix. The result has norm in [0, pi].
/// Throws InvalidRotation if R is not orthonormal (1e-9) or det(R) <= 0.
Eigen::Vector3d matrix_to_rodrigues(const Eigen::Matrix3d& R);

/// Maps an arbitrary axis-angle vector to the equivalent one with norm in [0, pi].
Eigen::Vector3d canonical_axis_angle(const Eigen::Vector3d& axis_angle);

}  // namespace epcal
