#include "epcal/rotation.hpp"

#include <Eigen/LU>
#include <cmath>
#include <sstream>

#include "epcal/error.hpp"

namespace epcal {

namespace {

Eigen::Matrix3d skew(const Eigen::Vector3d& w) {
  Eigen::Matrix3d K;
  K << 0.0, -w.z(), w.y(),
       w.z(), 0.0, -w.x(),
       -w.y(), w.x(), 0.0;
  return K;
}

}  // namespace

Eigen::Matrix3d rodrigues_to_matrix(const Eigen::Vector3d& axis_angle) {
  const double theta2 = axis_angle.squaredNorm();
  const Eigen::Matrix3d K = skew(axis_angle);
  if (theta2 < 1e-20) {
    // I + K + K^2/2; truncation error is below 1e-30.
    return Eigen::Matrix3d::Identity() + K + 0.5 * K * K;
  }
  const double theta = std::sqrt(theta2);
  const double a = std::sin(theta) / theta;
  const double b = (1.0 - std::cos(theta)) / theta2;
  return Eigen::Matrix3d::Identity() + a * K + b * K * K;
}

Eigen::Vector3d matrix_to_rodrigues(const Eigen::Matrix3d& R) {
  if (!R.allFinite()) throw InvalidRotation("rotation matrix has non-finite entries");
  const double ortho_err = (R.transpose() * R - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (ortho_err > 1e-9) {
    std::ostringstream msg;
    msg << "matrix is not orthonormal (max |R^T R - I| = " << ortho_err << ")";
    throw InvalidRotation(msg.str());
  }
  if (R.determinant() <= 0.0) throw InvalidRotation("matrix is a reflection (det <= 0)");

  // Shepperd: pick the largest quaternion component to divide by.
  const double trace = R.trace();
  double w, x, y, z;
  if (trace >= R(0, 0) && trace >= R(1, 1) && trace >= R(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + trace);
    w = 0.25 * s;
    x = (R(2, 1) - R(1, 2)) / s;
    y = (R(0, 2) - R(2, 0)) / s;
    z = (R(1, 0) - R(0, 1)) / s;
  } else if (R(0, 0) >= R(1, 1) && R(0, 0) >= R(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 + R(0, 0) - R(1, 1) - R(2, 2));
    w = (R(2, 1) - R(1, 2)) / s;
    x = 0.25 * s;
    y = (R(0, 1) + R(1, 0)) / s;
    z = (R(0, 2) + R(2, 0)) / s;
  } else if (R(1, 1) >= R(2, 2)) {
    const double s = 2.0 * std::sqrt(1.0 - R(0, 0) + R(1, 1) - R(2, 2));
    w = (R(0, 2) - R(2, 0)) / s;
    x = (R(0, 1) + R(1, 0)) / s;
    y = 0.25 * s;
    z = (R(1, 2) + R(2, 1)) / s;
  } else {
    const double s = 2.0 * std::sqrt(1.0 - R(0, 0) - R(1, 1) + R(2, 2));
    w = (R(1, 0) - R(0, 1)) / s;
    x = (R(0, 2) + R(2, 0)) / s;
    y = (R(1, 2) + R(2, 1)) / s;
    z = 0.25 * s;
  }
  if (w < 0.0) {
    w = -w;
    x = -x;
    y = -y;
    z = -z;
  }
  const Eigen::Vector3d v(x, y, z);
  const double n = v.norm();
  if (n == 0.0) return Eigen::Vector3d::Zero();
  return (2.0 * std::atan2(n, w) / n) * v;
}

Eigen::Vector3d canonical_axis_angle(const Eigen::Vector3d& axis_angle) {
  const double theta = axis_angle.norm();
  if (theta <= 3.14159265358979323846) return axis_angle;
  return matrix_to_rodrigues(rodrigues_to_matrix(axis_angle));
}

}  // namespace epcal
