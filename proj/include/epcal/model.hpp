#pragma once

#include <Eigen/Core>
#include <string_view>

#include "epcal/error.hpp"
#include "epcal/rotation.hpp"

namespace epcal {

inline constexpr double kPi = 3.14159265358979323846;

constexpr double deg_to_rad(double deg) { return deg * (kPi / 180.0); }
constexpr double rad_to_deg(double rad) { return rad * (180.0 / kPi); }

/// Half of a 195 degree field of view.
inline constexpr double kDefaultThetaMax = deg_to_rad(97.5);

/// Pixel-space affine map: u = fx*x + sk*y + u0, v = fy*y + v0.
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double sk = 0.0;
  double u0 = 0.0;
  double v0 = 0.0;

  bool operator==(const CameraIntrinsics&) const = default;
};

/// r(theta) = theta + k1 theta^3 + k2 theta^5 + k3 theta^7 + k4 theta^9
struct RadialDistortion {
  double k1 = 0.0;
  double k2 = 0.0;
  double k3 = 0.0;
  double k4 = 0.0;

  bool operator==(const RadialDistortion&) const = default;
};

/// E(theta) = e1 theta^3 + e2 theta^5 + e3 theta^7 + e4 theta^9, in target
/// length units (mm).
struct EntrancePupil {
  double e1 = 0.0;
  double e2 = 0.0;
  double e3 = 0.0;
  double e4 = 0.0;

  bool is_zero() const { return e1 == 0.0 && e2 == 0.0 && e3 == 0.0 && e4 == 0.0; }
  bool operator==(const EntrancePupil&) const = default;
};

/// World -> camera rigid transform, X_c = R(rotation) X + translation.
struct Pose {
  Eigen::Vector3d rotation = Eigen::Vector3d::Zero();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Eigen::Matrix3d rotation_matrix() const { return rodrigues_to_matrix(rotation); }
  bool operator==(const Pose& other) const {
    return rotation == other.rotation && translation == other.translation;
  }
};

enum class ModelKind { kSvp, kNsvp };

std::string_view to_string(ModelKind kind);
/// Accepts "svp"/"nsvp" in any case. Throws InvalidArgument otherwise.
ModelKind parse_model_kind(std::string_view text);

struct CameraModel {
  CameraIntrinsics intrinsics;
  RadialDistortion radial;
  EntrancePupil ep;
  ModelKind kind = ModelKind::kNsvp;
  double theta_max = kDefaultThetaMax;

  /// Throws InvalidArgument when a structural invariant is broken
  /// (fx, fy > 0, finite coefficients, SVP => zero EP, theta_max in (0, pi)).
  void validate() const;
  bool operator==(const CameraModel&) const = default;
};

/// Point on the planar target (world Z = 0), mm.
struct TargetPoint {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const TargetPoint&) const = default;
};

/// Pose with its rotation matrix evaluated once, for repeated transforms.
struct RigidTransform {
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();

  RigidTransform() = default;
  explicit RigidTransform(const Pose& pose) : R(pose.rotation_matrix()), t(pose.translation) {}

  /// [R|t] (x, y, z_shift, 1)^T
  Eigen::Vector3d apply(const TargetPoint& p, double z_shift) const {
    return R.col(0) * p.x + R.col(1) * p.y + R.col(2) * z_shift + t;
  }
};

double ep_shift(double theta, const EntrancePupil& ep);

/// The entrance-pupil shift is added to the world Z coordinate before the
/// rigid transform.
Eigen::Vector3d transform_world_to_camera(const Pose& pose, const TargetPoint& point,
                                          double z_shift);

/// Angle between the ray to `camera_point` and +Z_c, computed as
/// atan2(hypot(X, Y), Z). Throws InvalidArgument for the zero vector.
double incidence_angle(const Eigen::Vector3d& camera_point);

struct ThetaSolverOptions {
  double tol = 1e-12;
  int max_iter = 20;
};

enum class ProjectionStatus { kOk, kOutOfFov, kBehindCamera, kNoConvergence };

std::string_view to_string(ProjectionStatus status);

class ProjectionError : public Error {
 public:
  ProjectionError(ProjectionStatus status, const std::string& what)
      : Error(what), status_(status) {}
  ProjectionStatus status() const { return status_; }

 private:
  ProjectionStatus status_;
};

/// Incidence angle under the entrance-pupil model. Fixed-point iteration
/// seeded with the unshifted angle:
///   theta_{k+1} = incidence_angle(T(point, E(theta_k)))
/// until |theta_{k+1} - theta_k| < tol. Returns the last iterate.
/// Throws ProjectionError (kBehindCamera / kNoConvergence).
double resolve_theta_nsvp(const Pose& pose, const TargetPoint& point, const EntrancePupil& ep,
                          const ThetaSolverOptions& options = {});

double radial_distance(double theta, const RadialDistortion& radial);
/// dr/dtheta
double radial_derivative(double theta, const RadialDistortion& radial);

/// True if dr/dtheta > 0 at every node of a 1024-point grid on [0, theta_max].
bool is_radial_monotone(const RadialDistortion& radial, double theta_max);

/// theta in [0, theta_max] with |r(theta) - r| < 1e-12. Newton seeded at
/// theta = r with bisection fallback. Throws RangeError if r is outside
/// [0, r(theta_max)] or the polynomial is not monotone.
double invert_radial(double r, const RadialDistortion& radial, double theta_max);

struct Projection {
  Eigen::Vector2d pixel = Eigen::Vector2d::Zero();
  double theta = 0.0;
  ProjectionStatus status = ProjectionStatus::kOk;

  bool ok() const { return status == ProjectionStatus::kOk; }
};

/// Non-throwing projection used on hot paths.
Projection try_project(const CameraModel& model, const RigidTransform& transform,
                       const TargetPoint& point, const ThetaSolverOptions& options = {});

/// Throws ProjectionError on out-of-FOV, behind-camera or non-convergence.
Eigen::Vector2d project(const CameraModel& model, const Pose& pose, const TargetPoint& point);

/// Normalized image coordinates (x~, y~) -> pixel.
Eigen::Vector2d apply_affine(const CameraIntrinsics& k, const Eigen::Vector2d& xy);
/// Pixel -> normalized image coordinates.
Eigen::Vector2d invert_affine(const CameraIntrinsics& k, const Eigen::Vector2d& pixel);

struct Ray {
  Eigen::Vector3d direction = Eigen::Vector3d::UnitZ();  ///< unit vector, camera frame
  double theta = 0.0;
  /// E(theta) for NSVP models, zero for SVP.
  double axial_offset = 0.0;
};

/// Throws RangeError when the pixel radius is not invertible.
Ray unproject(const CameraModel& model, const Eigen::Vector2d& pixel);

}  // namespace epcal
