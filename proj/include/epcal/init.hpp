#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

#include "epcal/dataset.hpp"
#include "epcal/model.hpp"

namespace epcal {

/// Starting point for refinement. sk, k3, k4 and e1..e4 are always zero.
struct InitialEstimate {
  CameraIntrinsics intrinsics;
  RadialDistortion radial;
  EntrancePupil ep;
  std::vector<Pose> poses;
  double theta_max = kDefaultThetaMax;
};

struct Correspondence {
  TargetPoint target;
  Eigen::Vector2d pixel = Eigen::Vector2d::Zero();
};

/// Image centre (W/2, H/2).
Eigen::Vector2d init_principal_point(double image_width, double image_height);

/// Equidistant focal seed f = (W/2) / (fov/2). Throws InvalidArgument unless
/// fov is in (0, 360) and the width is positive.
double init_focal(double fov_degrees, double image_width);

/// Normalized DLT homography mapping src -> dst (Hartley normalization on
/// both sides). Throws DegenerateConfiguration for fewer than 4 points or a
/// rank-deficient system.
Eigen::Matrix3d estimate_homography(std::span<const Eigen::Vector2d> src,
                                    std::span<const Eigen::Vector2d> dst);

/// Closest rotation in the Frobenius sense (SVD with determinant correction).
Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& M);

/// Planar pose from one view. Pixels are lifted to pinhole-normalized
/// coordinates tan(theta) (cos phi, sin phi) with the given intrinsics and
/// radial model; points at theta >= max_theta are skipped.
Pose init_pose_from_homography(std::span<const Correspondence> correspondences,
                               const CameraIntrinsics& intrinsics, const RadialDistortion& radial,
                               double theta_max = kDefaultThetaMax,
                               double max_theta = deg_to_rad(85.0));

/// Linear least squares for (k1, k2) in r_meas - theta = k1 theta^3 + k2 theta^5,
/// with theta taken from the SVP geometry of the given poses. Returns (k1, k2).
Eigen::Vector2d init_distortion(std::span<const std::vector<Correspondence>> views,
                                const CameraIntrinsics& intrinsics, std::span<const Pose> poses);

struct InitOptions {
  double fov_deg = 195.0;
  double theta_max = kDefaultThetaMax;
  double max_theta = deg_to_rad(85.0);
  /// Extra rounds of pose re-estimation with the current (k1, k2).
  int refinement_rounds = 1;
};

std::vector<std::vector<Correspondence>> correspondences(const CalibrationDataset& dataset);

/// Centre + FOV seed, homography poses, linear (k1, k2), then
/// `refinement_rounds` passes of poses and (k1, k2) again.
InitialEstimate initialize(const CalibrationDataset& dataset, const InitOptions& options = {});

}  // namespace epcal
