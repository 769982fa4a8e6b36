#pragma once

#include <Eigen/Core>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "epcal/dataset.hpp"
#include "epcal/model.hpp"

namespace epcal {

/// Fixed layout of the camera block at the head of a ParameterVector.
enum ParameterIndex : int {
  kFx = 0, kFy, kSk, kU0, kV0,
  kK1, kK2, kK3, kK4,
  kE1, kE2, kE3, kE4,
};

inline constexpr int kNumCameraParams = 13;
inline constexpr int kNumPoseParams = 6;

/// Flat parameter vector:
///   [fx fy sk u0 v0 k1..k4 e1..e4 | rx ry rz tx ty tz] x num_poses
/// `kind` and `theta_max` are carried along but never optimized.
struct ParameterVector {
  Eigen::VectorXd values;
  ModelKind kind = ModelKind::kNsvp;
  double theta_max = kDefaultThetaMax;

  ParameterVector() = default;
  explicit ParameterVector(int num_poses)
      : values(Eigen::VectorXd::Zero(kNumCameraParams + kNumPoseParams * num_poses)) {}

  static ParameterVector pack(const CameraModel& model, std::span<const Pose> poses);

  CameraModel camera_model() const;
  Pose pose(int j) const;
  std::vector<Pose> poses() const;

  int num_poses() const {
    return static_cast<int>((values.size() - kNumCameraParams) / kNumPoseParams);
  }
  Eigen::Index size() const { return values.size(); }
  static Eigen::Index pose_offset(int j) { return kNumCameraParams + kNumPoseParams * j; }
  /// "fx", ..., "e4", "pose3.rx", ..., "pose3.tz"
  static std::string parameter_name(Eigen::Index index);
};

/// Mask (true = held fixed) for a model kind: SVP fixes e1..e4.
std::vector<bool> kind_mask(ModelKind kind, int num_poses);

struct ResidualOptions {
  /// Residual assigned to both coordinates of a point that cannot be projected.
  double failure_residual = 1e4;
  ThetaSolverOptions theta;
};

/// Observed minus predicted pixels, ordered view-major, point-minor, (du, dv).
/// Throws InvalidArgument on a pose-count mismatch.
Eigen::VectorXd residual_vector(const ParameterVector& params, const CalibrationDataset& dataset,
                                const ResidualOptions& options = {});

/// Central differences of residual_vector, h = max(1e-6, 1e-7 |p|).
/// Pose columns are only evaluated on their own view's rows; rows of points
/// that fail to project at the base point or a probe are zero.
Eigen::MatrixXd numeric_jacobian(const ParameterVector& params, const CalibrationDataset& dataset,
                                 const ResidualOptions& options = {});

struct ResidualStatistics {
  double rms_px = 0.0;
  double std_px = 0.0;
};

/// RMS and population standard deviation of per-point residual norms.
/// Throws InvalidArgument on empty or odd-length input.
ResidualStatistics compute_statistics(const Eigen::VectorXd& residuals);

struct SolveOptions {
  int max_iterations = 100;
  double cost_tolerance = 1e-12;
  double param_tolerance = 1e-10;
  double initial_lambda = 1e-3;
  double lambda_up = 10.0;
  double lambda_down = 0.1;
  double max_lambda = 1e12;
  /// Empty means every parameter is free.
  std::vector<bool> fixed;
  ResidualOptions residual;

  void validate(Eigen::Index num_params) const;
};

enum class TerminationReason {
  kZeroCost,
  kCostTolerance,
  kParamTolerance,
  kDampingLimit,
  kMaxIterations,
};

std::string_view to_string(TerminationReason reason);

struct CalibrationResult {
  CameraModel model;
  std::vector<Pose> poses;
  ParameterVector params;
  Eigen::VectorXd residuals;
  double rms_px = 0.0;
  double std_px = 0.0;
  double final_cost = 0.0;
  /// Cost of the initial point followed by every accepted step.
  std::vector<double> cost_trace;
  int iterations = 0;
  bool converged = false;
  TerminationReason reason = TerminationReason::kMaxIterations;
};

/// Levenberg-Marquardt on the summed squared reprojection error.
///
/// Each iteration solves (J^T J + lambda diag(J^T J)) delta = -J^T r over the
/// free parameters; the step is accepted only if the cost strictly decreases
/// (lambda /= 10), otherwise lambda *= 10 and the step is retried. Stops on
/// relative cost decrease below cost_tolerance, step below param_tolerance,
/// max_iterations, or lambda above max_lambda (no further decrease possible).
///
/// Throws ConvergenceError if the initial cost is not finite or if the
/// normal equations stay singular through the whole damping range.
CalibrationResult lm_solve(const ParameterVector& initial, const CalibrationDataset& dataset,
                           const SolveOptions& options = {});

}  // namespace epcal
