#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <optional>
#include <vector>

#include "epcal/model.hpp"

namespace epcal {

/// Planar grid target: rows x cols features, `spacing` mm apart.
struct TargetSpec {
  int rows = 7;
  int cols = 11;
  double spacing = 10.0;

  int size() const { return rows * cols; }
  /// Throws InvalidArgument unless rows, cols >= 2 and spacing > 0.
  void validate() const;
  bool operator==(const TargetSpec&) const = default;
};

/// Row-major grid centred on the origin.
std::vector<TargetPoint> generate_target(const TargetSpec& spec);

struct Observation {
  int target_index = 0;
  Eigen::Vector2d pixel = Eigen::Vector2d::Zero();

  bool operator==(const Observation&) const = default;
};

/// All features detected in one view of the target.
struct ViewObservations {
  int pose_id = 0;
  std::vector<Observation> points;

  bool operator==(const ViewObservations&) const = default;
};

struct GroundTruth {
  CameraModel model;
  std::vector<Pose> poses;

  bool operator==(const GroundTruth&) const = default;
};

struct CalibrationDataset {
  int image_width = 0;
  int image_height = 0;
  TargetSpec target;
  std::vector<ViewObservations> views;
  std::optional<GroundTruth> ground_truth;

  std::size_t num_views() const { return views.size(); }
  std::size_t num_observations() const;

  /// Throws ValidationError naming the offending view/index.
  void validate() const;
  bool operator==(const CalibrationDataset&) const = default;
};

}  // namespace epcal
