#include "epcal/dataset.hpp"

#include <cmath>
#include <sstream>
#include <unordered_set>

namespace epcal {

void TargetSpec::validate() const {
  if (rows < 2 || cols < 2) throw InvalidArgument("target needs at least 2 rows and 2 columns");
  if (!(spacing > 0.0) || !std::isfinite(spacing)) {
    throw InvalidArgument("target spacing must be positive");
  }
}

std::vector<TargetPoint> generate_target(const TargetSpec& spec) {
  spec.validate();
  std::vector<TargetPoint> points;
  points.reserve(static_cast<std::size_t>(spec.size()));
  const double x0 = -0.5 * (spec.cols - 1) * spec.spacing;
  const double y0 = -0.5 * (spec.rows - 1) * spec.spacing;
  for (int r = 0; r < spec.rows; ++r) {
    for (int c = 0; c < spec.cols; ++c) {
      points.push_back({x0 + c * spec.spacing, y0 + r * spec.spacing});
    }
  }
  return points;
}

std::size_t CalibrationDataset::num_observations() const {
  std::size_t n = 0;
  for (const auto& v : views) n += v.points.size();
  return n;
}

void CalibrationDataset::validate() const {
  if (image_width <= 0 || image_height <= 0) {
    throw ValidationError("image_size must be positive");
  }
  try {
    target.validate();
  } catch (const InvalidArgument& e) {
    throw ValidationError(std::string("target: ") + e.what());
  }
  const int n = target.size();
  std::unordered_set<int> pose_ids;
  for (std::size_t v = 0; v < views.size(); ++v) {
    const auto& view = views[v];
    if (!pose_ids.insert(view.pose_id).second) {
      std::ostringstream msg;
      msg << "observations[" << v << "]: duplicate pose_id " << view.pose_id;
      throw ValidationError(msg.str());
    }
    std::unordered_set<int> seen;
    for (std::size_t i = 0; i < view.points.size(); ++i) {
      const auto& obs = view.points[i];
      if (obs.target_index < 0 || obs.target_index >= n) {
        std::ostringstream msg;
        msg << "pose " << view.pose_id << ": target_index " << obs.target_index
            << " out of range [0, " << n << ")";
        throw ValidationError(msg.str());
      }
      if (!seen.insert(obs.target_index).second) {
        std::ostringstream msg;
        msg << "pose " << view.pose_id << ": duplicate target_index " << obs.target_index;
        throw ValidationError(msg.str());
      }
      if (!obs.pixel.allFinite()) {
        std::ostringstream msg;
        msg << "pose " << view.pose_id << ": non-finite pixel for target_index "
            << obs.target_index;
        throw ValidationError(msg.str());
      }
    }
  }
  if (ground_truth) {
    try {
      ground_truth->model.validate();
    } catch (const InvalidArgument& e) {
      throw ValidationError(std::string("ground_truth: ") + e.what());
    }
    if (ground_truth->poses.size() != views.size()) {
      throw ValidationError("ground_truth: pose count does not match observations");
    }
  }
}

}  // namespace epcal
