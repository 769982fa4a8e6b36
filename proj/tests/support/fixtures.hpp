#pragma once

#include <span>
#include <vector>

#include "epcal/dataset.hpp"
#include "epcal/model.hpp"
#include "support/generators.hpp"

namespace epcal::testing {

/// Projects every target point for every pose. Points that do not project
/// are skipped. With a generator, each coordinate is offset uniformly within
/// +-noise.
inline CalibrationDataset render(const CameraModel& model, std::span<const Pose> poses,
                                 const TargetSpec& target, Gen* gen = nullptr,
                                 double noise = 0.0) {
  CalibrationDataset ds;
  ds.image_width = 2048;
  ds.image_height = 2048;
  ds.target = target;
  const auto grid = generate_target(target);
  for (std::size_t j = 0; j < poses.size(); ++j) {
    ViewObservations view{static_cast<int>(j), {}};
    const RigidTransform T(poses[j]);
    for (int i = 0; i < target.size(); ++i) {
      const Projection p = try_project(model, T, grid[static_cast<std::size_t>(i)]);
      if (!p.ok()) continue;
      Eigen::Vector2d px = p.pixel;
      if (gen) px += Eigen::Vector2d(gen->uniform(-1, 1), gen->uniform(-1, 1)) * noise;
      view.points.push_back({i, px});
    }
    ds.views.push_back(std::move(view));
  }
  return ds;
}

inline std::vector<Pose> facing_poses(Gen& gen, int count, double max_tilt_deg = 30.0) {
  std::vector<Pose> poses;
  for (int j = 0; j < count; ++j) {
    poses.push_back(gen.facing_pose(100, 150, deg_to_rad(max_tilt_deg)));
  }
  return poses;
}

}  // namespace epcal::testing
