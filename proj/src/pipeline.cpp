#include "epcal/pipeline.hpp"

namespace epcal {

CalibrationResult refine(const CalibrationDataset& dataset, const InitialEstimate& initial,
                         ModelKind kind, const SolveOptions& options) {
  CameraModel start;
  start.intrinsics = initial.intrinsics;
  start.radial = initial.radial;
  start.ep = EntrancePupil{};
  start.kind = ModelKind::kSvp;
  start.theta_max = initial.theta_max;

  const int m = static_cast<int>(initial.poses.size());
  SolveOptions svp_options = options;
  svp_options.fixed = kind_mask(ModelKind::kSvp, m);
  CalibrationResult svp = lm_solve(ParameterVector::pack(start, initial.poses), dataset,
                                   svp_options);
  if (kind == ModelKind::kSvp) return svp;

  return continue_with_entrance_pupil(dataset, svp, options);
}

CalibrationResult continue_with_entrance_pupil(const CalibrationDataset& dataset,
                                               const CalibrationResult& svp,
                                               const SolveOptions& options) {
  ParameterVector start = svp.params;
  start.kind = ModelKind::kNsvp;
  SolveOptions nsvp_options = options;
  nsvp_options.fixed = kind_mask(ModelKind::kNsvp, start.num_poses());
  CalibrationResult nsvp = lm_solve(start, dataset, nsvp_options);
  nsvp.iterations += svp.iterations;
  nsvp.converged = nsvp.converged && svp.converged;
  nsvp.cost_trace.insert(nsvp.cost_trace.begin(), svp.cost_trace.begin(),
                         svp.cost_trace.end() - 1);
  return nsvp;
}

CalibrationResult calibrate(const CalibrationDataset& dataset, ModelKind kind,
                            const CalibrateOptions& options) {
  dataset.validate();
  const InitialEstimate initial = initialize(dataset, options.init);
  return refine(dataset, initial, kind, options.solve);
}

CalibrationResult reestimate_poses(const CameraModel& model, const CalibrationDataset& dataset,
                                   const SolveOptions& options) {
  dataset.validate();
  model.validate();
  const auto views = correspondences(dataset);
  std::vector<Pose> poses;
  poses.reserve(views.size());
  for (const auto& view : views) {
    poses.push_back(init_pose_from_homography(view, model.intrinsics, model.radial,
                                              model.theta_max));
  }
  SolveOptions pose_options = options;
  pose_options.fixed.assign(static_cast<std::size_t>(ParameterVector::pose_offset(
                                static_cast<int>(poses.size()))),
                            false);
  for (int i = 0; i < kNumCameraParams; ++i) pose_options.fixed[static_cast<std::size_t>(i)] = true;
  return lm_solve(ParameterVector::pack(model, poses), dataset, pose_options);
}

CalibrationResult evaluate_model(const CameraModel& model, std::span<const Pose> poses,
                                 const CalibrationDataset& dataset,
                                 const ResidualOptions& options) {
  CalibrationResult result;
  result.params = ParameterVector::pack(model, poses);
  result.model = model;
  result.poses.assign(poses.begin(), poses.end());
  result.residuals = residual_vector(result.params, dataset, options);
  result.final_cost = result.residuals.squaredNorm();
  const ResidualStatistics stats = compute_statistics(result.residuals);
  result.rms_px = stats.rms_px;
  result.std_px = stats.std_px;
  result.cost_trace = {result.final_cost};
  result.converged = true;
  result.reason = TerminationReason::kZeroCost;
  return result;
}

}  // namespace epcal
