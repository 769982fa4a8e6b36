#pragma once

#include "epcal/dataset.hpp"
#include "epcal/init.hpp"
#include "epcal/optim.hpp"

namespace epcal {

struct CalibrateOptions {
  InitOptions init;
  /// `fixed` is ignored; the mask is derived from the model kind.
  SolveOptions solve;
};

/// Initialization followed by bundle adjustment.
///
/// The SVP parameters are refined first with e1..e4 held at zero. For an
/// NSVP calibration the entrance-pupil coefficients are then freed and the
/// refinement continues from the SVP optimum, so the NSVP cost can never
/// exceed the SVP cost on the same data.
CalibrationResult calibrate(const CalibrationDataset& dataset, ModelKind kind,
                            const CalibrateOptions& options = {});

/// Same as calibrate(), starting from a given initial estimate.
CalibrationResult refine(const CalibrationDataset& dataset, const InitialEstimate& initial,
                         ModelKind kind, const SolveOptions& options = {});

/// Continues an SVP refinement with e1..e4 free (NSVP model).
CalibrationResult continue_with_entrance_pupil(const CalibrationDataset& dataset,
                                               const CalibrationResult& svp,
                                               const SolveOptions& options = {});

/// Refits the poses of `dataset` with every camera parameter of `model` frozen.
CalibrationResult reestimate_poses(const CameraModel& model, const CalibrationDataset& dataset,
                                   const SolveOptions& options = {});

/// Residuals of a fixed model and pose list on a dataset (no optimization).
CalibrationResult evaluate_model(const CameraModel& model, std::span<const Pose> poses,
                                 const CalibrationDataset& dataset,
                                 const ResidualOptions& options = {});

}  // namespace epcal
