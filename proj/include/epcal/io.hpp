#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "epcal/dataset.hpp"
#include "epcal/model.hpp"
#include "epcal/optim.hpp"
#include "epcal/synth.hpp"

namespace epcal {

inline constexpr int kSchemaVersion = 1;

struct ModelStats {
  double rms_px = 0.0;
  double std_px = 0.0;
  int iterations = 0;
  bool converged = false;

  bool operator==(const ModelStats&) const = default;
};

/// On-disk camera model: parameters, per-view poses and fit statistics.
/// theta_max is kept in degrees here and converted by camera_model().
struct ModelFile {
  int schema_version = kSchemaVersion;
  ModelKind kind = ModelKind::kNsvp;
  CameraIntrinsics intrinsics;
  RadialDistortion radial;
  EntrancePupil ep;
  double theta_max_deg = 97.5;
  std::vector<Pose> poses;
  ModelStats stats;

  CameraModel camera_model() const;
  static ModelFile from(const CameraModel& model, std::span<const Pose> poses,
                        const ModelStats& stats = {});
  static ModelFile from(const CalibrationResult& result);
  bool operator==(const ModelFile&) const = default;
};

/// Degrees whose conversion back to radians reproduces `rad` exactly.
double exact_rad_to_deg(double rad);

/// Parse from text. `source` names the origin in error messages.
/// Throws ParseError, SchemaError or ValidationError.
CalibrationDataset parse_dataset(std::string_view text, std::string_view source = "<memory>");
ModelFile parse_model(std::string_view text, std::string_view source = "<memory>");

std::string format_dataset(const CalibrationDataset& dataset);
std::string format_model(const ModelFile& model);

/// File variants add FileError for filesystem failures. Writes go to a
/// temporary file renamed into place on success.
CalibrationDataset load_dataset(const std::filesystem::path& path);
void save_dataset(const CalibrationDataset& dataset, const std::filesystem::path& path);
ModelFile load_model(const std::filesystem::path& path);
void save_model(const ModelFile& model, const std::filesystem::path& path);

/// Writes `contents` to `path` atomically (temp file + rename).
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// One column per run, rows fx fy sk u0 v0 e1..e4 k1..k4 error std.
/// SVP columns leave e1..e4 empty.
std::string format_report(std::span<const CalibrationResult> results,
                          std::span<const std::string> labels);
void write_report(std::span<const CalibrationResult> results, std::span<const std::string> labels,
                  const std::filesystem::path& path);

/// Grouped standard deviations, one column per model kind.
std::string format_stability_report(const StabilityReport& report);
void write_stability_report(const StabilityReport& report, const std::filesystem::path& path);

}  // namespace epcal
