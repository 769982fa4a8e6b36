#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "epcal/dataset.hpp"
#include "epcal/model.hpp"
#include "epcal/pipeline.hpp"

namespace epcal {

/// SplitMix64 finalizer; maps (base, stream) to an independent 64-bit seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// mt19937_64 with portable uniform and Box-Muller normal draws, so streams
/// are reproducible across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  /// Uniform direction on the unit sphere.
  Eigen::Vector3d unit_vector();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Fisheye camera with a 195 degree field of view on a 2048 x 2048 sensor
/// and nonzero entrance-pupil shift, rescaled to the given image size.
CameraModel reference_fisheye_model(int width = 2048, int height = 2048);

struct SynthConfig {
  CameraModel model = reference_fisheye_model();
  TargetSpec target;
  int num_poses = 25;
  double dist_min = 100.0;
  double dist_max = 150.0;
  double max_tilt_deg = 30.0;
  /// RMS of the per-point pixel displacement; each coordinate receives
  /// N(0, (noise_px / sqrt 2)^2).
  double noise_px = 0.1;
  std::uint64_t seed = 42;
  /// Selects an independent noise stream for the same poses.
  std::uint64_t noise_stream = 0;
  int width = 2048;
  int height = 2048;
  double min_visible_fraction = 0.9;
  int max_retries = 100;

  void validate() const;
};

/// Thrown when no acceptable pose is found within the retry budget.
class PoseGenerationError : public Error {
 public:
  using Error::Error;
};

/// Target distance uniform in [dist_min, dist_max], lateral offset uniform
/// within +-25% of Z tan(25 deg), rotation = uniform axis x uniform angle in
/// [0, max_tilt]. Poses seeing fewer than min_visible_fraction of the target
/// are redrawn.
std::vector<Pose> generate_poses(const SynthConfig& config);

struct SyntheticDataset {
  /// ground_truth is always set.
  CalibrationDataset dataset;
  /// visibility[j][i]: target point i was emitted for pose j.
  std::vector<std::vector<bool>> visibility;
};

/// Projects the target through config.model for the given poses, adds noise
/// and drops points outside the image or field of view.
SyntheticDataset render_views(const SynthConfig& config, std::span<const Pose> poses);

/// generate_poses + render_views.
SyntheticDataset render_dataset(const SynthConfig& config);

/// Per-parameter standard deviations averaged within parameter groups.
struct StabilityGroups {
  double focal = 0.0;      ///< mean of std(fx), std(fy)
  double skew = 0.0;       ///< std(sk)
  double principal = 0.0;  ///< mean of std(u0), std(v0)
  double ep = 0.0;         ///< mean of std(e1..e4); NaN for SVP
  double radial = 0.0;     ///< mean of std(k1..k4)
};

struct KindStability {
  ModelKind kind = ModelKind::kNsvp;
  std::array<double, 13> mean{};
  std::array<double, 13> stddev{};
  StabilityGroups groups;
  int trials_used = 0;
  int trials_excluded = 0;
};

struct StabilityReport {
  int trials = 0;
  double noise_px = 0.0;
  std::vector<KindStability> kinds;
};

struct StabilityOptions {
  CalibrateOptions calibrate;
  /// 0 = std::thread::hardware_concurrency().
  unsigned workers = 0;
};

/// Repeats render -> initialize -> refine with a fresh noise stream per trial
/// (poses stay fixed by config.seed) and reports parameter spread per kind.
/// Trials that throw or fail to converge are excluded and counted.
StabilityReport monte_carlo_stability(const SynthConfig& config, int trials,
                                      std::span<const ModelKind> kinds,
                                      const StabilityOptions& options = {});

}  // namespace epcal
