#include "epcal/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

namespace epcal {

namespace {

constexpr std::uint64_t kPoseStream = 0;
constexpr std::uint64_t kNoiseStreamBase = 1;

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

bool in_image(const Eigen::Vector2d& px, int width, int height) {
  return px.x() >= 0.0 && px.x() <= width && px.y() >= 0.0 && px.y() <= height;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * kPi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

Eigen::Vector3d Rng::unit_vector() {
  const double z = uniform(-1.0, 1.0);
  const double a = uniform(0.0, 2.0 * kPi);
  const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
  return {s * std::cos(a), s * std::sin(a), z};
}

CameraModel reference_fisheye_model(int width, int height) {
  const double sx = width / 2048.0;
  const double sy = height / 2048.0;
  CameraModel m;
  m.kind = ModelKind::kNsvp;
  m.intrinsics = {591.7301 * sx, 592.0340 * sy, 0.1978, 0.5 * width + (1013.2001 - 1024.0) * sx,
                  0.5 * height + (1025.0300 - 1024.0) * sy};
  m.radial = {0.0109, -0.0013, 0.0008, -0.0004};
  m.ep = {0.0851, -0.2577, 0.3016, 0.5368};
  m.theta_max = kDefaultThetaMax;
  return m;
}

void SynthConfig::validate() const {
  model.validate();
  target.validate();
  if (num_poses < 1) throw InvalidArgument("pose count must be positive");
  if (!(dist_min > 0.0) || !(dist_min <= dist_max)) {
    throw InvalidArgument("distance range must satisfy 0 < dist_min <= dist_max");
  }
  if (!(max_tilt_deg >= 0.0 && max_tilt_deg < 90.0)) {
    throw InvalidArgument("max tilt must lie in [0, 90) degrees");
  }
  if (!(noise_px >= 0.0) || !std::isfinite(noise_px)) {
    throw InvalidArgument("noise must be non-negative");
  }
  if (width <= 0 || height <= 0) throw InvalidArgument("image size must be positive");
  if (!(min_visible_fraction >= 0.0 && min_visible_fraction <= 1.0)) {
    throw InvalidArgument("visible fraction must lie in [0, 1]");
  }
  if (max_retries < 1) throw InvalidArgument("retry budget must be positive");
}

std::vector<Pose> generate_poses(const SynthConfig& config) {
  config.validate();
  const auto grid = generate_target(config.target);
  Rng rng(derive_seed(config.seed, kPoseStream));
  const double max_tilt = deg_to_rad(config.max_tilt_deg);
  const double lateral_factor = 0.25 * std::tan(deg_to_rad(25.0));

  std::vector<Pose> poses;
  poses.reserve(static_cast<std::size_t>(config.num_poses));
  for (int j = 0; j < config.num_poses; ++j) {
    bool found = false;
    for (int attempt = 0; attempt < config.max_retries && !found; ++attempt) {
      Pose pose;
      const double z = rng.uniform(config.dist_min, config.dist_max);
      const double lateral = lateral_factor * z;
      const double x = rng.uniform(-lateral, lateral);
      const double y = rng.uniform(-lateral, lateral);
      const Eigen::Vector3d axis = rng.unit_vector();
      const double angle = rng.uniform(0.0, max_tilt);
      pose.translation = {x, y, z};
      pose.rotation = axis * angle;

      const RigidTransform T(pose);
      int visible = 0;
      for (const auto& p : grid) {
        const Projection proj = try_project(config.model, T, p);
        if (proj.ok() && in_image(proj.pixel, config.width, config.height)) ++visible;
      }
      if (visible >= config.min_visible_fraction * static_cast<double>(grid.size())) {
        poses.push_back(pose);
        found = true;
      }
    }
    if (!found) {
      std::ostringstream msg;
      msg << "no pose with " << config.min_visible_fraction * 100.0
          << "% target visibility found for view " << j << " after " << config.max_retries
          << " attempts";
      throw PoseGenerationError(msg.str());
    }
  }
  return poses;
}

SyntheticDataset render_views(const SynthConfig& config, std::span<const Pose> poses) {
  config.validate();
  const auto grid = generate_target(config.target);
  Rng rng(derive_seed(config.seed, kNoiseStreamBase + config.noise_stream));
  const double sigma = config.noise_px / std::sqrt(2.0);

  SyntheticDataset out;
  auto& ds = out.dataset;
  ds.image_width = config.width;
  ds.image_height = config.height;
  ds.target = config.target;
  ds.ground_truth = GroundTruth{config.model, {poses.begin(), poses.end()}};
  for (std::size_t j = 0; j < poses.size(); ++j) {
    const RigidTransform T(poses[j]);
    ViewObservations view;
    view.pose_id = static_cast<int>(j);
    std::vector<bool> visible(grid.size(), false);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      // Draw for every point so the noise sequence does not depend on visibility.
      const double nu = rng.normal();
      const double nv = rng.normal();
      const Projection proj = try_project(config.model, T, grid[i]);
      if (!proj.ok()) continue;
      const Eigen::Vector2d px = proj.pixel + sigma * Eigen::Vector2d(nu, nv);
      if (!in_image(px, config.width, config.height)) continue;
      view.points.push_back({static_cast<int>(i), px});
      visible[i] = true;
    }
    ds.views.push_back(std::move(view));
    out.visibility.push_back(std::move(visible));
  }
  return out;
}

SyntheticDataset render_dataset(const SynthConfig& config) {
  const auto poses = generate_poses(config);
  return render_views(config, poses);
}

StabilityReport monte_carlo_stability(const SynthConfig& config, int trials,
                                      std::span<const ModelKind> kinds,
                                      const StabilityOptions& options) {
  if (trials < 2) throw InvalidArgument("stability study needs at least 2 trials");
  if (kinds.empty()) throw InvalidArgument("stability study needs at least one model kind");
  const auto poses = generate_poses(config);

  const bool want_svp = std::find(kinds.begin(), kinds.end(), ModelKind::kSvp) != kinds.end();
  const bool want_nsvp = std::find(kinds.begin(), kinds.end(), ModelKind::kNsvp) != kinds.end();

  struct TrialOutcome {
    std::optional<CameraModel> svp;
    std::optional<CameraModel> nsvp;
  };
  std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(trials));

  auto run_trial = [&](int t) {
    SynthConfig trial_config = config;
    trial_config.noise_stream = static_cast<std::uint64_t>(t);
    TrialOutcome& out = outcomes[static_cast<std::size_t>(t)];
    try {
      const auto data = render_views(trial_config, poses);
      const InitialEstimate init = initialize(data.dataset, options.calibrate.init);
      const CalibrationResult svp =
          refine(data.dataset, init, ModelKind::kSvp, options.calibrate.solve);
      if (want_svp && svp.converged) out.svp = svp.model;
      if (want_nsvp && svp.converged) {
        const CalibrationResult nsvp =
            continue_with_entrance_pupil(data.dataset, svp, options.calibrate.solve);
        if (nsvp.converged) out.nsvp = nsvp.model;
      }
    } catch (const Error&) {
      // counted as excluded below
    }
  };

  unsigned workers = options.workers ? options.workers : std::thread::hardware_concurrency();
  workers = std::clamp(workers, 1u, static_cast<unsigned>(trials));
  if (workers == 1) {
    for (int t = 0; t < trials; ++t) run_trial(t);
  } else {
    std::mutex mutex;
    int next = 0;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          int t;
          {
            std::lock_guard lock(mutex);
            if (next >= trials) return;
            t = next++;
          }
          run_trial(t);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  StabilityReport report;
  report.trials = trials;
  report.noise_px = config.noise_px;
  for (ModelKind kind : kinds) {
    KindStability ks;
    ks.kind = kind;
    std::array<std::vector<double>, kNumCameraParams> samples;
    for (const auto& o : outcomes) {
      const auto& m = kind == ModelKind::kSvp ? o.svp : o.nsvp;
      if (!m) {
        ++ks.trials_excluded;
        continue;
      }
      ++ks.trials_used;
      const std::array<double, kNumCameraParams> v = {
          m->intrinsics.fx, m->intrinsics.fy, m->intrinsics.sk, m->intrinsics.u0,
          m->intrinsics.v0, m->radial.k1,     m->radial.k2,     m->radial.k3,
          m->radial.k4,     m->ep.e1,         m->ep.e2,         m->ep.e3,
          m->ep.e4};
      for (int i = 0; i < kNumCameraParams; ++i) samples[static_cast<std::size_t>(i)].push_back(v[static_cast<std::size_t>(i)]);
    }
    for (int i = 0; i < kNumCameraParams; ++i) {
      const auto& s = samples[static_cast<std::size_t>(i)];
      double mean = 0.0;
      for (double x : s) mean += x;
      ks.mean[static_cast<std::size_t>(i)] =
          s.empty() ? std::numeric_limits<double>::quiet_NaN() : mean / static_cast<double>(s.size());
      ks.stddev[static_cast<std::size_t>(i)] = sample_std(s);
    }
    const auto& sd = ks.stddev;
    ks.groups.focal = 0.5 * (sd[kFx] + sd[kFy]);
    ks.groups.skew = sd[kSk];
    ks.groups.principal = 0.5 * (sd[kU0] + sd[kV0]);
    ks.groups.radial = 0.25 * (sd[kK1] + sd[kK2] + sd[kK3] + sd[kK4]);
    ks.groups.ep = kind == ModelKind::kSvp ? std::numeric_limits<double>::quiet_NaN()
                                           : 0.25 * (sd[kE1] + sd[kE2] + sd[kE3] + sd[kE4]);
    report.kinds.push_back(ks);
  }
  return report;
}

}  // namespace epcal
