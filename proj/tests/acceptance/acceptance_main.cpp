// Acceptance runner: one PASS/FAIL line per criterion.
//
//   epcal_acceptance            run every criterion
//   epcal_acceptance 1 4 8      run a subset
//
// Exit status is 0 only if every selected criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "epcal/cli.hpp"
#include "epcal/init.hpp"
#include "epcal/io.hpp"
#include "epcal/model.hpp"
#include "epcal/optim.hpp"
#include "epcal/pipeline.hpp"
#include "epcal/rotation.hpp"
#include "epcal/synth.hpp"
#include "support/generators.hpp"

namespace fs = std::filesystem;
using namespace epcal;
using epcal::testing::Gen;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(3);
  s << v;
  return s.str();
}

class ScratchDir {
 public:
  ScratchDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("epcal_acceptance_" + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

int run_cli(std::vector<std::string> args, std::string* out_text = nullptr) {
  args.insert(args.begin(), "epcal");
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(args, out, err);
  if (out_text) *out_text = out.str();
  return code;
}

std::array<double, kNumCameraParams> camera_params(const CameraModel& m) {
  return {m.intrinsics.fx, m.intrinsics.fy, m.intrinsics.sk, m.intrinsics.u0, m.intrinsics.v0,
          m.radial.k1,     m.radial.k2,     m.radial.k3,     m.radial.k4,     m.ep.e1,
          m.ep.e2,         m.ep.e3,         m.ep.e4};
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---------------------------------------------------------------------------
// 1. Noise-free round trip through the command line.

Outcome noise_free_round_trip() {
  ScratchDir dir;
  const auto start = Clock::now();
  const int synth_code =
      run_cli({"synth", "--output", (dir / "data.json").string(), "--gt-output",
               (dir / "truth.json").string(), "--poses", "25", "--rows", "7", "--cols", "11",
               "--spacing", "10", "--dist-min", "100", "--dist-max", "150", "--noise", "0",
               "--seed", "42", "--fov", "195", "--width", "2048", "--height", "2048"});
  const int cal_code = run_cli({"calibrate", "--input", (dir / "data.json").string(), "--output",
                                (dir / "model.json").string(), "--kind", "nsvp"});
  const double elapsed = seconds_since(start);
  if (synth_code != 0 || cal_code != 0) {
    return {false, "synth exit " + std::to_string(synth_code) + ", calibrate exit " +
                       std::to_string(cal_code)};
  }

  const ModelFile truth = load_model(dir / "truth.json");
  const ModelFile fit = load_model(dir / "model.json");
  const auto t = camera_params(truth.camera_model());
  const auto f = camera_params(fit.camera_model());
  double worst_rel = 0.0;
  std::string worst_name;
  for (int i = 0; i < kNumCameraParams; ++i) {
    const double rel = std::abs(f[i] - t[i]) / std::abs(t[i]);
    if (rel > worst_rel) {
      worst_rel = rel;
      worst_name = ParameterVector::parameter_name(i);
    }
  }
  double worst_pose = 0.0;
  if (fit.poses.size() != truth.poses.size()) return {false, "pose count mismatch"};
  for (std::size_t j = 0; j < truth.poses.size(); ++j) {
    for (int c = 0; c < 3; ++c) {
      for (const auto& [a, b] : {std::pair{fit.poses[j].rotation[c], truth.poses[j].rotation[c]},
                                 std::pair{fit.poses[j].translation[c],
                                           truth.poses[j].translation[c]}}) {
        worst_pose = std::max(worst_pose, std::abs(a - b) / std::max(1.0, std::abs(b)));
      }
    }
  }
  const bool pass = worst_rel <= 1e-6 && worst_pose <= 1e-6 && fit.stats.rms_px < 1e-8 &&
                    fit.stats.converged && elapsed < 30.0;
  return {pass, "max rel err " + fmt(worst_rel) + " (" + worst_name + "), pose err " +
                    fmt(worst_pose) + ", rms " + fmt(fit.stats.rms_px) + " px, " +
                    fmt(elapsed) + " s"};
}

// ---------------------------------------------------------------------------
// Shared seeded runs for criteria 2 and 3.

struct SeedRun {
  CalibrationResult svp;
  CalibrationResult nsvp;
  CameraModel truth;
};

std::vector<SeedRun> seeded_runs(bool entrance_pupil, int seeds) {
  std::vector<SeedRun> runs;
  for (int s = 0; s < seeds; ++s) {
    SynthConfig config;
    config.seed = 1000 + static_cast<std::uint64_t>(s);
    config.noise_px = 0.1;
    if (!entrance_pupil) {
      config.model.ep = {};
      config.model.kind = ModelKind::kSvp;
    }
    const SyntheticDataset synth = render_dataset(config);
    SeedRun run;
    run.truth = config.model;
    run.svp = calibrate(synth.dataset, ModelKind::kSvp);
    run.nsvp = continue_with_entrance_pupil(synth.dataset, run.svp);
    runs.push_back(std::move(run));
  }
  return runs;
}

const std::vector<SeedRun>& nsvp_data_runs() {
  static const std::vector<SeedRun> runs = seeded_runs(true, 20);
  return runs;
}

// ---------------------------------------------------------------------------
// 2. Noisy recovery.

Outcome noisy_recovery() {
  const auto& runs = nsvp_data_runs();
  std::vector<double> rms, fx, fy, pp;
  bool all_in_band = true;
  bool all_converged = true;
  for (const auto& r : runs) {
    const auto& k = r.nsvp.model.intrinsics;
    const auto& t = r.truth.intrinsics;
    rms.push_back(r.nsvp.rms_px);
    all_in_band = all_in_band && r.nsvp.rms_px >= 0.07 && r.nsvp.rms_px <= 0.13;
    all_converged = all_converged && r.nsvp.converged;
    fx.push_back(std::abs(k.fx - t.fx) / t.fx);
    fy.push_back(std::abs(k.fy - t.fy) / t.fy);
    pp.push_back(std::max(std::abs(k.u0 - t.u0), std::abs(k.v0 - t.v0)));
  }
  const auto [lo, hi] = std::minmax_element(rms.begin(), rms.end());
  const bool pass = all_in_band && all_converged && median(fx) <= 0.005 &&
                    median(fy) <= 0.005 && median(pp) <= 0.5;
  return {pass, "rms range [" + fmt(*lo) + ", " + fmt(*hi) + "] px over " +
                    std::to_string(runs.size()) + " seeds, median |dfx|/fx " + fmt(median(fx)) +
                    ", |dfy|/fy " + fmt(median(fy)) + ", principal point " + fmt(median(pp)) +
                    " px"};
}

// ---------------------------------------------------------------------------
// 3. Model nesting.

Outcome model_nesting() {
  int nsvp_better = 0;
  for (const auto& r : nsvp_data_runs()) {
    if (r.nsvp.rms_px < r.svp.rms_px) ++nsvp_better;
  }
  const auto svp_runs = seeded_runs(false, 20);
  double worst_excess = -1e300;
  for (const auto& r : svp_runs) {
    worst_excess = std::max(worst_excess, r.nsvp.rms_px - r.svp.rms_px);
  }
  const bool pass = nsvp_better >= 19 && worst_excess <= 1e-9;
  return {pass, "NSVP data: NSVP < SVP in " + std::to_string(nsvp_better) +
                    "/20; SVP data: max (NSVP - SVP) rms " + fmt(worst_excess) + " px"};
}

// ---------------------------------------------------------------------------
// 4. Jacobian against a five-point stencil.

Eigen::MatrixXd five_point_jacobian(const ParameterVector& params,
                                    const CalibrationDataset& dataset) {
  const Eigen::Index n = params.size();
  const Eigen::Index rows = residual_vector(params, dataset).size();
  Eigen::MatrixXd J(rows, n);
  for (Eigen::Index c = 0; c < n; ++c) {
    const double h = std::max(1e-6, 1e-7 * std::abs(params.values[c]));
    auto at = [&](double k) {
      ParameterVector p = params;
      p.values[c] += k * h;
      return residual_vector(p, dataset);
    };
    J.col(c) = (-at(2.0) + 8.0 * at(1.0) - 8.0 * at(-1.0) + at(-2.0)) / (12.0 * h);
  }
  return J;
}

Outcome jacobian_correctness() {
  double worst = 0.0;
  bool sparse = true;
  for (int config = 0; config < 10; ++config) {
    Gen gen(7000 + config);
    CameraModel model = reference_fisheye_model();
    model.intrinsics.fx *= gen.uniform(0.95, 1.05);
    model.intrinsics.fy *= gen.uniform(0.95, 1.05);
    model.intrinsics.sk = gen.uniform(-0.5, 0.5);
    model.intrinsics.u0 += gen.uniform(-10, 10);
    model.intrinsics.v0 += gen.uniform(-10, 10);
    model.ep = gen.entrance_pupil(0.5);
    model.ep.e1 += 0.0851;

    CalibrationDataset ds;
    ds.image_width = 2048;
    ds.image_height = 2048;
    ds.target = {4, 5, 10.0};
    const auto target = generate_target(ds.target);
    std::vector<Pose> poses;
    for (int j = 0; j < 3; ++j) {
      poses.push_back(gen.facing_pose(100, 150, deg_to_rad(30)));
      ViewObservations view{j, {}};
      for (int i = 0; i < ds.target.size(); ++i) {
        const Eigen::Vector2d px = project(model, poses.back(), target[i]);
        view.points.push_back({i, px + Eigen::Vector2d(gen.uniform(-1, 1), gen.uniform(-1, 1))});
      }
      ds.views.push_back(view);
    }
    const ParameterVector params = ParameterVector::pack(model, poses);
    const Eigen::MatrixXd J = numeric_jacobian(params, ds);
    const Eigen::MatrixXd oracle = five_point_jacobian(params, ds);
    worst = std::max(worst, (J - oracle).norm() / oracle.norm());

    const Eigen::MatrixXd JtJ = J.transpose() * J;
    const Eigen::Index per_view = 2 * ds.target.size();
    for (int a = 0; a < 3; ++a) {
      const Eigen::Index ca = ParameterVector::pose_offset(a);
      for (int b = 0; b < 3; ++b) {
        if (a == b) continue;
        const Eigen::Index cb = ParameterVector::pose_offset(b);
        if ((JtJ.block(ca, cb, kNumPoseParams, kNumPoseParams).array() != 0.0).any()) sparse = false;
        if ((J.block(b * per_view, ca, per_view, kNumPoseParams).array() != 0.0).any()) {
          sparse = false;
        }
      }
    }
  }
  return {worst <= 1e-5 && sparse, "max relative Frobenius difference " + fmt(worst) +
                                       ", off-diagonal pose blocks " +
                                       (sparse ? "exactly zero" : "NONZERO")};
}

// ---------------------------------------------------------------------------
// 5. Projection invariants.

Outcome projection_invariants() {
  constexpr int kCases = 1000;
  const auto start = Clock::now();
  Gen gen(31337);
  std::vector<std::string> failures;

  // SVP and NSVP agree when the entrance pupil is zero.
  double reduction = 0.0;
  for (int n = 0; n < kCases;) {
    CameraModel svp = gen.model(ModelKind::kSvp);
    CameraModel nsvp = svp;
    nsvp.kind = ModelKind::kNsvp;
    const RigidTransform T(gen.facing_pose(100, 150, deg_to_rad(30)));
    const TargetPoint p = gen.target_point(60);
    const Projection a = try_project(svp, T, p);
    const Projection b = try_project(nsvp, T, p);
    if (a.ok() != b.ok()) failures.push_back("reduction status");
    if (!a.ok()) continue;
    reduction = std::max(reduction, (a.pixel - b.pixel).cwiseAbs().maxCoeff());
    ++n;
  }
  if (reduction > 1e-15) failures.push_back("reduction " + fmt(reduction));

  // On-axis points land on the principal point.
  double center = 0.0;
  for (int n = 0; n < kCases; ++n) {
    const CameraModel m = gen.model(n % 2 ? ModelKind::kNsvp : ModelKind::kSvp);
    Pose pose;
    pose.rotation = gen.axis_angle(0.0, deg_to_rad(40));
    const TargetPoint p = gen.target_point(60);
    const Eigen::Matrix3d R = pose.rotation_matrix();
    pose.translation = Eigen::Vector3d(0, 0, gen.uniform(50, 200)) - R.col(0) * p.x - R.col(1) * p.y;
    const Eigen::Vector2d px = project(m, pose, p);
    center = std::max(center, std::max(std::abs(px.x() - m.intrinsics.u0),
                                       std::abs(px.y() - m.intrinsics.v0)));
  }
  if (center > 1e-9) failures.push_back("center " + fmt(center));

  // Radial round trip on monotone coefficient sets.
  double radial = 0.0;
  for (int n = 0; n < kCases; ++n) {
    const RadialDistortion k = gen.monotone_radial(kDefaultThetaMax);
    const double theta = gen.uniform(0.0, kDefaultThetaMax);
    radial = std::max(radial,
                      std::abs(invert_radial(radial_distance(theta, k), k, kDefaultThetaMax) - theta));
  }
  if (radial > 1e-10) failures.push_back("radial " + fmt(radial));

  // Rotation round trip.
  double rotation = 0.0;
  for (int n = 0; n < kCases; ++n) {
    const Eigen::Vector3d v = gen.axis_angle(1e-6, kPi - 1e-3);
    rotation = std::max(rotation, (matrix_to_rodrigues(rodrigues_to_matrix(v)) - v).norm());
  }
  if (rotation > 1e-9) failures.push_back("rotation " + fmt(rotation));

  // Fixed-point self-consistency.
  const ThetaSolverOptions opts;
  double fixed_point = 0.0;
  for (int n = 0; n < kCases; ++n) {
    const EntrancePupil ep = gen.entrance_pupil();
    const Pose pose = gen.facing_pose(100, 150, deg_to_rad(30));
    const TargetPoint p = gen.target_point(60);
    const double theta = resolve_theta_nsvp(pose, p, ep, opts);
    const double again = incidence_angle(transform_world_to_camera(pose, p, ep_shift(theta, ep)));
    fixed_point = std::max(fixed_point, std::abs(theta - again));
  }
  if (fixed_point >= 2 * opts.tol) failures.push_back("fixed point " + fmt(fixed_point));

  const double elapsed = seconds_since(start);
  if (elapsed >= 10.0) failures.push_back("runtime " + fmt(elapsed) + " s");
  std::string detail = "5 x " + std::to_string(kCases) + " cases: reduction " + fmt(reduction) +
                       ", center " + fmt(center) + " px, radial " + fmt(radial) + ", rotation " +
                       fmt(rotation) + ", fixed point " + fmt(fixed_point) + ", " + fmt(elapsed) +
                       " s";
  for (const auto& f : failures) detail += "; FAILED " + f;
  return {failures.empty(), detail};
}

// ---------------------------------------------------------------------------
// 6. Stability study output.

std::map<std::string, std::vector<std::string>> read_csv_rows(const fs::path& path,
                                                              std::vector<std::string>* order) {
  std::map<std::string, std::vector<std::string>> rows;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (cells.empty()) continue;
    order->push_back(cells[0]);
    rows[cells[0]] = std::vector<std::string>(cells.begin() + 1, cells.end());
  }
  return rows;
}

Outcome stability_study() {
  ScratchDir dir;
  const std::vector<std::string> expected_rows = {"group", "fx_fy", "sk", "u0_v0", "e1_e4",
                                                  "k1_k4", "trials_used", "trials_excluded"};
  const std::vector<std::string> std_rows = {"fx_fy", "sk", "u0_v0", "e1_e4", "k1_k4"};
  std::string detail;
  bool pass = true;

  const auto start = Clock::now();
  const int noisy = run_cli({"stability", "--trials", "100", "--noise", "0.1", "--kinds",
                             "svp,nsvp", "--seed", "42", "--output",
                             (dir / "noisy.csv").string()});
  const double noisy_time = seconds_since(start);
  std::vector<std::string> order;
  auto rows = read_csv_rows(dir / "noisy.csv", &order);
  const bool shape = noisy == 0 && order == expected_rows &&
                     rows["group"] == std::vector<std::string>{"SVP", "NSVP"} &&
                     rows["e1_e4"].size() == 2 && rows["e1_e4"][0].empty() &&
                     !rows["e1_e4"][1].empty();
  pass = pass && shape;
  detail += std::string("sigma 0.1: ") + (shape ? "table shape ok" : "table shape WRONG") +
            ", used " + (rows["trials_used"].size() == 2
                             ? rows["trials_used"][0] + "/" + rows["trials_used"][1]
                             : std::string("?")) +
            ", " + fmt(noisy_time) + " s";

  const int clean = run_cli({"stability", "--trials", "100", "--noise", "0", "--kinds", "svp,nsvp",
                             "--seed", "42", "--output", (dir / "clean.csv").string()});
  order.clear();
  rows = read_csv_rows(dir / "clean.csv", &order);
  double worst = 0.0;
  bool parsed = clean == 0 && order == expected_rows;
  for (const auto& name : std_rows) {
    for (const auto& cell : rows[name]) {
      if (cell.empty()) continue;
      try {
        worst = std::max(worst, std::stod(cell));
      } catch (const std::exception&) {
        parsed = false;
      }
    }
  }
  pass = pass && parsed && worst < 1e-7;
  detail += "; sigma 0: max std " + fmt(worst);
  return {pass, detail};
}

// ---------------------------------------------------------------------------
// 7. Near-field entrance-pupil sensitivity.

Outcome near_field_sensitivity() {
  const CameraModel nsvp = reference_fisheye_model();
  CameraModel svp = nsvp;
  svp.kind = ModelKind::kSvp;
  svp.ep = {};
  const auto target = generate_target({7, 11, 10.0});

  auto mean_displacement = [&](double distance) {
    Gen gen(2024);
    double sum = 0.0;
    int count = 0;
    for (int j = 0; j < 25; ++j) {
      Pose pose;
      pose.rotation = gen.axis_angle(0.0, deg_to_rad(30));
      const double lateral = 0.25 * std::tan(deg_to_rad(25.0));
      pose.translation = {gen.uniform(-lateral, lateral) * distance,
                          gen.uniform(-lateral, lateral) * distance, distance};
      const RigidTransform T(pose);
      for (const auto& p : target) {
        const Projection a = try_project(nsvp, T, p);
        const Projection b = try_project(svp, T, p);
        if (!a.ok() || !b.ok()) continue;
        sum += (a.pixel - b.pixel).norm();
        ++count;
      }
    }
    return sum / count;
  };
  const double near = mean_displacement(100.0);
  const double far = mean_displacement(150.0);
  return {near > far, "mean displacement " + fmt(near) + " px at 100 mm, " + fmt(far) +
                          " px at 150 mm"};
}

// ---------------------------------------------------------------------------
// 8. File round trips and malformed input.

const char* const kValidDataset = R"({
  "schema_version": 1,
  "image_size": [2048, 2048],
  "target": {"rows": 7, "cols": 11, "spacing": 10.0},
  "observations": [
    {"pose_id": 0, "records": [
      {"target_index": 0, "pixel": [1000.5, 1010.25]},
      {"target_index": 1, "pixel": [1020.5, 1011.0]}
    ]}
  ]
})";

const char* const kValidModel = R"({
  "schema_version": 1,
  "kind": "NSVP",
  "intrinsics": {"fx": 591.7301, "fy": 592.034, "sk": 0.1978, "u0": 1013.2001, "v0": 1025.03},
  "radial": {"k1": 0.0109, "k2": -0.0013, "k3": 0.0008, "k4": -0.0004},
  "ep": {"e1": 0.0851, "e2": -0.2577, "e3": 0.3016, "e4": 0.5368},
  "theta_max_deg": 97.5,
  "poses": [{"rotation": [0.1, 0.0, 0.0], "translation": [0.0, 0.0, 120.0]}],
  "stats": {"rms_px": 0.1, "std_px": 0.05, "iterations": 10, "converged": true}
})";

std::string replace(std::string text, const std::string& from, const std::string& to) {
  const auto pos = text.find(from);
  if (pos == std::string::npos) throw std::logic_error("fixture text not found: " + from);
  return text.replace(pos, from.size(), to);
}

Outcome io_contract() {
  std::vector<std::string> problems;

  SynthConfig config;
  config.noise_px = 0.1;
  const CalibrationDataset dataset = render_dataset(config).dataset;
  ScratchDir dir;
  save_dataset(dataset, dir / "data.json");
  if (!(load_dataset(dir / "data.json") == dataset)) problems.push_back("dataset round trip");

  Gen gen(99);
  std::vector<Pose> poses;
  for (int j = 0; j < 5; ++j) poses.push_back(gen.facing_pose(100, 150, 0.5));
  const ModelFile model = ModelFile::from(gen.model(ModelKind::kNsvp), poses,
                                          {gen.uniform(0, 1), gen.uniform(0, 1), 17, true});
  save_model(model, dir / "model.json");
  if (!(load_model(dir / "model.json") == model)) problems.push_back("model round trip");

  enum class Kind { kDataset, kModel };
  enum class Expect { kParse, kSchema, kValidation };
  struct Case {
    std::string name;
    Kind kind;
    std::string text;
    Expect expect;
  };
  const std::string ds = kValidDataset;
  const std::string md = kValidModel;
  const std::vector<Case> cases = {
      {"truncated", Kind::kDataset, ds.substr(0, ds.size() / 2), Expect::kParse},
      {"empty", Kind::kModel, "", Expect::kParse},
      {"unknown version", Kind::kDataset, replace(ds, "\"schema_version\": 1", "\"schema_version\": 7"),
       Expect::kSchema},
      {"missing image_size", Kind::kDataset, replace(ds, "\"image_size\": [2048, 2048],", ""),
       Expect::kSchema},
      {"index out of range", Kind::kDataset, replace(ds, "\"target_index\": 1,", "\"target_index\": 77,"),
       Expect::kValidation},
      {"duplicate index", Kind::kDataset, replace(ds, "\"target_index\": 1,", "\"target_index\": 0,"),
       Expect::kValidation},
      {"pixel is a string", Kind::kDataset, replace(ds, "[1020.5, 1011.0]", "\"1020.5 1011.0\""),
       Expect::kSchema},
      {"unknown kind", Kind::kModel, replace(md, "\"NSVP\"", "\"PINHOLE\""), Expect::kSchema},
      {"SVP with nonzero e1", Kind::kModel, replace(md, "\"NSVP\"", "\"SVP\""),
       Expect::kValidation},
      {"short rotation", Kind::kModel, replace(md, "[0.1, 0.0, 0.0]", "[0.1, 0.0]"),
       Expect::kSchema},
  };
  int typed = 0;
  for (const auto& c : cases) {
    std::optional<Expect> got;
    try {
      if (c.kind == Kind::kDataset) {
        (void)parse_dataset(c.text, c.name);
      } else {
        (void)parse_model(c.text, c.name);
      }
      problems.push_back(c.name + ": accepted");
      continue;
    } catch (const ParseError&) {
      got = Expect::kParse;
    } catch (const SchemaError&) {
      got = Expect::kSchema;
    } catch (const ValidationError&) {
      got = Expect::kValidation;
    } catch (const std::exception& e) {
      problems.push_back(c.name + ": untyped " + e.what());
      continue;
    }
    if (got == c.expect) {
      ++typed;
    } else {
      problems.push_back(c.name + ": wrong error type");
    }
  }
  std::string detail = "dataset and model round trips, " + std::to_string(typed) + "/" +
                       std::to_string(cases.size()) + " malformed files rejected with typed errors";
  for (const auto& p : problems) detail += "; FAILED " + p;
  return {problems.empty(), detail};
}

struct Criterion {
  int id;
  const char* title;
  std::function<Outcome()> check;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "noise-free round trip", noise_free_round_trip},
      {2, "noisy recovery", noisy_recovery},
      {3, "model nesting", model_nesting},
      {4, "Jacobian correctness", jacobian_correctness},
      {5, "projection invariants", projection_invariants},
      {6, "stability study", stability_study},
      {7, "near-field EP sensitivity", near_field_sensitivity},
      {8, "IO contract", io_contract},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.title,
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
