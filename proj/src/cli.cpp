#include "epcal/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "epcal/io.hpp"
#include "epcal/pipeline.hpp"
#include "epcal/synth.hpp"

namespace epcal::cli {

namespace {

std::vector<ModelKind> parse_kinds(const std::string& text) {
  std::vector<ModelKind> kinds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const ModelKind k = parse_model_kind(item);
    if (std::find(kinds.begin(), kinds.end(), k) == kinds.end()) kinds.push_back(k);
  }
  if (kinds.empty()) throw InvalidArgument("no model kinds given");
  return kinds;
}

std::vector<double> parse_list(const std::string& text, std::size_t expected, const char* flag) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size() || !std::isfinite(v)) {
      throw InvalidArgument(std::string(flag) + ": cannot parse '" + item + "' as a number");
    }
    values.push_back(v);
  }
  if (values.size() != expected) {
    throw InvalidArgument(std::string(flag) + ": expected " + std::to_string(expected) +
                          " comma-separated values");
  }
  return values;
}

std::vector<double> per_view_rms(const CalibrationDataset& dataset, const Eigen::VectorXd& r) {
  std::vector<double> out;
  Eigen::Index row = 0;
  for (const auto& view : dataset.views) {
    const auto n = static_cast<Eigen::Index>(view.points.size());
    out.push_back(n > 0 ? std::sqrt(r.segment(row, 2 * n).squaredNorm() / static_cast<double>(n))
                        : 0.0);
    row += 2 * n;
  }
  return out;
}

void print_model(std::ostream& out, const CalibrationResult& r) {
  const auto& m = r.model;
  out << std::setprecision(10);
  out << "  fx " << m.intrinsics.fx << "  fy " << m.intrinsics.fy << "  sk " << m.intrinsics.sk
      << "\n  u0 " << m.intrinsics.u0 << "  v0 " << m.intrinsics.v0 << "\n  k  " << m.radial.k1
      << ' ' << m.radial.k2 << ' ' << m.radial.k3 << ' ' << m.radial.k4 << '\n';
  if (m.kind == ModelKind::kNsvp) {
    out << "  e  " << m.ep.e1 << ' ' << m.ep.e2 << ' ' << m.ep.e3 << ' ' << m.ep.e4 << '\n';
  }
}

}  // namespace

int cmd_calibrate(const CalibrateArgs& args, std::ostream& out, std::ostream& err) {
  CalibrationResult result;
  try {
    const ModelKind kind = parse_model_kind(args.kind);
    if (args.max_iters < 0) throw InvalidArgument("--max-iters must be non-negative");
    if (!(args.tol > 0.0)) throw InvalidArgument("--tol must be positive");
    const CalibrationDataset dataset = load_dataset(args.input);

    CalibrateOptions options;
    options.solve.max_iterations = args.max_iters;
    options.solve.cost_tolerance = args.tol;
    result = calibrate(dataset, kind, options);

    save_model(ModelFile::from(result), args.output);
    if (args.report) {
      const std::vector<std::string> labels = {std::string(to_string(kind))};
      write_report(std::span(&result, 1), labels, *args.report);
    }
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << '\n';
    return kNotConverged;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }

  out << to_string(result.model.kind) << " calibration: " << result.iterations << " iterations, "
      << to_string(result.reason) << '\n';
  print_model(out, result);
  out << "  rms_px " << result.rms_px << "  std_px " << result.std_px << '\n';
  if (!result.converged) {
    err << "warning: optimization did not converge; model written with converged=false\n";
    return kNotConverged;
  }
  return kSuccess;
}

int cmd_synth(const SynthArgs& args, std::ostream& out, std::ostream& err) {
  SynthConfig config;
  try {
    if (args.width <= 0 || args.height <= 0) throw InvalidArgument("image size must be positive");
    if (!(args.fov > 0.0 && args.fov < 360.0)) throw InvalidArgument("--fov must be in (0, 360)");
    config.model = reference_fisheye_model(args.width, args.height);
    config.model.theta_max = deg_to_rad(0.5 * args.fov);
    if (args.ep) {
      const auto& e = *args.ep;
      if (e.size() != 4) throw InvalidArgument("--ep expects 4 values");
      config.model.ep = {e[0], e[1], e[2], e[3]};
    }
    if (args.k) {
      const auto& k = *args.k;
      if (k.size() != 4) throw InvalidArgument("--k expects 4 values");
      config.model.radial = {k[0], k[1], k[2], k[3]};
    }
    config.target = {args.rows, args.cols, args.spacing};
    config.num_poses = args.poses;
    config.dist_min = args.dist_min;
    config.dist_max = args.dist_max;
    config.max_tilt_deg = args.max_tilt;
    config.noise_px = args.noise;
    config.seed = args.seed;
    config.width = args.width;
    config.height = args.height;
    config.validate();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }

  SyntheticDataset data;
  try {
    data = render_dataset(config);
  } catch (const PoseGenerationError& e) {
    err << "error: " << e.what() << '\n';
    return kNotConverged;
  }

  try {
    save_dataset(data.dataset, args.output);
    if (args.gt_output) {
      const auto& gt = *data.dataset.ground_truth;
      const CalibrationResult eval = evaluate_model(gt.model, gt.poses, data.dataset);
      save_model(ModelFile::from(gt.model, gt.poses, {eval.rms_px, eval.std_px, 0, true}),
                 *args.gt_output);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }

  const std::size_t total = data.dataset.views.size() * static_cast<std::size_t>(config.target.size());
  const std::size_t seen = data.dataset.num_observations();
  out << "poses " << data.dataset.views.size() << ", observations " << seen << " of " << total
      << " (visibility " << std::fixed << std::setprecision(1)
      << 100.0 * static_cast<double>(seen) / static_cast<double>(total) << "%)\n";
  return kSuccess;
}

int cmd_evaluate(const EvaluateArgs& args, std::ostream& out, std::ostream& err) {
  CalibrationResult result;
  CalibrationDataset dataset;
  try {
    const ModelFile model = load_model(args.model);
    dataset = load_dataset(args.input);
    if (args.reestimate_poses) {
      result = reestimate_poses(model.camera_model(), dataset);
    } else {
      if (model.poses.size() != dataset.views.size()) {
        err << "error: model has " << model.poses.size() << " poses but dataset has "
            << dataset.views.size() << " views (use --reestimate-poses)\n";
        return kUsageError;
      }
      result = evaluate_model(model.camera_model(), model.poses, dataset);
    }
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << '\n';
    return kNotConverged;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }

  const auto rms = per_view_rms(dataset, result.residuals);
  out << std::setprecision(10);
  out << "rms_px " << result.rms_px << '\n' << "std_px " << result.std_px << '\n';
  out << "pose_id,points,rms_px\n";
  std::ostringstream csv;
  csv << std::setprecision(10) << "pose_id,points,rms_px\n";
  for (std::size_t j = 0; j < dataset.views.size(); ++j) {
    csv << dataset.views[j].pose_id << ',' << dataset.views[j].points.size() << ',' << rms[j]
        << '\n';
  }
  out << csv.str().substr(csv.str().find('\n') + 1);
  if (args.csv) {
    try {
      write_file_atomic(*args.csv, csv.str());
    } catch (const Error& e) {
      err << "error: " << e.what() << '\n';
      return kUsageError;
    }
  }
  if (args.reestimate_poses && !result.converged) return kNotConverged;
  return kSuccess;
}

int cmd_stability(const StabilityArgs& args, std::ostream& out, std::ostream& err) {
  std::vector<ModelKind> kinds;
  SynthConfig config;
  try {
    kinds = parse_kinds(args.kinds);
    if (args.trials < 2) throw InvalidArgument("--trials must be at least 2");
    config.noise_px = args.noise;
    config.seed = args.seed;
    config.validate();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }

  StabilityReport report;
  try {
    report = monte_carlo_stability(config, args.trials, kinds);
    write_stability_report(report, args.output);
  } catch (const PoseGenerationError& e) {
    err << "error: " << e.what() << '\n';
    return kNotConverged;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }

  out << format_stability_report(report);
  int code = kSuccess;
  for (const auto& k : report.kinds) {
    if (k.trials_excluded > 0) {
      err << "warning: " << to_string(k.kind) << ": " << k.trials_excluded << " of "
          << report.trials << " trials excluded (did not converge)\n";
    }
    if (k.trials_used < 2) code = kNotConverged;
  }
  return code;
}

int cmd_undistort_points(const UndistortArgs& args, std::ostream&, std::ostream& err) {
  CameraModel model;
  std::string text;
  try {
    model = load_model(args.model).camera_model();
    std::ifstream in(args.input);
    if (!in) throw FileError("cannot open '" + args.input.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }

  std::ostringstream out;
  out << std::setprecision(17) << "u,v,ray_x,ray_y,ray_z,theta,ep_offset,status\n";
  std::istringstream lines(text);
  std::string line;
  int line_no = 0;
  int failures = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    double u = 0.0, v = 0.0;
    if (!(fields >> u)) continue;  // blank or comment line
    std::string rest;
    if (!(fields >> v) || (fields >> rest)) {
      err << "warning: " << args.input.string() << ":" << line_no << ": expected 'u v'\n";
      ++failures;
      continue;
    }
    try {
      const Ray ray = unproject(model, {u, v});
      out << u << ',' << v << ',' << ray.direction.x() << ',' << ray.direction.y() << ','
          << ray.direction.z() << ',' << ray.theta << ',' << ray.axial_offset << ",ok\n";
    } catch (const RangeError& e) {
      err << "warning: " << args.input.string() << ":" << line_no << ": " << e.what() << '\n';
      out << u << ',' << v << ",,,,,,out_of_range\n";
      ++failures;
    }
  }
  try {
    write_file_atomic(args.output, out.str());
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }
  if (failures > 0) err << failures << " point(s) could not be undistorted\n";
  return kSuccess;
}

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fisheye calibration with an entrance-pupil camera model", "epcal"};
  app.require_subcommand(1);

  CalibrateArgs cal;
  auto* calibrate = app.add_subcommand("calibrate", "Initialize and refine a camera model");
  calibrate->add_option("--input", cal.input, "Dataset file")->required();
  calibrate->add_option("--output", cal.output, "Model file to write")->required();
  calibrate->add_option("--kind", cal.kind, "svp or nsvp")->capture_default_str();
  calibrate->add_option("--max-iters", cal.max_iters, "Iteration limit")->capture_default_str();
  calibrate->add_option("--tol", cal.tol, "Relative cost tolerance")->capture_default_str();
  calibrate->add_option("--report", cal.report, "Parameter table (CSV)");

  SynthArgs syn;
  std::string ep_text, k_text;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic calibration dataset");
  synth->add_option("--output", syn.output, "Dataset file to write")->required();
  synth->add_option("--gt-output", syn.gt_output, "Ground-truth model file to write");
  synth->add_option("--poses", syn.poses)->capture_default_str();
  synth->add_option("--rows", syn.rows)->capture_default_str();
  synth->add_option("--cols", syn.cols)->capture_default_str();
  synth->add_option("--spacing", syn.spacing, "Target pitch (mm)")->capture_default_str();
  synth->add_option("--dist-min", syn.dist_min, "mm")->capture_default_str();
  synth->add_option("--dist-max", syn.dist_max, "mm")->capture_default_str();
  synth->add_option("--noise", syn.noise, "Pixel noise RMS (px)")->capture_default_str();
  synth->add_option("--seed", syn.seed)->capture_default_str();
  synth->add_option("--fov", syn.fov, "Field of view (deg)")->capture_default_str();
  synth->add_option("--width", syn.width)->capture_default_str();
  synth->add_option("--height", syn.height)->capture_default_str();
  synth->add_option("--max-tilt", syn.max_tilt, "Maximum target tilt (deg)")->capture_default_str();
  synth->add_option("--ep", ep_text, "e1,e2,e3,e4");
  synth->add_option("--k", k_text, "k1,k2,k3,k4");

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Reprojection statistics of a model");
  evaluate->add_option("--model", ev.model)->required();
  evaluate->add_option("--input", ev.input)->required();
  evaluate->add_flag("--reestimate-poses", ev.reestimate_poses,
                     "Refit poses with the camera parameters frozen");
  evaluate->add_option("--csv", ev.csv, "Per-pose table (CSV)");

  StabilityArgs st;
  auto* stability = app.add_subcommand("stability", "Monte-Carlo parameter spread");
  stability->add_option("--trials", st.trials)->capture_default_str();
  stability->add_option("--noise", st.noise)->capture_default_str();
  stability->add_option("--kinds", st.kinds)->capture_default_str();
  stability->add_option("--seed", st.seed)->capture_default_str();
  stability->add_option("--output", st.output)->required();

  UndistortArgs un;
  auto* undistort = app.add_subcommand("undistort-points", "Pixels to camera rays");
  undistort->add_option("--model", un.model)->required();
  undistort->add_option("--input", un.input, "Text file with one 'u v' pair per line")->required();
  undistort->add_option("--output", un.output)->required();

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);  // --help
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }

  try {
    if (*calibrate) return cmd_calibrate(cal, out, err);
    if (*synth) {
      if (!ep_text.empty()) syn.ep = parse_list(ep_text, 4, "--ep");
      if (!k_text.empty()) syn.k = parse_list(k_text, 4, "--k");
      return cmd_synth(syn, out, err);
    }
    if (*evaluate) return cmd_evaluate(ev, out, err);
    if (*stability) return cmd_stability(st, out, err);
    if (*undistort) return cmd_undistort_points(un, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }
  return kUsageError;
}

}  // namespace epcal::cli
