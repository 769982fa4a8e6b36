#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace epcal::cli {

/// Process exit codes shared by every subcommand.
enum ExitCode : int { kSuccess = 0, kUsageError = 1, kNotConverged = 2 };

struct CalibrateArgs {
  std::filesystem::path input;
  std::filesystem::path output;
  std::string kind = "nsvp";
  int max_iters = 100;
  double tol = 1e-12;
  std::optional<std::filesystem::path> report;
};

struct SynthArgs {
  std::filesystem::path output;
  std::optional<std::filesystem::path> gt_output;
  int poses = 25;
  int rows = 7;
  int cols = 11;
  double spacing = 10.0;
  double dist_min = 100.0;
  double dist_max = 150.0;
  double noise = 0.1;
  std::uint64_t seed = 42;
  double fov = 195.0;
  int width = 2048;
  int height = 2048;
  double max_tilt = 30.0;
  std::optional<std::vector<double>> ep;
  std::optional<std::vector<double>> k;
};

struct EvaluateArgs {
  std::filesystem::path model;
  std::filesystem::path input;
  bool reestimate_poses = false;
  std::optional<std::filesystem::path> csv;
};

struct StabilityArgs {
  int trials = 100;
  double noise = 0.1;
  std::string kinds = "svp,nsvp";
  std::uint64_t seed = 42;
  std::filesystem::path output;
};

struct UndistortArgs {
  std::filesystem::path model;
  std::filesystem::path input;
  std::filesystem::path output;
};

int cmd_calibrate(const CalibrateArgs& args, std::ostream& out, std::ostream& err);
int cmd_synth(const SynthArgs& args, std::ostream& out, std::ostream& err);
int cmd_evaluate(const EvaluateArgs& args, std::ostream& out, std::ostream& err);
int cmd_stability(const StabilityArgs& args, std::ostream& out, std::ostream& err);
int cmd_undistort_points(const UndistortArgs& args, std::ostream& out, std::ostream& err);

/// Parses `args` (args[0] is the program name) and dispatches.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace epcal::cli
