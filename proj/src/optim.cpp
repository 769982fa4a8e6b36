#include "epcal/optim.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>

namespace epcal {

namespace {

using Eigen::Index;

// Per-view observation cache with target coordinates resolved.
class ReprojectionProblem {
 public:
  ReprojectionProblem(const CalibrationDataset& dataset, const ResidualOptions& options)
      : options_(options) {
    const auto grid = generate_target(dataset.target);
    Index row = 0;
    views_.reserve(dataset.views.size());
    for (const auto& v : dataset.views) {
      View view;
      view.row_offset = row;
      for (const auto& obs : v.points) {
        view.points.push_back(grid[static_cast<std::size_t>(obs.target_index)]);
        view.pixels.push_back(obs.pixel);
      }
      row += 2 * static_cast<Index>(v.points.size());
      views_.push_back(std::move(view));
    }
    num_rows_ = row;
  }

  Index num_rows() const { return num_rows_; }
  int num_views() const { return static_cast<int>(views_.size()); }
  Index row_offset(int j) const { return views_[static_cast<std::size_t>(j)].row_offset; }
  Index view_rows(int j) const {
    return 2 * static_cast<Index>(views_[static_cast<std::size_t>(j)].points.size());
  }

  void check(const ParameterVector& params) const {
    if (params.num_poses() != num_views() ||
        params.size() != ParameterVector::pose_offset(num_views())) {
      std::ostringstream msg;
      msg << "parameter vector has " << params.size() << " entries; dataset with " << num_views()
          << " views needs " << ParameterVector::pose_offset(num_views());
      throw InvalidArgument(msg.str());
    }
  }

  // Writes view j's residuals into r[row_offset(j) ...] and per-point flags
  // into ok[row_offset(j)/2 ...].
  void evaluate_view(const CameraModel& model, const RigidTransform& T, int j, Eigen::VectorXd& r,
                     std::vector<std::uint8_t>& ok) const {
    const View& view = views_[static_cast<std::size_t>(j)];
    Index row = view.row_offset;
    for (std::size_t i = 0; i < view.points.size(); ++i, row += 2) {
      const Projection p = try_project(model, T, view.points[i], options_.theta);
      if (p.ok()) {
        r[row] = view.pixels[i].x() - p.pixel.x();
        r[row + 1] = view.pixels[i].y() - p.pixel.y();
        ok[static_cast<std::size_t>(row / 2)] = 1;
      } else {
        r[row] = options_.failure_residual;
        r[row + 1] = options_.failure_residual;
        ok[static_cast<std::size_t>(row / 2)] = 0;
      }
    }
  }

  void evaluate(const ParameterVector& params, const std::vector<RigidTransform>& transforms,
                Eigen::VectorXd& r, std::vector<std::uint8_t>& ok) const {
    const CameraModel model = params.camera_model();
    r.resize(num_rows_);
    ok.assign(static_cast<std::size_t>(num_rows_ / 2), 0);
    for (int j = 0; j < num_views(); ++j) {
      evaluate_view(model, transforms[static_cast<std::size_t>(j)], j, r, ok);
    }
  }

  static std::vector<RigidTransform> transforms(const ParameterVector& params) {
    std::vector<RigidTransform> out;
    out.reserve(static_cast<std::size_t>(params.num_poses()));
    for (int j = 0; j < params.num_poses(); ++j) out.emplace_back(params.pose(j));
    return out;
  }

  // Central-difference Jacobian. Columns with compute[c] == false are left
  // zero.
  Eigen::MatrixXd jacobian(const ParameterVector& params, const std::vector<bool>& compute) const {
    const Index n = params.size();
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(num_rows_, n);
    const auto base_T = transforms(params);
    Eigen::VectorXd r0;
    std::vector<std::uint8_t> ok0;
    evaluate(params, base_T, r0, ok0);

    Eigen::VectorXd rp(num_rows_), rm(num_rows_);
    std::vector<std::uint8_t> okp(ok0.size()), okm(ok0.size());
    ParameterVector probe = params;

    auto fill_column = [&](Index c, Index row_begin, Index rows, double denom) {
      for (Index row = row_begin; row < row_begin + rows; ++row) {
        const auto pt = static_cast<std::size_t>(row / 2);
        if (ok0[pt] && okp[pt] && okm[pt]) J(row, c) = (rp[row] - rm[row]) / denom;
      }
    };

    for (Index c = 0; c < kNumCameraParams; ++c) {
      if (!compute[static_cast<std::size_t>(c)]) continue;
      const double x = params.values[c];
      const double h = std::max(1e-6, 1e-7 * std::abs(x));
      const double xp = x + h;
      const double xm = x - h;
      probe.values[c] = xp;
      evaluate(probe, base_T, rp, okp);
      probe.values[c] = xm;
      evaluate(probe, base_T, rm, okm);
      probe.values[c] = x;
      fill_column(c, 0, num_rows_, xp - xm);
    }

    const CameraModel model = params.camera_model();
    for (int j = 0; j < num_views(); ++j) {
      const Index off = ParameterVector::pose_offset(j);
      for (Index k = 0; k < kNumPoseParams; ++k) {
        const Index c = off + k;
        if (!compute[static_cast<std::size_t>(c)]) continue;
        const double x = params.values[c];
        const double h = std::max(1e-6, 1e-7 * std::abs(x));
        const double xp = x + h;
        const double xm = x - h;
        probe.values[c] = xp;
        evaluate_view(model, RigidTransform(probe.pose(j)), j, rp, okp);
        probe.values[c] = xm;
        evaluate_view(model, RigidTransform(probe.pose(j)), j, rm, okm);
        probe.values[c] = x;
        fill_column(c, row_offset(j), view_rows(j), xp - xm);
      }
    }
    return J;
  }

  // J^T J and J^T r using the block structure: view j's rows only touch the
  // camera block and pose j.
  void normal_equations(const Eigen::MatrixXd& J, const Eigen::VectorXd& r, Eigen::MatrixXd& A,
                        Eigen::VectorXd& g) const {
    const Index n = J.cols();
    A.setZero(n, n);
    g.setZero(n);
    for (int j = 0; j < num_views(); ++j) {
      const Index r0 = row_offset(j);
      const Index rows = view_rows(j);
      if (rows == 0) continue;
      const Index off = ParameterVector::pose_offset(j);
      const auto Jc = J.block(r0, 0, rows, kNumCameraParams);
      const auto Jp = J.block(r0, off, rows, kNumPoseParams);
      const auto rj = r.segment(r0, rows);
      A.topLeftCorner(kNumCameraParams, kNumCameraParams).noalias() += Jc.transpose() * Jc;
      A.block(0, off, kNumCameraParams, kNumPoseParams).noalias() = Jc.transpose() * Jp;
      A.block(off, off, kNumPoseParams, kNumPoseParams).noalias() = Jp.transpose() * Jp;
      g.head(kNumCameraParams).noalias() += Jc.transpose() * rj;
      g.segment(off, kNumPoseParams).noalias() = Jp.transpose() * rj;
    }
    A.triangularView<Eigen::StrictlyLower>() = A.transpose();
  }

 private:
  struct View {
    std::vector<TargetPoint> points;
    std::vector<Eigen::Vector2d> pixels;
    Index row_offset = 0;
  };

  ResidualOptions options_;
  std::vector<View> views_;
  Index num_rows_ = 0;
};

double sum_of_squares(const Eigen::VectorXd& r) {
  double s = 0.0;
  for (Index i = 0; i < r.size(); ++i) s += r[i] * r[i];
  return s;
}

}  // namespace

ParameterVector ParameterVector::pack(const CameraModel& model, std::span<const Pose> poses) {
  ParameterVector p(static_cast<int>(poses.size()));
  p.kind = model.kind;
  p.theta_max = model.theta_max;
  const auto& k = model.intrinsics;
  p.values.head(kNumCameraParams) << k.fx, k.fy, k.sk, k.u0, k.v0, model.radial.k1,
      model.radial.k2, model.radial.k3, model.radial.k4, model.ep.e1, model.ep.e2, model.ep.e3,
      model.ep.e4;
  for (std::size_t j = 0; j < poses.size(); ++j) {
    const Index off = pose_offset(static_cast<int>(j));
    p.values.segment<3>(off) = poses[j].rotation;
    p.values.segment<3>(off + 3) = poses[j].translation;
  }
  return p;
}

CameraModel ParameterVector::camera_model() const {
  CameraModel m;
  m.kind = kind;
  m.theta_max = theta_max;
  m.intrinsics = {values[kFx], values[kFy], values[kSk], values[kU0], values[kV0]};
  m.radial = {values[kK1], values[kK2], values[kK3], values[kK4]};
  m.ep = {values[kE1], values[kE2], values[kE3], values[kE4]};
  return m;
}

Pose ParameterVector::pose(int j) const {
  const Index off = pose_offset(j);
  return {values.segment<3>(off), values.segment<3>(off + 3)};
}

std::vector<Pose> ParameterVector::poses() const {
  std::vector<Pose> out;
  for (int j = 0; j < num_poses(); ++j) out.push_back(pose(j));
  return out;
}

std::string ParameterVector::parameter_name(Index index) {
  static constexpr const char* kCamera[kNumCameraParams] = {
      "fx", "fy", "sk", "u0", "v0", "k1", "k2", "k3", "k4", "e1", "e2", "e3", "e4"};
  static constexpr const char* kPose[kNumPoseParams] = {"rx", "ry", "rz", "tx", "ty", "tz"};
  if (index < 0) throw InvalidArgument("negative parameter index");
  if (index < kNumCameraParams) return kCamera[index];
  const Index rel = index - kNumCameraParams;
  return "pose" + std::to_string(rel / kNumPoseParams) + "." + kPose[rel % kNumPoseParams];
}

std::vector<bool> kind_mask(ModelKind kind, int num_poses) {
  std::vector<bool> mask(static_cast<std::size_t>(ParameterVector::pose_offset(num_poses)), false);
  if (kind == ModelKind::kSvp) {
    for (int i = kE1; i <= kE4; ++i) mask[static_cast<std::size_t>(i)] = true;
  }
  return mask;
}

Eigen::VectorXd residual_vector(const ParameterVector& params, const CalibrationDataset& dataset,
                                const ResidualOptions& options) {
  const ReprojectionProblem problem(dataset, options);
  problem.check(params);
  Eigen::VectorXd r;
  std::vector<std::uint8_t> ok;
  problem.evaluate(params, ReprojectionProblem::transforms(params), r, ok);
  return r;
}

Eigen::MatrixXd numeric_jacobian(const ParameterVector& params, const CalibrationDataset& dataset,
                                 const ResidualOptions& options) {
  const ReprojectionProblem problem(dataset, options);
  problem.check(params);
  return problem.jacobian(params, std::vector<bool>(static_cast<std::size_t>(params.size()), true));
}

ResidualStatistics compute_statistics(const Eigen::VectorXd& residuals) {
  if (residuals.size() == 0) throw InvalidArgument("cannot summarize an empty residual vector");
  if (residuals.size() % 2 != 0) throw InvalidArgument("residual vector must hold (du, dv) pairs");
  const Index n = residuals.size() / 2;
  double sum_sq = 0.0;
  double sum = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double norm = std::hypot(residuals[2 * i], residuals[2 * i + 1]);
    sum += norm;
    sum_sq += norm * norm;
  }
  const double mean = sum / static_cast<double>(n);
  double var = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double d = std::hypot(residuals[2 * i], residuals[2 * i + 1]) - mean;
    var += d * d;
  }
  return {std::sqrt(sum_sq / static_cast<double>(n)), std::sqrt(var / static_cast<double>(n))};
}

void SolveOptions::validate(Index num_params) const {
  if (max_iterations < 0) throw InvalidArgument("max_iterations must be non-negative");
  if (!(cost_tolerance > 0.0) || !(param_tolerance > 0.0)) {
    throw InvalidArgument("tolerances must be positive");
  }
  if (!(initial_lambda > 0.0)) throw InvalidArgument("initial damping must be positive");
  if (!(lambda_up > 1.0) || !(lambda_down > 0.0 && lambda_down < 1.0)) {
    throw InvalidArgument("damping factors must satisfy up > 1 and 0 < down < 1");
  }
  if (!fixed.empty() && static_cast<Index>(fixed.size()) != num_params) {
    throw InvalidArgument("fixed-parameter mask length does not match the parameter vector");
  }
}

std::string_view to_string(TerminationReason reason) {
  switch (reason) {
    case TerminationReason::kZeroCost: return "zero cost";
    case TerminationReason::kCostTolerance: return "relative cost decrease below tolerance";
    case TerminationReason::kParamTolerance: return "step below parameter tolerance";
    case TerminationReason::kDampingLimit: return "no decrease within damping limit";
    case TerminationReason::kMaxIterations: return "maximum iterations reached";
  }
  return "unknown";
}

CalibrationResult lm_solve(const ParameterVector& initial, const CalibrationDataset& dataset,
                           const SolveOptions& options) {
  // Points are visited in target-index order inside each view so the whole
  // iteration is independent of the order observations were listed in.
  CalibrationDataset canonical = dataset;
  std::vector<std::vector<std::size_t>> order;
  for (auto& view : canonical.views) {
    std::vector<std::size_t> idx(view.points.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return view.points[a].target_index < view.points[b].target_index;
    });
    std::vector<Observation> sorted;
    sorted.reserve(idx.size());
    for (std::size_t i : idx) sorted.push_back(view.points[i]);
    view.points = std::move(sorted);
    order.push_back(std::move(idx));
  }
  const ReprojectionProblem problem(canonical, options.residual);
  problem.check(initial);
  options.validate(initial.size());

  const Index n = initial.size();
  std::vector<bool> compute(static_cast<std::size_t>(n), true);
  std::vector<Index> free;
  for (Index i = 0; i < n; ++i) {
    if (!options.fixed.empty() && options.fixed[static_cast<std::size_t>(i)]) {
      compute[static_cast<std::size_t>(i)] = false;
    } else {
      free.push_back(i);
    }
  }
  const Index nf = static_cast<Index>(free.size());

  ParameterVector params = initial;
  Eigen::VectorXd r;
  std::vector<std::uint8_t> ok;
  problem.evaluate(params, ReprojectionProblem::transforms(params), r, ok);
  double cost = sum_of_squares(r);
  if (!std::isfinite(cost)) throw ConvergenceError("initial cost is not finite");

  CalibrationResult result;
  result.cost_trace.push_back(cost);
  double lambda = options.initial_lambda;
  bool done = cost == 0.0 || nf == 0;
  if (done) {
    result.converged = true;
    result.reason = TerminationReason::kZeroCost;
  }

  Eigen::MatrixXd A;
  Eigen::VectorXd g;
  Eigen::VectorXd r_new;
  std::vector<std::uint8_t> ok_new;
  while (!done && result.iterations < options.max_iterations) {
    ++result.iterations;
    const Eigen::MatrixXd J = problem.jacobian(params, compute);
    problem.normal_equations(J, r, A, g);

    Eigen::MatrixXd Af(nf, nf);
    Eigen::VectorXd gf(nf);
    for (Index a = 0; a < nf; ++a) {
      gf[a] = g[free[a]];
      for (Index b = 0; b < nf; ++b) Af(a, b) = A(free[a], free[b]);
    }
    // Jacobi scaling: with S = diag(A)^-1/2, diag(S A S) = 1 and the damping
    // term becomes lambda * I.
    Eigen::VectorXd s(nf);
    for (Index a = 0; a < nf; ++a) s[a] = Af(a, a) > 0.0 ? 1.0 / std::sqrt(Af(a, a)) : 1.0;
    const Eigen::MatrixXd As = s.asDiagonal() * Af * s.asDiagonal();
    const Eigen::VectorXd gs = s.cwiseProduct(gf);

    bool accepted = false;
    bool any_solve = false;
    while (!accepted) {
      Eigen::MatrixXd M = As;
      M.diagonal().array() += lambda;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
      Eigen::VectorXd y;
      bool solved = ldlt.info() == Eigen::Success && ldlt.isPositive();
      if (solved) {
        y = ldlt.solve(-gs);
        solved = y.allFinite();
      }
      if (solved) {
        any_solve = true;
        const Eigen::VectorXd delta = s.cwiseProduct(y);
        ParameterVector trial = params;
        for (Index a = 0; a < nf; ++a) trial.values[free[a]] += delta[a];
        problem.evaluate(trial, ReprojectionProblem::transforms(trial), r_new, ok_new);
        const double new_cost = sum_of_squares(r_new);
        if (std::isfinite(new_cost) && new_cost < cost) {
          accepted = true;
          const double rel_decrease = (cost - new_cost) / cost;
          const double step = delta.norm();
          const double scale = trial.values.norm();
          params = std::move(trial);
          std::swap(r, r_new);
          cost = new_cost;
          result.cost_trace.push_back(cost);
          lambda = std::max(lambda * options.lambda_down, 1e-300);
          if (cost == 0.0) {
            done = true;
            result.reason = TerminationReason::kZeroCost;
          } else if (rel_decrease < options.cost_tolerance) {
            done = true;
            result.reason = TerminationReason::kCostTolerance;
          } else if (step <= options.param_tolerance * (scale + options.param_tolerance)) {
            done = true;
            result.reason = TerminationReason::kParamTolerance;
          }
          if (done) result.converged = true;
          break;
        }
      }
      lambda *= options.lambda_up;
      if (lambda > options.max_lambda) {
        if (!any_solve) {
          throw ConvergenceError("normal equations remained singular through the damping range");
        }
        done = true;
        result.converged = true;
        result.reason = TerminationReason::kDampingLimit;
        break;
      }
    }
  }
  if (!done) {
    result.converged = false;
    result.reason = TerminationReason::kMaxIterations;
  }

  result.params = params;
  result.model = params.camera_model();
  for (const Pose& p : params.poses()) {
    result.poses.push_back({canonical_axis_angle(p.rotation), p.translation});
  }
  result.residuals.resize(r.size());
  for (int j = 0; j < problem.num_views(); ++j) {
    const Index off = problem.row_offset(j);
    const auto& idx = order[static_cast<std::size_t>(j)];
    for (std::size_t k = 0; k < idx.size(); ++k) {
      result.residuals.segment<2>(off + 2 * static_cast<Index>(idx[k])) =
          r.segment<2>(off + 2 * static_cast<Index>(k));
    }
  }
  result.final_cost = cost;
  const ResidualStatistics stats = compute_statistics(r);
  result.rms_px = stats.rms_px;
  result.std_px = stats.std_px;
  return result;
}

}  // namespace epcal
