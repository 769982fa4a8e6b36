#include "epcal/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>
#include <string>

namespace epcal {

namespace {

constexpr int kMonotoneGridSize = 1024;

bool all_finite(std::initializer_list<double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

double incidence_angle_unchecked(const Eigen::Vector3d& pc) {
  return std::atan2(std::hypot(pc.x(), pc.y()), pc.z());
}

// Fixed-point resolution of theta; shared by the throwing and the
// non-throwing entry points.
ProjectionStatus resolve_theta(const RigidTransform& T, const TargetPoint& point,
                               const EntrancePupil& ep, const ThetaSolverOptions& options,
                               double* theta_out) {
  const Eigen::Vector3d pc0 = T.apply(point, 0.0);
  if (!(pc0.z() > 0.0)) return ProjectionStatus::kBehindCamera;
  double theta = incidence_angle_unchecked(pc0);
  for (int k = 0; k < options.max_iter; ++k) {
    const double next = incidence_angle_unchecked(T.apply(point, ep_shift(theta, ep)));
    if (!std::isfinite(next)) return ProjectionStatus::kNoConvergence;
    if (std::abs(next - theta) < options.tol) {
      *theta_out = next;
      return ProjectionStatus::kOk;
    }
    theta = next;
  }
  return ProjectionStatus::kNoConvergence;
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  return kind == ModelKind::kSvp ? "SVP" : "NSVP";
}

ModelKind parse_model_kind(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "svp") return ModelKind::kSvp;
  if (lower == "nsvp") return ModelKind::kNsvp;
  throw InvalidArgument("unknown model kind '" + std::string(text) + "' (expected svp or nsvp)");
}

std::string_view to_string(ProjectionStatus status) {
  switch (status) {
    case ProjectionStatus::kOk: return "ok";
    case ProjectionStatus::kOutOfFov: return "out of field of view";
    case ProjectionStatus::kBehindCamera: return "behind camera";
    case ProjectionStatus::kNoConvergence: return "incidence angle did not converge";
  }
  return "unknown";
}

void CameraModel::validate() const {
  const auto& k = intrinsics;
  if (!all_finite({k.fx, k.fy, k.sk, k.u0, k.v0})) {
    throw InvalidArgument("camera intrinsics must be finite");
  }
  if (!(k.fx > 0.0) || !(k.fy > 0.0)) throw InvalidArgument("focal lengths must be positive");
  if (!all_finite({radial.k1, radial.k2, radial.k3, radial.k4})) {
    throw InvalidArgument("radial coefficients must be finite");
  }
  if (!all_finite({ep.e1, ep.e2, ep.e3, ep.e4})) {
    throw InvalidArgument("entrance pupil coefficients must be finite");
  }
  if (kind == ModelKind::kSvp && !ep.is_zero()) {
    throw InvalidArgument("SVP model must have zero entrance pupil coefficients");
  }
  if (!(theta_max > 0.0 && theta_max < kPi)) throw InvalidArgument("theta_max must lie in (0, pi)");
}

double ep_shift(double theta, const EntrancePupil& ep) {
  const double t2 = theta * theta;
  return t2 * theta * (ep.e1 + t2 * (ep.e2 + t2 * (ep.e3 + t2 * ep.e4)));
}

Eigen::Vector3d transform_world_to_camera(const Pose& pose, const TargetPoint& point,
                                          double z_shift) {
  return RigidTransform(pose).apply(point, z_shift);
}

double incidence_angle(const Eigen::Vector3d& camera_point) {
  if (camera_point.squaredNorm() == 0.0) {
    throw InvalidArgument("incidence angle of a zero-length vector is undefined");
  }
  return incidence_angle_unchecked(camera_point);
}

double resolve_theta_nsvp(const Pose& pose, const TargetPoint& point, const EntrancePupil& ep,
                          const ThetaSolverOptions& options) {
  double theta = 0.0;
  const ProjectionStatus status = resolve_theta(RigidTransform(pose), point, ep, options, &theta);
  if (status != ProjectionStatus::kOk) {
    throw ProjectionError(status, std::string("cannot resolve incidence angle: ") +
                                      std::string(to_string(status)));
  }
  return theta;
}

double radial_distance(double theta, const RadialDistortion& radial) {
  const double t2 = theta * theta;
  return theta * (1.0 + t2 * (radial.k1 + t2 * (radial.k2 + t2 * (radial.k3 + t2 * radial.k4))));
}

double radial_derivative(double theta, const RadialDistortion& radial) {
  const double t2 = theta * theta;
  return 1.0 + t2 * (3.0 * radial.k1 +
                     t2 * (5.0 * radial.k2 + t2 * (7.0 * radial.k3 + t2 * 9.0 * radial.k4)));
}

bool is_radial_monotone(const RadialDistortion& radial, double theta_max) {
  for (int i = 0; i < kMonotoneGridSize; ++i) {
    const double theta = theta_max * static_cast<double>(i) / (kMonotoneGridSize - 1);
    if (!(radial_derivative(theta, radial) > 0.0)) return false;
  }
  return true;
}

double invert_radial(double r, const RadialDistortion& radial, double theta_max) {
  if (!is_radial_monotone(radial, theta_max)) {
    throw RangeError("radial polynomial is not monotone on [0, theta_max]");
  }
  const double r_max = radial_distance(theta_max, radial);
  if (!std::isfinite(r) || r < 0.0 || r > r_max) {
    std::ostringstream msg;
    msg << "radius " << r << " outside invertible range [0, " << r_max << "]";
    throw RangeError(msg.str());
  }
  if (r == 0.0) return 0.0;

  double lo = 0.0;
  double hi = theta_max;
  double theta = std::clamp(r, lo, hi);
  for (int iter = 0; iter < 200; ++iter) {
    const double f = radial_distance(theta, radial) - r;
    if (f == 0.0) return theta;
    if (f > 0.0) {
      hi = theta;
    } else {
      lo = theta;
    }
    const double df = radial_derivative(theta, radial);
    double next = theta - f / df;
    if (!(df > 0.0) || !(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - theta) <= 1e-16 * std::max(1.0, theta) || hi - lo <= 1e-16) {
      theta = next;
      break;
    }
    theta = next;
  }
  return theta;
}

Eigen::Vector2d apply_affine(const CameraIntrinsics& k, const Eigen::Vector2d& xy) {
  return {k.fx * xy.x() + k.sk * xy.y() + k.u0, k.fy * xy.y() + k.v0};
}

Eigen::Vector2d invert_affine(const CameraIntrinsics& k, const Eigen::Vector2d& pixel) {
  const double y = (pixel.y() - k.v0) / k.fy;
  const double x = (pixel.x() - k.u0 - k.sk * y) / k.fx;
  return {x, y};
}

Projection try_project(const CameraModel& model, const RigidTransform& transform,
                       const TargetPoint& point, const ThetaSolverOptions& options) {
  Projection out;
  double theta = 0.0;
  Eigen::Vector3d pc;
  if (model.kind == ModelKind::kSvp) {
    pc = transform.apply(point, 0.0);
    if (!(pc.z() > 0.0)) {
      out.status = ProjectionStatus::kBehindCamera;
      return out;
    }
    theta = incidence_angle_unchecked(pc);
  } else {
    out.status = resolve_theta(transform, point, model.ep, options, &theta);
    if (!out.ok()) return out;
    pc = transform.apply(point, ep_shift(theta, model.ep));
    if (!(pc.z() > 0.0)) {
      out.status = ProjectionStatus::kBehindCamera;
      return out;
    }
  }
  out.theta = theta;
  if (theta > model.theta_max) {
    out.status = ProjectionStatus::kOutOfFov;
    return out;
  }
  const double phi = std::atan2(pc.y(), pc.x());
  const double r = radial_distance(theta, model.radial);
  out.pixel = apply_affine(model.intrinsics, {r * std::cos(phi), r * std::sin(phi)});
  return out;
}

Eigen::Vector2d project(const CameraModel& model, const Pose& pose, const TargetPoint& point) {
  const Projection p = try_project(model, RigidTransform(pose), point);
  if (!p.ok()) {
    std::ostringstream msg;
    msg << "cannot project target point (" << point.x << ", " << point.y
        << "): " << to_string(p.status);
    throw ProjectionError(p.status, msg.str());
  }
  return p.pixel;
}

Ray unproject(const CameraModel& model, const Eigen::Vector2d& pixel) {
  const Eigen::Vector2d xy = invert_affine(model.intrinsics, pixel);
  const double r = xy.norm();
  const double phi = std::atan2(xy.y(), xy.x());
  Ray ray;
  ray.theta = invert_radial(r, model.radial, model.theta_max);
  const double s = std::sin(ray.theta);
  ray.direction = {s * std::cos(phi), s * std::sin(phi), std::cos(ray.theta)};
  if (model.kind == ModelKind::kNsvp) ray.axial_offset = ep_shift(ray.theta, model.ep);
  return ray;
}

}  // namespace epcal
