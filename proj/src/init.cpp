#include "epcal/init.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <sstream>

namespace epcal {

namespace {

// Similarity taking the points to zero centroid and mean distance sqrt(2).
Eigen::Matrix3d normalizing_transform(std::span<const Eigen::Vector2d> pts) {
  Eigen::Vector2d c = Eigen::Vector2d::Zero();
  for (const auto& p : pts) c += p;
  c /= static_cast<double>(pts.size());
  double mean_dist = 0.0;
  for (const auto& p : pts) mean_dist += (p - c).norm();
  mean_dist /= static_cast<double>(pts.size());
  if (!(mean_dist > 0.0) || !std::isfinite(mean_dist)) {
    throw DegenerateConfiguration("homography points are coincident");
  }
  const double s = std::sqrt(2.0) / mean_dist;
  Eigen::Matrix3d T;
  T << s, 0.0, -s * c.x(),
       0.0, s, -s * c.y(),
       0.0, 0.0, 1.0;
  return T;
}

}  // namespace

Eigen::Vector2d init_principal_point(double image_width, double image_height) {
  return {0.5 * image_width, 0.5 * image_height};
}

double init_focal(double fov_degrees, double image_width) {
  if (!(fov_degrees > 0.0 && fov_degrees < 360.0)) {
    throw InvalidArgument("field of view must lie in (0, 360) degrees");
  }
  if (!(image_width > 0.0)) throw InvalidArgument("image width must be positive");
  return 0.5 * image_width / deg_to_rad(0.5 * fov_degrees);
}

Eigen::Matrix3d estimate_homography(std::span<const Eigen::Vector2d> src,
                                    std::span<const Eigen::Vector2d> dst) {
  if (src.size() != dst.size()) throw InvalidArgument("homography point lists differ in length");
  if (src.size() < 4) throw DegenerateConfiguration("homography needs at least 4 points");
  const Eigen::Matrix3d Ts = normalizing_transform(src);
  const Eigen::Matrix3d Td = normalizing_transform(dst);

  const auto n = static_cast<Eigen::Index>(src.size());
  Eigen::MatrixXd A(2 * n, 9);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector3d p = Ts * src[static_cast<std::size_t>(i)].homogeneous();
    const Eigen::Vector3d q = Td * dst[static_cast<std::size_t>(i)].homogeneous();
    const double x = p.x(), y = p.y(), u = q.x(), v = q.y();
    A.row(2 * i) << -x, -y, -1.0, 0.0, 0.0, 0.0, u * x, u * y, u;
    A.row(2 * i + 1) << 0.0, 0.0, 0.0, -x, -y, -1.0, v * x, v * y, v;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();
  // A unique homography leaves a one-dimensional null space.
  if (sv.size() < 9 || !(sv[7] > 1e-10 * sv[0])) {
    throw DegenerateConfiguration("homography system is rank deficient (collinear points?)");
  }
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Eigen::Matrix3d Hn;
  Hn << h[0], h[1], h[2],
        h[3], h[4], h[5],
        h[6], h[7], h[8];
  Eigen::Matrix3d H = Td.inverse() * Hn * Ts;
  return H / H.norm();
}

Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& M) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d D = Eigen::Matrix3d::Identity();
  D(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  return svd.matrixU() * D * svd.matrixV().transpose();
}

Pose init_pose_from_homography(std::span<const Correspondence> correspondences,
                               const CameraIntrinsics& intrinsics, const RadialDistortion& radial,
                               double theta_max, double max_theta) {
  std::vector<Eigen::Vector2d> src;
  std::vector<Eigen::Vector2d> dst;
  for (const auto& c : correspondences) {
    const Eigen::Vector2d xy = invert_affine(intrinsics, c.pixel);
    const double r = xy.norm();
    double theta = 0.0;
    try {
      theta = invert_radial(r, radial, theta_max);
    } catch (const RangeError&) {
      continue;
    }
    if (theta >= max_theta) continue;
    src.emplace_back(c.target.x, c.target.y);
    dst.push_back(r > 0.0 ? Eigen::Vector2d(std::tan(theta) / r * xy) : Eigen::Vector2d::Zero());
  }
  if (src.size() < 4) {
    throw DegenerateConfiguration("fewer than 4 correspondences usable for pose initialization");
  }

  Eigen::Matrix3d H = estimate_homography(src, dst);
  const double scale = H.col(0).norm();
  if (!(scale > 0.0)) throw DegenerateConfiguration("homography has a null first column");
  H /= scale;
  if (H(2, 2) < 0.0) H = -H;  // target origin in front of the camera

  Eigen::Matrix3d M;
  M.col(0) = H.col(0);
  M.col(1) = H.col(1);
  M.col(2) = H.col(0).cross(H.col(1));
  const Eigen::Matrix3d R = nearest_rotation(M);
  return {matrix_to_rodrigues(R), H.col(2)};
}

Eigen::Vector2d init_distortion(std::span<const std::vector<Correspondence>> views,
                                const CameraIntrinsics& intrinsics, std::span<const Pose> poses) {
  if (views.size() != poses.size()) throw InvalidArgument("one pose per view is required");
  Eigen::Matrix2d N = Eigen::Matrix2d::Zero();
  Eigen::Vector2d b = Eigen::Vector2d::Zero();
  int usable = 0;
  for (std::size_t j = 0; j < views.size(); ++j) {
    const RigidTransform T(poses[j]);
    for (const auto& c : views[j]) {
      const Eigen::Vector3d pc = T.apply(c.target, 0.0);
      if (!(pc.z() > 0.0)) continue;
      const double theta = incidence_angle(pc);
      if (!(theta > 1e-12)) continue;
      const double r_meas = invert_affine(intrinsics, c.pixel).norm();
      const double t3 = theta * theta * theta;
      const double t5 = t3 * theta * theta;
      N(0, 0) += t3 * t3;
      N(0, 1) += t3 * t5;
      N(1, 1) += t5 * t5;
      b[0] += t3 * (r_meas - theta);
      b[1] += t5 * (r_meas - theta);
      ++usable;
    }
  }
  if (usable < 2) throw DegenerateConfiguration("fewer than 2 usable observations for (k1, k2)");
  N(1, 0) = N(0, 1);
  const double det = N.determinant();
  if (!(std::abs(det) > 1e-300) || !std::isfinite(det)) {
    throw DegenerateConfiguration("distortion normal equations are singular");
  }
  return N.ldlt().solve(b);
}

std::vector<std::vector<Correspondence>> correspondences(const CalibrationDataset& dataset) {
  const auto grid = generate_target(dataset.target);
  std::vector<std::vector<Correspondence>> out;
  out.reserve(dataset.views.size());
  for (const auto& view : dataset.views) {
    std::vector<Correspondence> c;
    c.reserve(view.points.size());
    for (const auto& obs : view.points) {
      c.push_back({grid[static_cast<std::size_t>(obs.target_index)], obs.pixel});
    }
    out.push_back(std::move(c));
  }
  return out;
}

InitialEstimate initialize(const CalibrationDataset& dataset, const InitOptions& options) {
  if (dataset.views.empty()) throw InvalidArgument("dataset has no views");
  const auto views = correspondences(dataset);

  InitialEstimate est;
  const Eigen::Vector2d c = init_principal_point(dataset.image_width, dataset.image_height);
  const double f = init_focal(options.fov_deg, dataset.image_width);
  est.intrinsics = {f, f, 0.0, c.x(), c.y()};
  est.theta_max = options.theta_max;

  auto estimate_poses = [&](const RadialDistortion& radial) {
    std::vector<Pose> poses;
    for (std::size_t j = 0; j < views.size(); ++j) {
      try {
        poses.push_back(init_pose_from_homography(views[j], est.intrinsics, radial,
                                                  options.theta_max, options.max_theta));
      } catch (const DegenerateConfiguration& e) {
        std::ostringstream msg;
        msg << "pose " << dataset.views[j].pose_id << ": " << e.what();
        throw DegenerateConfiguration(msg.str());
      }
    }
    return poses;
  };

  est.poses = estimate_poses(est.radial);
  Eigen::Vector2d k = init_distortion(views, est.intrinsics, est.poses);
  est.radial.k1 = k[0];
  est.radial.k2 = k[1];
  for (int round = 0; round < options.refinement_rounds; ++round) {
    if (!is_radial_monotone(est.radial, options.theta_max)) break;
    est.poses = estimate_poses(est.radial);
    k = init_distortion(views, est.intrinsics, est.poses);
    est.radial.k1 = k[0];
    est.radial.k2 = k[1];
  }
  return est;
}

}  // namespace epcal
