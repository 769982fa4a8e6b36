#include <gtest/gtest.h>

#include <cmath>

#include "epcal/error.hpp"
#include "epcal/model.hpp"
#include "epcal/synth.hpp"

namespace epcal {
namespace {

const EntrancePupil kReferenceEp{0.0851, -0.2577, 0.3016, 0.5368};
const RadialDistortion kReferenceK{0.0109, -0.0013, 0.0008, -0.0004};

double power_sum_ep(double t, const EntrancePupil& e) {
  return e.e1 * std::pow(t, 3) + e.e2 * std::pow(t, 5) + e.e3 * std::pow(t, 7) +
         e.e4 * std::pow(t, 9);
}

double power_sum_radial(double t, const RadialDistortion& k) {
  return t + k.k1 * std::pow(t, 3) + k.k2 * std::pow(t, 5) + k.k3 * std::pow(t, 7) +
         k.k4 * std::pow(t, 9);
}

Pose translated(double x, double y, double z) {
  Pose p;
  p.translation = {x, y, z};
  return p;
}

CameraModel equidistant(double f, ModelKind kind = ModelKind::kSvp) {
  CameraModel m;
  m.intrinsics = {f, f, 0.0, 1024.0, 1024.0};
  m.kind = kind;
  return m;
}

// Independent solver for the shifted incidence angle: bisection on
// g(theta) = theta - angle(T(point, E(theta))).
double bisect_theta(const Pose& pose, const TargetPoint& p, const EntrancePupil& ep) {
  const Eigen::Matrix3d R = pose.rotation_matrix();
  auto g = [&](double t) {
    const Eigen::Vector3d c = R * Eigen::Vector3d(p.x, p.y, power_sum_ep(t, ep)) + pose.translation;
    return t - std::acos(c.z() / c.norm());
  };
  double lo = 0.0, hi = 1.5;
  EXPECT_LT(g(lo), 0.0);
  EXPECT_GT(g(hi), 0.0);
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

TEST(EpShift, ZeroAngleAndZeroCoefficients) {
  EXPECT_EQ(ep_shift(0.0, kReferenceEp), 0.0);
  EXPECT_EQ(ep_shift(0.8, EntrancePupil{}), 0.0);
}

TEST(EpShift, MatchesPowerSum) {
  EXPECT_NEAR(ep_shift(0.5, kReferenceEp), power_sum_ep(0.5, kReferenceEp), 1e-17);
  EXPECT_NEAR(ep_shift(0.5, kReferenceEp), 0.0059890625, 1e-16);
  for (double t = -1.7; t <= 1.7; t += 0.01) {
    const double expected = power_sum_ep(t, kReferenceEp);
    EXPECT_NEAR(ep_shift(t, kReferenceEp), expected, 1e-14 * std::max(1.0, std::abs(expected)));
  }
}

TEST(Transform, Examples) {
  EXPECT_EQ(transform_world_to_camera(Pose{}, {0, 0}, 0.0), Eigen::Vector3d::Zero());
  EXPECT_EQ(transform_world_to_camera(translated(0, 0, 120), {10, 5}, 0.0),
            Eigen::Vector3d(10, 5, 120));
  EXPECT_EQ(transform_world_to_camera(translated(0, 0, 120), {10, 5}, 2.5),
            Eigen::Vector3d(10, 5, 122.5));
}

TEST(Transform, ShiftIsAppliedInWorldFrame) {
  Pose pose = translated(1, 2, 100);
  pose.rotation = {0.3, 0.0, 0.0};
  const Eigen::Vector3d a = transform_world_to_camera(pose, {4, 5}, 0.0);
  const Eigen::Vector3d b = transform_world_to_camera(pose, {4, 5}, 2.0);
  EXPECT_TRUE((b - a).isApprox(2.0 * pose.rotation_matrix().col(2), 1e-14));
}

TEST(IncidenceAngle, Examples) {
  EXPECT_EQ(incidence_angle({0, 0, 100}), 0.0);
  EXPECT_NEAR(incidence_angle({1, 0, 0}), kPi / 2, 1e-16);
  EXPECT_NEAR(incidence_angle({1, 1, std::sqrt(2.0)}), kPi / 4, 1e-15);
  EXPECT_NEAR(incidence_angle({0, 1, -1}), 3 * kPi / 4, 1e-15);
  EXPECT_THROW(incidence_angle(Eigen::Vector3d::Zero()), InvalidArgument);
}

TEST(ResolveTheta, ZeroPupilIsPlainAngle) {
  Pose pose = translated(3, -4, 110);
  pose.rotation = {0.1, -0.2, 0.05};
  const TargetPoint p{30, -20};
  EXPECT_EQ(resolve_theta_nsvp(pose, p, EntrancePupil{}),
            incidence_angle(transform_world_to_camera(pose, p, 0.0)));
}

TEST(ResolveTheta, OnAxisIsZero) {
  EXPECT_EQ(resolve_theta_nsvp(translated(0, 0, 120), {0, 0}, kReferenceEp), 0.0);
}

TEST(ResolveTheta, AgreesWithBisectionOracle) {
  Pose pose = translated(0, 0, 120);
  for (const TargetPoint p : {TargetPoint{40, 25}, TargetPoint{-60, 10}, TargetPoint{80, -70}}) {
    EXPECT_NEAR(resolve_theta_nsvp(pose, p, kReferenceEp), bisect_theta(pose, p, kReferenceEp),
                1e-12);
  }
  pose.rotation = {0.2, -0.3, 0.1};
  const TargetPoint p{35, -15};
  EXPECT_NEAR(resolve_theta_nsvp(pose, p, kReferenceEp), bisect_theta(pose, p, kReferenceEp),
              1e-12);
}

TEST(ResolveTheta, ReportsFailures) {
  try {
    resolve_theta_nsvp(translated(0, 0, -10), {1, 1}, kReferenceEp);
    FAIL() << "expected ProjectionError";
  } catch (const ProjectionError& e) {
    EXPECT_EQ(e.status(), ProjectionStatus::kBehindCamera);
  }
  // Strongly expanding shift: the iteration cannot settle.
  const EntrancePupil wild{500, 0, 0, 0};
  try {
    resolve_theta_nsvp(translated(0, 0, 20), {30, 0}, wild);
    FAIL() << "expected ProjectionError";
  } catch (const ProjectionError& e) {
    EXPECT_EQ(e.status(), ProjectionStatus::kNoConvergence);
  }
}

TEST(RadialDistance, Examples) {
  EXPECT_EQ(radial_distance(0.0, kReferenceK), 0.0);
  EXPECT_EQ(radial_distance(0.7, RadialDistortion{}), 0.7);
  EXPECT_NEAR(radial_distance(1.0, kReferenceK), 1.0100, 1e-15);
  for (double t = 0.0; t <= 1.7; t += 0.05) {
    EXPECT_NEAR(radial_distance(t, kReferenceK), power_sum_radial(t, kReferenceK), 1e-15);
  }
}

TEST(RadialDistance, DerivativeMatchesDifferences) {
  for (double t = 0.1; t <= 1.6; t += 0.1) {
    const double h = 1e-6;
    const double fd = (radial_distance(t + h, kReferenceK) - radial_distance(t - h, kReferenceK)) /
                      (2 * h);
    EXPECT_NEAR(radial_derivative(t, kReferenceK), fd, 1e-8);
  }
}

TEST(InvertRadial, Examples) {
  EXPECT_EQ(invert_radial(0.0, kReferenceK, kDefaultThetaMax), 0.0);
  for (double r : {0.1, 0.5, 1.0, 1.6}) {
    EXPECT_EQ(invert_radial(r, RadialDistortion{}, kDefaultThetaMax), r);
  }
  for (int i = 0; i < 100; ++i) {
    const double t = 1.7 * i / 99.0;
    const double r = radial_distance(t, kReferenceK);
    const double back = invert_radial(r, kReferenceK, kDefaultThetaMax);
    EXPECT_NEAR(back, t, 1e-10);
    EXPECT_LT(std::abs(radial_distance(back, kReferenceK) - r), 1e-12);
  }
}

TEST(InvertRadial, RejectsOutOfRangeAndNonMonotone) {
  const double r_max = radial_distance(kDefaultThetaMax, kReferenceK);
  EXPECT_THROW(invert_radial(-0.1, kReferenceK, kDefaultThetaMax), RangeError);
  EXPECT_THROW(invert_radial(r_max * 1.001, kReferenceK, kDefaultThetaMax), RangeError);
  EXPECT_THROW(invert_radial(std::nan(""), kReferenceK, kDefaultThetaMax), RangeError);
  const RadialDistortion folding{-0.3, 0, 0, 0};
  EXPECT_FALSE(is_radial_monotone(folding, kDefaultThetaMax));
  EXPECT_THROW(invert_radial(0.1, folding, kDefaultThetaMax), RangeError);
}

TEST(Project, OnAxisHitsPrincipalPoint) {
  CameraModel m = reference_fisheye_model();
  const Eigen::Vector2d px = project(m, translated(0, 0, 120), {0, 0});
  EXPECT_EQ(px, Eigen::Vector2d(m.intrinsics.u0, m.intrinsics.v0));
}

TEST(Project, EquidistantByHand) {
  const double f = 600.0;
  const CameraModel m = equidistant(f);
  for (double x : {5.0, 40.0, 150.0}) {
    const Eigen::Vector2d px = project(m, translated(0, 0, 100), {x, 0});
    EXPECT_NEAR(px.x(), 1024.0 + f * std::atan2(x, 100.0), 1e-12);
    EXPECT_NEAR(px.y(), 1024.0, 1e-12);
  }
}

TEST(Project, SkewAndVerticalAxis) {
  CameraModel m = equidistant(600.0);
  m.intrinsics.fy = 500.0;
  m.intrinsics.sk = 2.0;
  const double t = std::atan2(30.0, 100.0);
  const Eigen::Vector2d px = project(m, translated(0, 0, 100), {0, 30});
  EXPECT_NEAR(px.x(), 1024.0 + 2.0 * t, 1e-12);
  EXPECT_NEAR(px.y(), 1024.0 + 500.0 * t, 1e-12);
}

TEST(Project, ZeroPupilMatchesSvpExactly) {
  CameraModel svp = reference_fisheye_model();
  svp.kind = ModelKind::kSvp;
  svp.ep = {};
  CameraModel nsvp = svp;
  nsvp.kind = ModelKind::kNsvp;
  Pose pose = translated(5, -3, 110);
  pose.rotation = {0.2, 0.1, -0.3};
  for (double x = -50; x <= 50; x += 10) {
    for (double y = -30; y <= 30; y += 10) {
      EXPECT_EQ(project(svp, pose, {x, y}), project(nsvp, pose, {x, y}));
    }
  }
}

TEST(Project, ReportsFieldOfViewAndBehindCamera) {
  CameraModel m = equidistant(600.0);
  m.theta_max = deg_to_rad(60.0);
  try {
    project(m, translated(0, 0, 10), {100, 0});
    FAIL();
  } catch (const ProjectionError& e) {
    EXPECT_EQ(e.status(), ProjectionStatus::kOutOfFov);
  }
  try {
    project(m, translated(0, 0, -10), {1, 0});
    FAIL();
  } catch (const ProjectionError& e) {
    EXPECT_EQ(e.status(), ProjectionStatus::kBehindCamera);
  }
  const Projection p = try_project(m, RigidTransform(translated(0, 0, 10)), {100, 0});
  EXPECT_EQ(p.status, ProjectionStatus::kOutOfFov);
}

TEST(Unproject, Examples) {
  const CameraModel ref = reference_fisheye_model();
  const Ray center = unproject(ref, {ref.intrinsics.u0, ref.intrinsics.v0});
  EXPECT_EQ(center.theta, 0.0);
  EXPECT_EQ(center.direction, Eigen::Vector3d::UnitZ());
  EXPECT_EQ(center.axial_offset, 0.0);

  const double f = 600.0;
  const Ray r = unproject(equidistant(f), {1024.0 + f * kPi / 4, 1024.0});
  EXPECT_NEAR(r.theta, kPi / 4, 1e-15);
  EXPECT_NEAR(std::atan2(r.direction.y(), r.direction.x()), 0.0, 1e-15);
  EXPECT_NEAR(r.direction.norm(), 1.0, 1e-15);
}

TEST(Unproject, ReportsPupilOffset) {
  const CameraModel ref = reference_fisheye_model();
  const Ray r = unproject(ref, {ref.intrinsics.u0 + 400.0, ref.intrinsics.v0 - 100.0});
  EXPECT_EQ(r.axial_offset, ep_shift(r.theta, ref.ep));
  EXPECT_GT(r.axial_offset, 0.0);
}

TEST(Unproject, RejectsPixelsBeyondFieldOfView) {
  const CameraModel ref = reference_fisheye_model();
  EXPECT_THROW(unproject(ref, {ref.intrinsics.u0 + 5000.0, ref.intrinsics.v0}), RangeError);
}

TEST(CameraModel, Validate) {
  CameraModel m = reference_fisheye_model();
  EXPECT_NO_THROW(m.validate());
  m.kind = ModelKind::kSvp;
  EXPECT_THROW(m.validate(), InvalidArgument);
  m = reference_fisheye_model();
  m.intrinsics.fx = -1.0;
  EXPECT_THROW(m.validate(), InvalidArgument);
  m = reference_fisheye_model();
  m.theta_max = 4.0;
  EXPECT_THROW(m.validate(), InvalidArgument);
  m = reference_fisheye_model();
  m.radial.k3 = std::nan("");
  EXPECT_THROW(m.validate(), InvalidArgument);
}

TEST(ModelKind, Parse) {
  EXPECT_EQ(parse_model_kind("svp"), ModelKind::kSvp);
  EXPECT_EQ(parse_model_kind("NSVP"), ModelKind::kNsvp);
  EXPECT_THROW(parse_model_kind("pinhole"), InvalidArgument);
  EXPECT_EQ(to_string(ModelKind::kNsvp), "NSVP");
}

}  // namespace
}  // namespace epcal
