#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "tethercap/target.hpp"

using namespace tethercap;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

TargetBodyState spinning_box(TargetMode mode) {
  TargetBodyState s;
  s.mode = mode;
  s.mass = 100.0;
  // Solid box 1.15 x 0.9 x 0.6 m: I = m (b^2 + c^2) / 12 per axis.
  const double a = 1.15, b = 0.9, c = 0.6;
  s.inertia = Vec3(b * b + c * c, a * a + c * c, a * a + b * b).asDiagonal();
  s.inertia *= s.mass / 12.0;
  s.angular_velocity = Vec3(1.0, 0.5, 0.2) * kDeg;
  return s;
}

}  // namespace

TEST(Target, RotationIncrementIsAxisAngle) {
  const Vec3 w(0.3, -0.2, 0.9);
  const double dt = 0.01;
  const Quat q = rotation_increment(w, dt);
  const Eigen::AngleAxisd expected(w.norm() * dt, w.normalized());
  EXPECT_NEAR(q.angularDistance(Quat(expected)), 0.0, 1e-15);
  EXPECT_TRUE(rotation_increment(Vec3::Zero(), dt).isApprox(Quat::Identity()));
}

TEST(Target, KinematicRotationMatchesClosedForm) {
  auto s = spinning_box(TargetMode::kinematic);
  s.position = Vec3(1, 2, 3);
  s.linear_velocity = Vec3(0.1, 0, -0.05);
  const double dt = 2e-5;
  const int steps = 100000;  // 2 s
  for (int k = 0; k < steps; ++k) s = propagate_pose(s, dt);
  const double t = dt * steps;
  const Quat expected(Eigen::AngleAxisd(s.angular_velocity.norm() * t, s.angular_velocity.normalized()));
  EXPECT_LT(s.orientation.angularDistance(expected), 1e-9);
  EXPECT_NEAR((s.position - Vec3(1 + 0.1 * t, 2, 3 - 0.05 * t)).norm(), 0.0, 1e-9);
  EXPECT_NEAR(s.orientation.norm(), 1.0, 1e-12);
}

TEST(Target, KinematicIgnoresWrenchAndCountsIt) {
  auto s = spinning_box(TargetMode::kinematic);
  const Vec3 w0 = s.angular_velocity;
  apply_wrench(s, Vec3(0, 50, 0), Vec3(0.5, 0, 0));
  apply_wrench(s, Vec3(1, 0, 0), Vec3(0, 0.5, 0));
  EXPECT_EQ(s.ignored_wrenches, 2);
  s = propagate_pose(s, 1e-3);
  EXPECT_EQ(s.angular_velocity, w0);
  EXPECT_EQ(s.linear_velocity, Vec3::Zero());
}

TEST(Target, DynamicTorqueFreeConservesAngularMomentumAndEnergy) {
  auto s = spinning_box(TargetMode::dynamic);
  // Spin well away from a principal axis so the body tumbles.
  s.angular_velocity = Vec3(0.6, 0.05, 0.4);
  const Vec3 l0 = angular_momentum(s);
  const double e0 = kinetic_energy(s);
  const double dt = 1e-4;
  for (int k = 0; k < 200000; ++k) s = propagate_pose(s, dt);  // 20 s
  EXPECT_LT((angular_momentum(s) - l0).norm() / l0.norm(), 1e-10);
  EXPECT_NEAR(kinetic_energy(s), e0, 1e-3 * e0);
  EXPECT_EQ(s.ignored_wrenches, 0);
}

TEST(Target, DynamicRespondsToForceAtOffset) {
  auto s = spinning_box(TargetMode::dynamic);
  s.angular_velocity.setZero();
  const double dt = 1e-3;
  // 10 N along +y at +x: pure force through the centre plus torque about z.
  apply_wrench(s, Vec3(0, 10, 0), Vec3(0.5, 0, 0));
  s = propagate_pose(s, dt);
  EXPECT_NEAR(s.linear_velocity.y(), 10.0 * dt / s.mass, 1e-15);
  EXPECT_NEAR(s.angular_velocity.z(), 5.0 * dt / s.inertia(2, 2), 1e-12);
  EXPECT_EQ(s.force, Vec3::Zero());
  EXPECT_EQ(s.torque, Vec3::Zero());
}

TEST(Target, FrameRoundTrip) {
  TargetBodyState s;
  s.position = Vec3(-1, 0.5, 2);
  s.orientation = Quat(Eigen::AngleAxisd(0.7, Vec3(1, 2, 3).normalized()));
  const Vec3 p(0.3, -0.4, 0.25);
  EXPECT_NEAR((s.to_body(s.to_world(p)) - p).norm(), 0.0, 1e-15);
}

TEST(Target, SurfaceVelocityOfSpinningPoint) {
  TargetBodyState s;
  s.linear_velocity = Vec3(1, 0, 0);
  s.angular_velocity = Vec3(0, 0, 2);
  EXPECT_NEAR((surface_velocity(s, Vec3(0.5, 0, 0)) - Vec3(1, 1, 0)).norm(), 0.0, 1e-15);
}

TEST(Target, ValidationRejectsBadInertia) {
  auto s = spinning_box(TargetMode::dynamic);
  EXPECT_NO_THROW(validate(s));
  s.mass = 0.0;
  EXPECT_THROW(validate(s), ConfigError);
  s = spinning_box(TargetMode::dynamic);
  s.inertia(0, 0) = -1.0;
  EXPECT_THROW(validate(s), ConfigError);
}

TEST(Target, OrientationStaysUnitOverAMillionSteps) {
  auto s = spinning_box(TargetMode::dynamic);
  s.angular_velocity = Vec3(0.6, 0.05, 0.4);
  for (int k = 0; k < 1000000; ++k) s = propagate_pose(s, 2e-5);
  EXPECT_NEAR(s.orientation.norm(), 1.0, 1e-12);
  auto kin = spinning_box(TargetMode::kinematic);
  for (int k = 0; k < 1000000; ++k) kin = propagate_pose(kin, 2e-5);
  EXPECT_NEAR(kin.orientation.norm(), 1.0, 1e-12);
}
