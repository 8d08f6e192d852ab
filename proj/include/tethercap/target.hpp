#pragma once

#include "tethercap/types.hpp"

namespace tethercap {

enum class TargetMode { kinematic, dynamic };

/// Rigid target pose and rates. Angular velocity is expressed in the world
/// frame. Mass and inertia only matter in dynamic mode.
struct TargetBodyState {
  Vec3 position = Vec3::Zero();
  Quat orientation = Quat::Identity();
  Vec3 linear_velocity = Vec3::Zero();
  Vec3 angular_velocity = Vec3::Zero();  // rad/s, world frame
  TargetMode mode = TargetMode::kinematic;
  double mass = 1.0;
  Mat3 inertia = Mat3::Identity();  // body frame, about the centre of mass

  // Wrench accumulated since the last propagate_pose (dynamic mode).
  Vec3 force = Vec3::Zero();
  Vec3 torque = Vec3::Zero();
  std::int64_t ignored_wrenches = 0;

  Mat3 rotation() const { return orientation.toRotationMatrix(); }
  Mat3 world_inertia() const {
    const Mat3 r = rotation();
    return r * inertia * r.transpose();
  }
  Vec3 to_body(const Vec3& world_point) const {
    return orientation.conjugate() * (world_point - position);
  }
  Vec3 to_world(const Vec3& body_point) const { return orientation * body_point + position; }
};

/// Rotation by angle |w| dt about w, as a unit quaternion.
Quat rotation_increment(const Vec3& angular_velocity, double dt);

/// Advances the pose by dt. Kinematic targets keep v and w fixed; dynamic
/// targets first apply the accumulated wrench (Newton-Euler, angular momentum
/// form) and then move with the updated rates. The wrench is cleared.
TargetBodyState propagate_pose(TargetBodyState state, double dt);

/// Velocity of the body-fixed material point currently at `world_point`.
inline Vec3 surface_velocity(const TargetBodyState& state, const Vec3& world_point) {
  return state.linear_velocity + state.angular_velocity.cross(world_point - state.position);
}

/// Accumulates a force applied at `world_point`. Ignored (and counted) for a
/// kinematic target.
void apply_wrench(TargetBodyState& state, const Vec3& force, const Vec3& world_point);

/// Angular momentum about the world origin.
Vec3 angular_momentum(const TargetBodyState& state);

double kinetic_energy(const TargetBodyState& state);

void validate(const TargetBodyState& state);

}  // namespace tethercap
