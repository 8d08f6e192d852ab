#include "tethercap/target.hpp"

#include <cmath>

#include <Eigen/Cholesky>

namespace tethercap {

Quat rotation_increment(const Vec3& angular_velocity, double dt) {
  const double angle = angular_velocity.norm() * dt;
  if (angle == 0.0) return Quat::Identity();
  return Quat(Eigen::AngleAxisd(angle, angular_velocity.normalized()));
}

TargetBodyState propagate_pose(TargetBodyState state, double dt) {
  if (state.mode == TargetMode::dynamic) {
    state.linear_velocity += state.force / state.mass * dt;
    // Integrate world angular momentum, then recover w with the inertia at
    // the new attitude so torque-free spin keeps L exactly.
    const Vec3 momentum = state.world_inertia() * state.angular_velocity + state.torque * dt;
    const Vec3 omega_mid = state.world_inertia().ldlt().solve(momentum);
    state.orientation = (rotation_increment(omega_mid, dt) * state.orientation).normalized();
    state.angular_velocity = state.world_inertia().ldlt().solve(momentum);
  } else {
    state.orientation =
        (rotation_increment(state.angular_velocity, dt) * state.orientation).normalized();
  }
  state.position += state.linear_velocity * dt;
  state.force.setZero();
  state.torque.setZero();
  return state;
}

void apply_wrench(TargetBodyState& state, const Vec3& force, const Vec3& world_point) {
  if (state.mode != TargetMode::dynamic) {
    ++state.ignored_wrenches;
    return;
  }
  state.force += force;
  state.torque += (world_point - state.position).cross(force);
}

Vec3 angular_momentum(const TargetBodyState& state) {
  return state.position.cross(state.mass * state.linear_velocity) +
         state.world_inertia() * state.angular_velocity;
}

double kinetic_energy(const TargetBodyState& state) {
  return 0.5 * state.mass * state.linear_velocity.squaredNorm() +
         0.5 * state.angular_velocity.dot(state.world_inertia() * state.angular_velocity);
}

void validate(const TargetBodyState& state) {
  if (std::abs(state.orientation.norm() - 1.0) > 1e-9)
    throw ConfigError("orientation must be a unit quaternion", "target.orientation");
  if (!state.position.allFinite() || !state.linear_velocity.allFinite() ||
      !state.angular_velocity.allFinite())
    throw ConfigError("state must be finite", "target");
  if (state.mode == TargetMode::dynamic) {
    if (!(state.mass > 0.0)) throw ConfigError("must be > 0 in dynamic mode", "target.mass");
    if (!state.inertia.isApprox(state.inertia.transpose(), 1e-12))
      throw ConfigError("must be symmetric", "target.inertia");
    Eigen::LLT<Mat3> llt(state.inertia);
    if (llt.info() != Eigen::Success)
      throw ConfigError("must be positive definite", "target.inertia");
  }
}

}  // namespace tethercap
