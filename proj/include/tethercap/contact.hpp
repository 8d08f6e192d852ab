#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

#include "tethercap/collision.hpp"
#include "tethercap/target.hpp"
#include "tethercap/types.hpp"

namespace tethercap {

/// Normal (Hertz with hysteresis damping) and tangential (Stribeck-regularised
/// Coulomb) contact constants.
struct ContactParams {
  double stiffness = 500.0;  // K, N/m^exponent
  double exponent = 1.5;
  double restitution = 0.5;
  /// Constant d_c in N s/m; when unset d_c = mu delta^n with the hysteresis
  /// factor mu derived from the restitution coefficient.
  std::optional<double> damping;
  double static_friction = 0.7;
  double dynamic_friction = 0.5;
  double stribeck_velocity = 0.001;  // v_s, m/s
  double stribeck_exponent = 2.0;    // p
  double tanh_slope = 10000.0;       // k_t, s/m
  /// Floor on the compression-start speed used by the hysteresis factor.
  double min_impact_speed = 1e-3;  // m/s

  void validate() const;
  bool operator==(const ContactParams&) const = default;
};

/// Hertz K for two elastic spheres. Pass +inf for R_j to get the sphere-on-
/// flat limit and +inf for E_j for a rigid partner.
template <typename Scalar>
Scalar hertz_stiffness(Scalar radius_i, Scalar radius_j, Scalar poisson_i, Scalar youngs_i,
                       Scalar poisson_j, Scalar youngs_j) {
  using std::sqrt;
  const Scalar pi = std::numbers::pi_v<Scalar>;
  const Scalar h_i = (Scalar(1) - poisson_i * poisson_i) / (pi * youngs_i);
  const Scalar h_j = (Scalar(1) - poisson_j * poisson_j) / (pi * youngs_j);
  const Scalar effective = std::isinf(radius_j)   ? radius_i
                           : std::isinf(radius_i) ? radius_j
                                                  : radius_i * radius_j / (radius_i + radius_j);
  return Scalar(4) / (Scalar(3) * pi * (h_i + h_j)) * sqrt(effective);
}

/// Hysteresis factor 3K(1 - e^2) / (4 v0) for compression-start speed v0.
template <typename Scalar>
Scalar hysteresis_factor(Scalar stiffness, Scalar restitution, Scalar impact_speed) {
  return Scalar(3) * stiffness * (Scalar(1) - restitution * restitution) /
         (Scalar(4) * impact_speed);
}

struct NormalForce {
  double magnitude = 0.0;
  bool clamped = false;       // damping tried to pull
  bool invalid_rate = false;  // compression-start speed was not positive
};

/// f_N = K delta^n + d_c delta_dot, never negative. delta_dot > 0 while the
/// sphere moves deeper.
NormalForce normal_force(const ContactParams& params, double depth, double depth_rate,
                         double impact_speed);

/// Anderson-regularised Stribeck friction, opposing the tangential slip.
template <typename Scalar>
Vector3<Scalar> friction_force(Scalar normal, const Vector3<Scalar>& slip, Scalar static_mu,
                               Scalar dynamic_mu, Scalar stribeck_velocity,
                               Scalar stribeck_exponent, Scalar tanh_slope) {
  using std::exp;
  using std::pow;
  using std::tanh;
  const Scalar speed = slip.norm();
  if (speed == Scalar(0)) return Vector3<Scalar>::Zero();
  const Scalar mu =
      dynamic_mu + (static_mu - dynamic_mu) * exp(-pow(speed / stribeck_velocity, stribeck_exponent));
  return -(normal * mu * tanh(tanh_slope * speed) / speed) * slip;
}

inline Vec3 friction_force(const ContactParams& p, double normal, const Vec3& slip) {
  return friction_force<double>(normal, slip, p.static_friction, p.dynamic_friction,
                                p.stribeck_velocity, p.stribeck_exponent, p.tanh_slope);
}

/// Friction for a backward-Euler velocity update. `trial_slip` is the slip
/// the node would reach this step without friction and `dt_over_mass` its
/// dt/m. Returns the force that equals the friction law evaluated at the
/// slip it produces, so friction can stop a node but never reverse it.
Vec3 implicit_friction_force(const ContactParams& p, double normal, const Vec3& trial_slip,
                             double dt_over_mass);

/// Stored between steps for each active contact.
struct ContactMemory {
  double impact_speed = 0.0;     // compression-start penetration rate, m/s
  std::int64_t activation_step = 0;
};

struct ContactEvent {
  int node = -1;
  double time = 0.0;
  double depth = 0.0;        // delta, m
  double depth_rate = 0.0;   // delta_dot, m/s
  double impact_speed = 0.0;  // compression-start rate, m/s
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::UnitX();
  Vec3 slip_velocity = Vec3::Zero();  // tangential relative velocity
  Vec3 normal_force = Vec3::Zero();
  Vec3 friction_force = Vec3::Zero();
  int face = -1;  // hull face carrying the contact

  Vec3 total_force() const { return normal_force + friction_force; }
};

struct ContactResolution {
  ContactEvent event;
  ContactMemory memory;
  NormalForce normal;
  bool born_separating = false;  // new contact already moving outward
};

/// Turns an overlapping manifold into contact forces on the node. Relative
/// velocity is measured against the body-fixed surface point, so a spinning
/// target drags the node tangentially. `memory` carries the compression-start
/// rate of an already active contact; a new contact records its own.
ContactResolution resolve_contact(const ContactManifold& manifold, int node,
                                  const Vec3& node_velocity, const TargetBodyState& target,
                                  const ContactParams& params,
                                  const std::optional<ContactMemory>& memory,
                                  std::int64_t step, double time);

/// Elastic energy stored in a Hertz contact at depth delta: K delta^(n+1)/(n+1).
inline double contact_elastic_energy(const ContactParams& p, double depth) {
  return p.stiffness * std::pow(depth, p.exponent + 1.0) / (p.exponent + 1.0);
}

}  // namespace tethercap
