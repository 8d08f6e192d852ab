#include "tethercap/contact.hpp"

#include <algorithm>
#include <cmath>

namespace tethercap {

void ContactParams::validate() const {
  if (!(stiffness > 0.0)) throw ConfigError("must be > 0", "contact.stiffness");
  if (!(exponent > 0.0)) throw ConfigError("must be > 0", "contact.exponent");
  if (!(restitution > 0.0 && restitution <= 1.0))
    throw ConfigError("must be in (0, 1]", "contact.restitution");
  if (damping && !(*damping >= 0.0)) throw ConfigError("must be >= 0", "contact.damping");
  if (!(dynamic_friction >= 0.0)) throw ConfigError("must be >= 0", "contact.dynamic_friction");
  if (!(static_friction >= dynamic_friction))
    throw ConfigError("contact.static_friction must be >= contact.dynamic_friction",
                      "contact.static_friction, contact.dynamic_friction");
  if (!(stribeck_velocity > 0.0)) throw ConfigError("must be > 0", "contact.stribeck_velocity");
  if (!(stribeck_exponent > 0.0)) throw ConfigError("must be > 0", "contact.stribeck_exponent");
  if (!(tanh_slope > 0.0)) throw ConfigError("must be > 0", "contact.tanh_slope");
  if (!(min_impact_speed > 0.0)) throw ConfigError("must be > 0", "contact.min_impact_speed");
}

NormalForce normal_force(const ContactParams& params, double depth, double depth_rate,
                         double impact_speed) {
  NormalForce out;
  if (depth <= 0.0) return out;
  const double power = std::pow(depth, params.exponent);
  double damping = 0.0;
  if (params.damping) {
    damping = *params.damping;
  } else if (impact_speed > 0.0) {
    damping = hysteresis_factor(params.stiffness, params.restitution, impact_speed) * power;
  } else {
    out.invalid_rate = true;
  }
  const double f = params.stiffness * power + damping * depth_rate;
  if (f < 0.0) {
    out.clamped = true;
    return out;
  }
  out.magnitude = f;
  return out;
}

Vec3 implicit_friction_force(const ContactParams& p, double normal, const Vec3& trial_slip,
                             double dt_over_mass) {
  const double trial = trial_slip.norm();
  if (trial == 0.0 || normal <= 0.0) return Vec3::Zero();

  // g(s) = |f_t| at slip speed s, with its derivative in *slope.
  const double excess = p.static_friction - p.dynamic_friction;
  auto g = [&](double s, double* slope) {
    const double rp = std::pow(s / p.stribeck_velocity, p.stribeck_exponent);
    const double decay = std::exp(-rp);
    const double mu = p.dynamic_friction + excess * decay;
    const double th = std::tanh(p.tanh_slope * s);
    const double dmu = s > 0.0 ? -excess * decay * p.stribeck_exponent * rp / s : 0.0;
    *slope = normal * (dmu * th + mu * p.tanh_slope * (1.0 - th * th));
    return normal * mu * th;
  };

  // The final slip s solves h(s) = s + dt/m g(s) - trial = 0 on [0, trial],
  // where h(0) < 0 <= h(trial). Newton, falling back to bisection whenever
  // the step leaves the bracket.
  double lo = 0.0;
  double hi = trial;
  double s = trial;
  double slope = 0.0;
  for (int it = 0; it < 100; ++it) {
    const double h = s + dt_over_mass * g(s, &slope) - trial;
    if (h < 0.0) lo = s;
    else hi = s;
    if (std::abs(h) <= 1e-14 * trial || hi - lo <= 1e-15 * trial) break;
    const double dh = 1.0 + dt_over_mass * slope;
    double next = dh > 0.0 ? s - h / dh : lo;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    s = next;
  }
  return -(g(s, &slope) / trial) * trial_slip;
}

ContactResolution resolve_contact(const ContactManifold& manifold, int node,
                                  const Vec3& node_velocity, const TargetBodyState& target,
                                  const ContactParams& params,
                                  const std::optional<ContactMemory>& memory,
                                  std::int64_t step, double time) {
  ContactResolution out;
  const Vec3& n = manifold.contact_normal;
  const Vec3 relative = node_velocity - surface_velocity(target, manifold.contact_point);
  const double normal_speed = relative.dot(n);
  const double depth_rate = -normal_speed;

  if (memory) {
    out.memory = *memory;
  } else {
    out.memory.activation_step = step;
    out.born_separating = depth_rate <= 0.0;
    out.memory.impact_speed = std::max(depth_rate, params.min_impact_speed);
  }

  out.normal = normal_force(params, manifold.penetration_depth, depth_rate,
                            out.memory.impact_speed);
  auto& ev = out.event;
  ev.node = node;
  ev.time = time;
  ev.depth = manifold.penetration_depth;
  ev.depth_rate = depth_rate;
  ev.impact_speed = out.memory.impact_speed;
  ev.point = manifold.contact_point;
  ev.normal = n;
  ev.slip_velocity = relative - normal_speed * n;
  ev.normal_force = out.normal.magnitude * n;
  ev.friction_force = friction_force(params, out.normal.magnitude, ev.slip_velocity);
  ev.face = manifold.face;
  return out;
}

}  // namespace tethercap
