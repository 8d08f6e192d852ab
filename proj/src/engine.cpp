#include "tethercap/engine.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace tethercap {

std::int64_t IntegratorConfig::step_count() const {
  return static_cast<std::int64_t>(std::llround(duration / dt));
}

double stable_step_bound(const TetherNetwork& net) {
  const double omega = net.max_element_frequency();
  return omega > 0.0 ? 0.2 / omega : std::numeric_limits<double>::infinity();
}

void CaptureCriteria::validate() const {
  if (!(wrap_threshold >= 0.0 && wrap_threshold <= 1.0))
    throw ConfigError("must be in [0, 1]", "capture.wrap_threshold");
  if (!(speed_threshold > 0.0)) throw ConfigError("must be > 0", "capture.speed_threshold");
  if (!(hold_time >= 0.0)) throw ConfigError("must be >= 0", "capture.hold_time");
  if (!(grace_period >= 0.0)) throw ConfigError("must be >= 0", "capture.grace_period");
}

// ---------------------------------------------------------------------------
// Capture tracking

CaptureTracker::CaptureTracker(CaptureCriteria criteria, int face_count)
    : criteria_(criteria), face_count_(face_count) {}

void CaptureTracker::observe(const CaptureObservation& obs) {
  std::vector<int> faces = obs.faces_in_contact;
  std::sort(faces.begin(), faces.end());
  faces.erase(std::unique(faces.begin(), faces.end()), faces.end());
  const int touched = static_cast<int>(faces.size());

  if (touched > 0 && !metrics_.first_contact_time) metrics_.first_contact_time = obs.time;
  metrics_.faces_in_contact_max = std::max(metrics_.faces_in_contact_max, touched);
  metrics_.wrap_score = face_count_ > 0 ? static_cast<double>(touched) / face_count_ : 0.0;
  metrics_.max_wrap_score = std::max(metrics_.max_wrap_score, metrics_.wrap_score);
  metrics_.robot_relative_speed = obs.robot_speeds;

  if (metrics_.captured) return;
  const bool wrapped = touched > 0 && metrics_.wrap_score >= criteria_.wrap_threshold;
  const bool settled = std::all_of(obs.robot_speeds.begin(), obs.robot_speeds.end(),
                                   [&](double s) { return s < criteria_.speed_threshold; });
  if (!(wrapped && settled)) {
    window_start_.reset();
    return;
  }
  if (!window_start_) window_start_ = obs.time;
  // Half a nanosecond of slack absorbs step-count rounding in `time`.
  if (obs.time - *window_start_ >= criteria_.hold_time - 5e-10) {
    metrics_.captured = true;
    metrics_.capture_time = obs.time;
  }
}

bool CaptureTracker::finished(double time) const {
  return metrics_.captured && criteria_.terminate_on_capture &&
         time >= *metrics_.capture_time + criteria_.grace_period - 5e-10;
}

CaptureMetrics evaluate_capture(std::span<const CaptureObservation> history,
                                const CaptureCriteria& criteria, int face_count) {
  CaptureTracker tracker(criteria, face_count);
  for (const auto& obs : history) tracker.observe(obs);
  return tracker.metrics();
}

// ---------------------------------------------------------------------------
// Simulator

Simulator::Simulator(Model model, IntegratorConfig config)
    : model_(std::move(model)), config_(config) {
  if (!(config_.dt > 0.0)) throw ConfigError("must be > 0", "integrator.dt");
  const auto& nodes = model_.net.nodes();
  inv_mass_.resize(static_cast<Eigen::Index>(nodes.size()));
  radius_.resize(static_cast<Eigen::Index>(nodes.size()));
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    inv_mass_[k] = 1.0 / nodes[k].mass;
    radius_[k] = nodes[k].radius;
  }
}

SimState Simulator::initial_state(const TargetBodyState& target) const {
  SimState s;
  s.x = model_.net.positions();
  s.v = model_.net.velocities();
  s.target = target;
  s.target.force.setZero();
  s.target.torque.setZero();
  return s;
}

void Simulator::evaluate(const NodeArray& x, const NodeArray& v, const TargetBodyState& target,
                         const std::map<int, ContactMemory>& registry, std::int64_t step,
                         double time, bool with_friction, Evaluation& out) const {
  out.diag = Diagnostics{};
  out.force = assemble_internal_forces(model_.net, x, v, model_.aero, &out.diag);
  out.target_force.setZero();
  out.target_torque.setZero();
  out.resolved.clear();

  ContactQuery query;
  query.pose = target;
  const Quat to_body = target.orientation.conjugate();
  for (int id : broad_phase(x, radius_, model_.hull, target)) {
    query.center = x.col(id);
    query.radius = radius_[id];
    const ContactManifold m = gjk_distance(query, model_.hull, model_.gjk);
    if (m.fallback) ++out.diag.gjk_fallbacks;
    if (!m.intersecting) continue;

    std::optional<ContactMemory> memory;
    if (auto it = registry.find(id); it != registry.end()) memory = it->second;
    ContactResolution res =
        resolve_contact(m, id, v.col(id), target, model_.contact, memory, step, time);
    res.event.face = model_.hull.nearest_face_by_normal(to_body * m.contact_normal);
    if (res.normal.clamped) ++out.diag.clamped_normal_forces;
    if (res.born_separating || res.normal.invalid_rate) ++out.diag.invalid_compression_rates;

    // The reaction acts on the target along the same line of action as the
    // node force, which keeps total angular momentum exact.
    const Vec3 f = with_friction ? res.event.total_force() : res.event.normal_force;
    out.force.col(id) += f;
    out.target_force -= f;
    out.target_torque += (x.col(id) - target.position).cross(-f);
    out.resolved.push_back(std::move(res));
  }
}

NodeArray Simulator::accelerations(const Evaluation& eval) const {
  NodeArray a = eval.force * inv_mass_.asDiagonal();
  if (!model_.gravity.isZero(0.0)) a.colwise() += model_.gravity;
  return a;
}

void Simulator::check_finite(const SimState& state) const {
  for (Eigen::Index k = 0; k < state.x.cols(); ++k) {
    if (!state.x.col(k).allFinite() || !state.v.col(k).allFinite()) {
      std::ostringstream msg;
      msg << "non-finite state at step " << state.step << ", node " << k << ": x = ["
          << state.x.col(k).transpose() << "], v = [" << state.v.col(k).transpose() << "]";
      throw InstabilityError(msg.str(), state.step, static_cast<int>(k));
    }
  }
  const auto& t = state.target;
  if (!t.position.allFinite() || !t.linear_velocity.allFinite() ||
      !t.angular_velocity.allFinite() || !t.orientation.coeffs().allFinite()) {
    std::ostringstream msg;
    msg << "non-finite target state at step " << state.step;
    throw InstabilityError(msg.str(), state.step, -1);
  }
}

void Simulator::advance(SimState& state, StepOutput* out) const {
  const double dt = config_.dt;
  Evaluation first;
  const bool semi_implicit = config_.scheme == Scheme::semi_implicit_euler;
  evaluate(state.x, state.v, state.target, state.contacts, state.step, state.time, !semi_implicit,
           first);
  state.diagnostics += first.diag;

  std::map<int, ContactMemory> registry;
  for (const auto& r : first.resolved) registry.emplace(r.event.node, r.memory);

  if (semi_implicit) {
    state.v += accelerations(first) * dt;
    // Friction is stiff near zero slip (k_t times the normal load), far
    // beyond what an explicit step on a gram-scale node can carry. It is
    // taken implicitly against the updated velocity instead.
    for (auto& r : first.resolved) {
      auto& ev = r.event;
      const int id = ev.node;
      const Vec3 rel = state.v.col(id) - surface_velocity(state.target, ev.point);
      const Vec3 trial = rel - rel.dot(ev.normal) * ev.normal;
      ev.friction_force =
          implicit_friction_force(model_.contact, ev.normal_force.norm(), trial, dt * inv_mass_[id]);
      state.v.col(id) += ev.friction_force * (dt * inv_mass_[id]);
      first.target_force -= ev.friction_force;
      first.target_torque += (state.x.col(id) - state.target.position).cross(-ev.friction_force);
    }
    state.x += state.v * dt;
    if (state.target.mode == TargetMode::dynamic) {
      state.target.force += first.target_force + state.target.mass * model_.gravity;
      state.target.torque += first.target_torque;
    }
    state.target = propagate_pose(state.target, dt);
  } else {
    // Contact memory is frozen at its stage-1 value for the whole step.
    const TargetBodyState half = propagate_pose(state.target, 0.5 * dt);
    const TargetBodyState full = propagate_pose(state.target, dt);
    Evaluation stage;
    const NodeArray k1x = state.v;
    const NodeArray k1v = accelerations(first);
    NodeArray xs = state.x + 0.5 * dt * k1x;
    NodeArray vs = state.v + 0.5 * dt * k1v;
    evaluate(xs, vs, half, registry, state.step, state.time + 0.5 * dt, true, stage);
    const NodeArray k2x = vs;
    const NodeArray k2v = accelerations(stage);
    xs = state.x + 0.5 * dt * k2x;
    vs = state.v + 0.5 * dt * k2v;
    evaluate(xs, vs, half, registry, state.step, state.time + 0.5 * dt, true, stage);
    const NodeArray k3x = vs;
    const NodeArray k3v = accelerations(stage);
    xs = state.x + dt * k3x;
    vs = state.v + dt * k3v;
    evaluate(xs, vs, full, registry, state.step, state.time + dt, true, stage);
    const NodeArray k4x = vs;
    const NodeArray k4v = accelerations(stage);
    state.x += dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    state.v += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    state.target = full;
  }
  // A kinematic target takes no reaction; every dropped contact wrench is counted.
  if (state.target.mode == TargetMode::kinematic)
    state.diagnostics.ignored_wrenches += static_cast<std::int64_t>(first.resolved.size());

  if (out) {
    out->contacts.clear();
    out->begun.clear();
    out->ended.clear();
    for (auto& r : first.resolved) out->contacts.push_back(r.event);
    for (const auto& [id, mem] : registry)
      if (!state.contacts.contains(id)) out->begun.push_back(id);
    for (const auto& [id, mem] : state.contacts)
      if (!registry.contains(id)) out->ended.push_back(id);
  }
  state.contacts = std::move(registry);
  ++state.step;
  state.time = static_cast<double>(state.step) * dt;
  check_finite(state);
}

std::vector<ContactEvent> Simulator::contacts(const SimState& state) const {
  Evaluation eval;
  evaluate(state.x, state.v, state.target, state.contacts, state.step, state.time, true, eval);
  std::vector<ContactEvent> out;
  for (auto& r : eval.resolved) out.push_back(r.event);
  return out;
}

EnergyBreakdown Simulator::energy(const SimState& state) const {
  EnergyBreakdown e;
  for (Eigen::Index k = 0; k < state.v.cols(); ++k)
    e.node_kinetic += 0.5 * state.v.col(k).squaredNorm() / inv_mass_[k];
  if (state.target.mode == TargetMode::dynamic) e.target_kinetic = kinetic_energy(state.target);
  e.tether_elastic = tether_elastic_energy(model_.net, state.x);
  ContactQuery query;
  query.pose = state.target;
  for (int id : broad_phase(state.x, radius_, model_.hull, state.target)) {
    query.center = state.x.col(id);
    query.radius = radius_[id];
    const auto m = gjk_distance(query, model_.hull, model_.gjk);
    if (m.intersecting) e.contact_elastic += contact_elastic_energy(model_.contact, m.penetration_depth);
  }
  return e;
}

Vec3 Simulator::linear_momentum(const SimState& state) const {
  Vec3 p = Vec3::Zero();
  for (Eigen::Index k = 0; k < state.v.cols(); ++k) p += state.v.col(k) / inv_mass_[k];
  if (state.target.mode == TargetMode::dynamic) p += state.target.mass * state.target.linear_velocity;
  return p;
}

Vec3 Simulator::angular_momentum(const SimState& state) const {
  Vec3 l = Vec3::Zero();
  for (Eigen::Index k = 0; k < state.v.cols(); ++k)
    l += state.x.col(k).cross(state.v.col(k)) / inv_mass_[k];
  if (state.target.mode == TargetMode::dynamic) l += tethercap::angular_momentum(state.target);
  return l;
}

CaptureObservation Simulator::observe(const SimState& state,
                                      std::span<const ContactEvent> contacts) const {
  CaptureObservation obs;
  obs.time = state.time;
  for (const auto& c : contacts) obs.faces_in_contact.push_back(c.face);
  for (int id : model_.net.robots()) {
    const Vec3 rel = state.v.col(id) - surface_velocity(state.target, state.x.col(id));
    obs.robot_speeds.push_back(rel.norm());
  }
  return obs;
}

}  // namespace tethercap
