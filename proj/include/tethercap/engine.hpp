#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "tethercap/collision.hpp"
#include "tethercap/contact.hpp"
#include "tethercap/target.hpp"
#include "tethercap/tether.hpp"
#include "tethercap/types.hpp"

namespace tethercap {

enum class Scheme { semi_implicit_euler, rk4 };

struct IntegratorConfig {
  double dt = 8e-6;  // s
  Scheme scheme = Scheme::semi_implicit_euler;
  double duration = 6.0;  // s
  bool stability_check = true;

  /// Number of fixed steps covering `duration`.
  std::int64_t step_count() const;
  bool operator==(const IntegratorConfig&) const = default;
};

/// Largest step allowed by the stiffness bound 0.2 / omega_max.
double stable_step_bound(const TetherNetwork& net);

/// Thresholds that turn contact state into a capture verdict.
struct CaptureCriteria {
  double wrap_threshold = 0.5;   // fraction of hull faces touched at once
  double speed_threshold = 0.5;  // m/s, every robot relative to the target
  double hold_time = 0.5;        // s both must persist
  double grace_period = 2.0;     // s simulated after capture before stopping
  bool terminate_on_capture = true;

  void validate() const;
  bool operator==(const CaptureCriteria&) const = default;
};

struct CaptureMetrics {
  std::optional<double> first_contact_time;
  int faces_in_contact_max = 0;
  double wrap_score = 0.0;      // latest observation
  double max_wrap_score = 0.0;
  std::vector<double> robot_relative_speed;  // latest observation, per robot
  bool captured = false;
  std::optional<double> capture_time;
};

/// What the capture tracker needs from one instant.
struct CaptureObservation {
  double time = 0.0;
  std::vector<int> faces_in_contact;  // hull face ids, any order, may repeat
  std::vector<double> robot_speeds;   // relative to the target surface
};

/// Incremental capture evaluation over a time-ordered observation stream.
class CaptureTracker {
 public:
  CaptureTracker(CaptureCriteria criteria, int face_count);

  void observe(const CaptureObservation& obs);
  const CaptureMetrics& metrics() const { return metrics_; }
  /// True once capture happened and the grace period has elapsed.
  bool finished(double time) const;

 private:
  CaptureCriteria criteria_;
  int face_count_;
  CaptureMetrics metrics_;
  std::optional<double> window_start_;
};

CaptureMetrics evaluate_capture(std::span<const CaptureObservation> history,
                                const CaptureCriteria& criteria, int face_count);

/// Static description of the simulated system.
struct Model {
  TetherNetwork net;
  ConvexPolyhedron hull;
  ContactParams contact;
  AeroEnvironment aero;
  Vec3 gravity = Vec3::Zero();
  GjkSettings gjk;
};

struct SimState {
  std::int64_t step = 0;
  double time = 0.0;
  NodeArray x;
  NodeArray v;
  TargetBodyState target;
  std::map<int, ContactMemory> contacts;  // node id -> active contact
  Diagnostics diagnostics;
};

/// Result of one step: contacts resolved at the start-of-step state plus
/// registry changes.
struct StepOutput {
  std::vector<ContactEvent> contacts;  // ascending node id
  std::vector<int> begun;
  std::vector<int> ended;
};

struct EnergyBreakdown {
  double node_kinetic = 0.0;
  double target_kinetic = 0.0;  // zero for a kinematic target
  double tether_elastic = 0.0;
  double contact_elastic = 0.0;

  double total() const { return node_kinetic + target_kinetic + tether_elastic + contact_elastic; }
};

/// Fixed-step integrator for tether nodes and the target. Each step
/// assembles tension and drag, runs broad and narrow phase against the hull,
/// resolves contacts, integrates, then moves the target.
class Simulator {
 public:
  Simulator(Model model, IntegratorConfig config);

  const Model& model() const { return model_; }
  const IntegratorConfig& config() const { return config_; }

  SimState initial_state(const TargetBodyState& target) const;

  /// Advances `state` by one step in place.
  void advance(SimState& state, StepOutput* out = nullptr) const;
  SimState step(SimState state, StepOutput* out = nullptr) const {
    advance(state, out);
    return state;
  }

  /// Contacts for the given state without advancing it.
  std::vector<ContactEvent> contacts(const SimState& state) const;

  EnergyBreakdown energy(const SimState& state) const;
  Vec3 linear_momentum(const SimState& state) const;
  Vec3 angular_momentum(const SimState& state) const;

  CaptureObservation observe(const SimState& state,
                             std::span<const ContactEvent> contacts) const;

 private:
  struct Evaluation {
    NodeArray force;
    Vec3 target_force = Vec3::Zero();
    Vec3 target_torque = Vec3::Zero();
    std::vector<ContactResolution> resolved;
    Diagnostics diag;
  };

  void evaluate(const NodeArray& x, const NodeArray& v, const TargetBodyState& target,
                const std::map<int, ContactMemory>& registry, std::int64_t step, double time,
                bool with_friction, Evaluation& out) const;
  NodeArray accelerations(const Evaluation& eval) const;
  void check_finite(const SimState& state) const;

  Model model_;
  IntegratorConfig config_;
  Eigen::VectorXd inv_mass_;
  Eigen::VectorXd radius_;
};

}  // namespace tethercap
