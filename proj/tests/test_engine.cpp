#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "support.hpp"
#include "tethercap/engine.hpp"
#include "tethercap/run.hpp"
#include "tethercap/scenario.hpp"

using namespace tethercap;
using testing_support::drop_yaml;
using testing_support::minimal_yaml;

namespace {

// Two unit-mass robot nodes joined by one element, far from the target.
std::string two_body_yaml(double gap, double rest, double dt, const std::string& scheme,
                          bool stability_check = true) {
  return fmt::format(R"(
name: two_body
tether: {{youngs_modulus: 25.0e9, density: 1390.0, damping_ratio: 0.0}}
net:
  generator: explicit
  nodes:
    - {{position: [50.0, 0.0, 0.0], robot: true}}
    - {{position: [{}, 0.0, 0.0], robot: true}}
  elements:
    - {{i: 0, j: 1, rest_length: {}}}
robots: {{count: 2, mass: 1.0, radius: 0.05}}
initial_velocity: [0.0, 0.0, 0.0]
contact: {{stiffness: 500.0, static_friction: 0.7, dynamic_friction: 0.5}}
integrator: {{dt: {}, duration: {}, scheme: {}, stability_check: {}}}
output: {{interval: {}}}
)",
                     50.0 + gap, rest, dt, 4000 * dt, scheme, stability_check ? "true" : "false",
                     dt);
}

struct Bench {
  Scenario scenario;
  Simulator sim;
  SimState state;

  explicit Bench(Scenario s)
      : scenario(std::move(s)),
        sim(build_model(scenario), scenario.integrator),
        state(sim.initial_state(build_target(scenario))) {}
};

Bench bench(const std::string& yaml, std::vector<std::string> overrides = {}) {
  return Bench(parse_scenario(yaml, overrides));
}

double separation(const SimState& s) { return (s.x.col(1) - s.x.col(0)).norm(); }

// Time for a just-taut pair, opened at relative speed u, to swing out and
// come back to rest length: half an oscillator period.
double measured_half_period(const std::string& scheme, double k, double m_red, double& expected) {
  const double l0 = 1.0;
  expected = std::numbers::pi * std::sqrt(m_red / k);
  const double dt = 2.0 * expected / 1000.0;
  auto b = bench(two_body_yaml(l0, l0, dt, scheme));
  b.state.v.col(0) = Vec3(-0.05, 0, 0);
  b.state.v.col(1) = Vec3(0.05, 0, 0);
  double prev = separation(b.state) - l0;
  double prev_t = 0.0;
  for (int k = 0; k < 4000; ++k) {
    b.sim.advance(b.state);
    const double s = separation(b.state) - l0;
    if (k > 10 && prev > 0.0 && s <= 0.0) return prev_t + (b.state.time - prev_t) * prev / (prev - s);
    prev = s;
    prev_t = b.state.time;
  }
  return -1.0;
}

}  // namespace

TEST(Engine, ForceFreeMotionIsBallisticExactly) {
  // Small x net at rest length, aimed well clear of the target.
  auto b = bench(minimal_yaml("net: {nodes_total: 9, arm_length: 1.0, aim_offset: [40.0, 0.0, 0.0]}\n"));
  for (int k = 0; k < 200; ++k) {
    NodeArray expected = b.state.x;
    for (Eigen::Index j = 0; j < expected.cols(); ++j)
      expected.col(j) = expected.col(j) + b.state.v.col(j) * b.sim.config().dt;
    const NodeArray v0 = b.state.v;
    StepOutput out;
    b.sim.advance(b.state, &out);
    ASSERT_TRUE(out.contacts.empty());
    ASSERT_EQ(b.state.v, v0);
    ASSERT_EQ(b.state.x, expected) << "step " << k;
  }
  EXPECT_EQ(b.state.step, 200);
}

TEST(Engine, TwoBodyOscillatorPeriod) {
  const double l0 = 1.0;
  const double k = element_stiffness(TetherMaterial{}, l0);
  // Each robot carries its mass plus half the element's line mass.
  const double m = 1.0 + element_mass(TetherMaterial{}, l0) / 2.0;
  double expected = 0.0;
  const double half = measured_half_period("semi_implicit_euler", k, m / 2.0, expected);
  EXPECT_NEAR(half / expected, 1.0, 0.005);
  const double half_rk4 = measured_half_period("rk4", k, m / 2.0, expected);
  EXPECT_NEAR(half_rk4 / expected, 1.0, 0.005);
}

TEST(Engine, PairStaysTautAndConservesEnergyWithoutDamping) {
  auto b = bench(two_body_yaml(1.001, 1.0, 2e-5, "semi_implicit_euler"));
  const double e0 = b.sim.energy(b.state).total();
  for (int k = 0; k < 2000; ++k) b.sim.advance(b.state);
  // Symplectic Euler keeps the energy error bounded and small.
  EXPECT_NEAR(b.sim.energy(b.state).total(), e0, 1e-3 * e0);
}

TEST(Engine, ElasticBounceKeepsKineticEnergy) {
  auto b = bench(drop_yaml(1.0, 1e-5));
  const double before = b.sim.energy(b.state).node_kinetic;
  bool touched = false;
  while (b.state.time < 0.5) {
    StepOutput out;
    b.sim.advance(b.state, &out);
    touched = touched || !out.contacts.empty();
    if (touched && out.contacts.empty() && b.state.v(2, 0) > 0.0) break;
  }
  ASSERT_TRUE(touched);
  EXPECT_GT(b.state.v(2, 0), 0.0);
  EXPECT_NEAR(b.sim.energy(b.state).node_kinetic / before, 1.0, 0.01);
}

TEST(Engine, InelasticBounceLosesEnergy) {
  auto b = bench(drop_yaml(0.5, 1e-5));
  const double before = b.sim.energy(b.state).total();
  while (b.state.time < 0.5) b.sim.advance(b.state);
  const double after = b.sim.energy(b.state).total();
  EXPECT_LT(after, before);
  EXPECT_GT(b.state.v(2, 0), 0.0);
}

TEST(Engine, NonFiniteStateHaltsWithNodeAndStep) {
  auto b = bench(two_body_yaml(1.0, 1.0, 1e-4, "semi_implicit_euler"));
  b.state.v(1, 1) = std::numeric_limits<double>::quiet_NaN();
  try {
    b.sim.advance(b.state);
    FAIL() << "expected InstabilityError";
  } catch (const InstabilityError& e) {
    EXPECT_EQ(e.node(), 1);
    EXPECT_NE(std::string(e.what()).find("node 1"), std::string::npos) << e.what();
  }
}

TEST(Engine, RunReportsDivergenceWithPartialLogs) {
  // A stiff stretched pair stepped far past its stability bound.
  auto sc = parse_scenario(two_body_yaml(1.1, 1.0, 0.02, "semi_implicit_euler", false));
  sc.integrator.duration = 60.0;
  const auto r = run(sc);
  EXPECT_EQ(r.status, RunStatus::diverged);
  EXPECT_FALSE(r.failure.empty());
  EXPECT_FALSE(r.trajectory.empty());
  EXPECT_LT(r.final_time, 60.0);
}

TEST(Engine, DeterministicStepping) {
  const auto yaml = minimal_yaml(
      "net: {nodes_total: 41, arm_length: 2.0, hub_offset: 1.0}\n"
      "target: {angular_velocity_deg: [1.0, 0.5, 0.2]}\n");
  auto a = bench(yaml, {"integrator.duration=0.12"});
  auto b = bench(yaml, {"integrator.duration=0.12"});
  for (int k = 0; k < 15000; ++k) {
    a.sim.advance(a.state);
    b.sim.advance(b.state);
  }
  EXPECT_EQ(a.state.x, b.state.x);
  EXPECT_EQ(a.state.v, b.state.v);
  EXPECT_EQ(a.state.target.orientation.coeffs(), b.state.target.orientation.coeffs());
  EXPECT_FALSE(a.state.contacts.empty());
}

TEST(Engine, MomentumConservedWithDynamicTarget) {
  // A short net strikes a free-floating box: contact, friction and tether
  // forces all act, and every contact reaction goes to the target.
  auto b = bench(minimal_yaml(R"(
net: {nodes_total: 41, arm_length: 2.0, hub_offset: 1.0, aim_offset: [0.3, 0.0, 0.2]}
target: {mode: dynamic, mass: 50.0, angular_velocity_deg: [10.0, 5.0, 2.0]}
)"));
  const Vec3 p0 = b.sim.linear_momentum(b.state);
  const Vec3 l0 = b.sim.angular_momentum(b.state);
  int contact_steps = 0;
  for (int k = 0; k < 20000; ++k) {
    StepOutput out;
    b.sim.advance(b.state, &out);
    contact_steps += !out.contacts.empty();
  }
  ASSERT_GT(contact_steps, 1000);
  EXPECT_LT((b.sim.linear_momentum(b.state) - p0).norm() / p0.norm(), 1e-6);
  EXPECT_LT((b.sim.angular_momentum(b.state) - l0).norm() / l0.norm(), 1e-5);
  EXPECT_GT(b.state.target.linear_velocity.norm(), 0.0);
}

TEST(Engine, KinematicTargetRatesStayExact) {
  auto b = bench(minimal_yaml(
      "net: {nodes_total: 41, arm_length: 2.0, hub_offset: 1.0}\n"
      "target: {angular_velocity_deg: [1.0, 0.5, 0.2], linear_velocity: [0.0, 0.1, 0.0]}\n"));
  const Vec3 w0 = b.state.target.angular_velocity;
  const Vec3 v0 = b.state.target.linear_velocity;
  for (int k = 0; k < 15000; ++k) b.sim.advance(b.state);
  EXPECT_EQ(b.state.target.angular_velocity, w0);
  EXPECT_EQ(b.state.target.linear_velocity, v0);
  EXPECT_GT(b.state.diagnostics.ignored_wrenches, 0);
}

TEST(Engine, StabilityBoundMatchesHandValue) {
  // 121-node net, 6 m arms: l0 = 0.2 m, k = E A / l0, interior mass rho A l0.
  const auto sc = parse_scenario(minimal_yaml());
  const auto net = build_network(sc);
  const double a = std::numbers::pi * 0.25e-6;
  const double omega = std::sqrt((25e9 * a / 0.2) / (1390.0 * a * 0.2));
  EXPECT_NEAR(stable_step_bound(net), 0.2 / omega, 1e-12);
}

TEST(Engine, MissedTargetHasNoContacts) {
  auto sc = parse_scenario(minimal_yaml("net: {aim_offset: [30.0, 0.0, 0.0]}\n"));
  sc.integrator.duration = 0.4;
  const auto r = run(sc);
  EXPECT_EQ(r.status, RunStatus::completed);
  EXPECT_TRUE(r.events.empty());
  EXPECT_FALSE(r.metrics.captured);
  EXPECT_EQ(r.metrics.max_wrap_score, 0.0);
  EXPECT_FALSE(r.metrics.first_contact_time.has_value());
}

// ---------------------------------------------------------------------------
// Capture criterion

namespace {

CaptureObservation obs(double t, std::vector<int> faces, std::vector<double> speeds) {
  return CaptureObservation{t, std::move(faces), std::move(speeds)};
}

}  // namespace

TEST(Capture, NeverTouchedMeansNoCapture) {
  CaptureTracker tr(CaptureCriteria{}, 6);
  for (int k = 0; k <= 300; ++k) tr.observe(obs(k * 0.01, {}, {0.0, 0.0, 0.0, 0.0}));
  EXPECT_FALSE(tr.metrics().captured);
  EXPECT_EQ(tr.metrics().wrap_score, 0.0);
  EXPECT_EQ(tr.metrics().max_wrap_score, 0.0);
  EXPECT_FALSE(tr.metrics().first_contact_time);
}

TEST(Capture, EnvelopedAtRestCapturesAfterHold) {
  CaptureTracker tr(CaptureCriteria{}, 6);
  for (int k = 0; k <= 100; ++k) tr.observe(obs(1.0 + k * 0.01, {0, 1, 2, 3, 4, 5}, {0, 0, 0, 0}));
  ASSERT_TRUE(tr.metrics().captured);
  EXPECT_NEAR(*tr.metrics().capture_time, 1.5, 1e-12);
  EXPECT_EQ(tr.metrics().wrap_score, 1.0);
  EXPECT_FALSE(tr.finished(3.49));
  EXPECT_TRUE(tr.finished(3.5));
}

TEST(Capture, ThreeOfSixFacesIsEnoughButTwoIsNot) {
  CaptureTracker three(CaptureCriteria{}, 6);
  CaptureTracker two(CaptureCriteria{}, 6);
  for (int k = 0; k <= 60; ++k) {
    three.observe(obs(k * 0.01, {2, 4, 4, 0, 2}, {0.1}));
    two.observe(obs(k * 0.01, {2, 4, 4, 2}, {0.1}));
  }
  EXPECT_TRUE(three.metrics().captured);
  EXPECT_EQ(three.metrics().faces_in_contact_max, 3);
  EXPECT_FALSE(two.metrics().captured);
  EXPECT_NEAR(two.metrics().max_wrap_score, 2.0 / 6.0, 1e-15);
}

TEST(Capture, FastRobotOrBrokenWindowResetsTheHold) {
  CaptureTracker tr(CaptureCriteria{}, 6);
  for (int k = 0; k <= 40; ++k) tr.observe(obs(k * 0.01, {0, 1, 2}, {0.1, 0.2}));
  tr.observe(obs(0.41, {0, 1, 2}, {0.1, 0.6}));  // one robot still swinging
  for (int k = 42; k <= 80; ++k) tr.observe(obs(k * 0.01, {0, 1, 2}, {0.1, 0.2}));
  EXPECT_FALSE(tr.metrics().captured);
  for (int k = 81; k <= 92; ++k) tr.observe(obs(k * 0.01, {0, 1, 2}, {0.1, 0.2}));
  ASSERT_TRUE(tr.metrics().captured);
  EXPECT_NEAR(*tr.metrics().capture_time, 0.92, 1e-12);
}

TEST(Capture, BatchEvaluationMatchesTracker) {
  std::vector<CaptureObservation> h;
  for (int k = 0; k <= 100; ++k)
    h.push_back(obs(k * 0.01, k > 20 ? std::vector<int>{0, 3, 5} : std::vector<int>{1}, {0.3}));
  const auto m = evaluate_capture(h, CaptureCriteria{}, 6);
  EXPECT_TRUE(m.captured);
  EXPECT_NEAR(*m.capture_time, 0.71, 1e-12);
  EXPECT_NEAR(*m.first_contact_time, 0.0, 0.0);
}

TEST(Capture, CriteriaValidation) {
  CaptureCriteria c;
  c.wrap_threshold = 1.5;
  EXPECT_THROW(c.validate(), ConfigError);
  c = CaptureCriteria{};
  c.hold_time = -1.0;
  EXPECT_THROW(c.validate(), ConfigError);
}
