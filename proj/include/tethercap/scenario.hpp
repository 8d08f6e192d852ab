#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tethercap/collision.hpp"
#include "tethercap/contact.hpp"
#include "tethercap/engine.hpp"
#include "tethercap/target.hpp"
#include "tethercap/tether.hpp"

namespace tethercap {

inline constexpr std::string_view kScenarioSchema = "tethercap-scenario/1";

/// Four straight arms around a shared hub, robots at the arm tips.
struct XConfigSpec {
  int arm_count = 4;
  int nodes_total = 121;
  double arm_length = 6.0;        // m, hub to robot
  double hub_offset = 3.0;        // m, hub start distance upstream of the target centre
  std::optional<Vec3> plane_normal;  // defaults to the approach direction
  double arm_azimuth_deg = 0.0;   // rotation of the arms inside the plane
  Vec3 aim_offset = Vec3::Zero();  // m, lateral shift of the hub

  bool operator==(const XConfigSpec&) const = default;
};

struct ExplicitNode {
  Vec3 position = Vec3::Zero();
  bool robot = false;
  bool operator==(const ExplicitNode&) const = default;
};

struct ExplicitElement {
  int i = 0;
  int j = 0;
  std::optional<double> rest_length;  // defaults to the initial distance
  bool operator==(const ExplicitElement&) const = default;
};

struct NetSpec {
  std::string generator = "x_configuration";  // or "explicit"
  XConfigSpec x;
  std::vector<ExplicitNode> nodes;
  std::vector<ExplicitElement> elements;
  std::optional<double> node_radius;  // defaults to half the tether diameter
  double velocity_jitter = 0.0;       // m/s, uniform per axis, drawn from `seed`

  bool operator==(const NetSpec&) const = default;
};

struct RobotSpec {
  int count = 4;
  double mass = 3.0;    // kg, added to the lumped line mass of the tip node
  double radius = 0.1;  // m
  bool operator==(const RobotSpec&) const = default;
};

struct TargetSpec {
  std::string geometry = "box";  // or "polyhedron"
  Vec3 size = Vec3::Constant(1.15);
  std::vector<Vec3> vertices;
  std::vector<std::vector<int>> faces;
  Vec3 position = Vec3::Zero();
  Eigen::Vector4d orientation{1.0, 0.0, 0.0, 0.0};  // w, x, y, z
  Vec3 linear_velocity = Vec3::Zero();
  Vec3 angular_velocity_deg = Vec3::Zero();  // deg/s, world frame
  TargetMode mode = TargetMode::kinematic;
  double mass = 100.0;
  Mat3 inertia = Mat3::Identity() * 22.0;

  bool operator==(const TargetSpec&) const = default;
};

struct OutputSpec {
  std::string directory;  // empty: no files
  double interval = 0.01;  // s between trajectory samples
  bool operator==(const OutputSpec&) const = default;
};

/// One complete, declarative simulation run.
struct Scenario {
  std::string name = "capture";
  TetherMaterial tether;
  NetSpec net;
  RobotSpec robots;
  Vec3 initial_velocity{0.0, -15.0, 0.0};
  TargetSpec target;
  ContactParams contact;
  AeroEnvironment aero;
  IntegratorConfig integrator;
  Vec3 gravity = Vec3::Zero();
  CaptureCriteria capture;
  OutputSpec output;
  std::uint64_t seed = 0;

  bool operator==(const Scenario&) const = default;
};

struct XConfiguration {
  std::vector<TetherNode> nodes;
  std::vector<TetherElement> elements;
  std::vector<int> robots;
};

/// Builds the hub-and-arms net. Every element starts exactly at rest length
/// and every node moves with `velocity`.
XConfiguration generate_x_configuration(const XConfigSpec& spec, const TetherMaterial& material,
                                        const RobotSpec& robots, const Vec3& center,
                                        const Vec3& velocity,
                                        std::optional<double> node_radius = {});

/// Applies `key=value` overrides (dotted paths) to the document, then parses
/// and validates it. Unknown keys are rejected.
Scenario parse_scenario(std::string_view yaml, std::span<const std::string> overrides = {});
Scenario load_scenario(const std::filesystem::path& path,
                       std::span<const std::string> overrides = {});
std::string serialize_scenario(const Scenario& scenario);

/// Checks every module invariant; throws ConfigError listing all violations.
void validate(const Scenario& scenario);
/// Ensures the output directory can be created and written.
void validate_output_path(const Scenario& scenario);

TetherNetwork build_network(const Scenario& scenario);
ConvexPolyhedron build_hull(const Scenario& scenario);
TargetBodyState build_target(const Scenario& scenario);
Model build_model(const Scenario& scenario);

/// Derived quantities shown by `validate`.
struct ResolvedParameters {
  std::size_t node_count = 0;
  std::size_t element_count = 0;
  std::vector<double> element_stiffness;
  std::vector<double> element_damping;
  std::vector<double> node_mass;
  double total_mass = 0.0;
  double stable_dt = 0.0;
  double cross_section = 0.0;
  Vec3 angular_velocity_rad = Vec3::Zero();
};
ResolvedParameters resolve_parameters(const Scenario& scenario);

}  // namespace tethercap
