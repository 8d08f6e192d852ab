#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "tethercap/types.hpp"

namespace tethercap {

/// Bulk properties of the tether line.
struct TetherMaterial {
  double youngs_modulus = 25.0e9;  // Pa
  double density = 1390.0;         // kg/m^3
  double diameter = 1.0e-3;        // m
  double damping_ratio = 0.3;
  double drag_coefficient = 2.2;

  double cross_section() const {
    return std::numbers::pi * diameter * diameter / 4.0;
  }

  /// Throws ConfigError naming the first bad field.
  void validate() const;

  bool operator==(const TetherMaterial&) const = default;
};

struct TetherNode {
  int id = 0;
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  double mass = 0.0;    // kg
  double radius = 0.0;  // m, collision sphere
  bool is_robot = false;
};

struct TetherElement {
  int i = 0;
  int j = 0;
  double rest_length = 0.0;  // m
  double stiffness = 0.0;    // N/m
  double damping = 0.0;      // N s/m
};

struct AeroEnvironment {
  bool enabled = false;
  double density = 0.0;  // kg/m^3

  bool operator==(const AeroEnvironment&) const = default;
};

/// Lumped-mass tether graph: point-mass nodes joined by one-sided
/// Kelvin-Voigt elements.
class TetherNetwork {
 public:
  TetherNetwork() = default;
  TetherNetwork(std::vector<TetherNode> nodes, std::vector<TetherElement> elements,
                TetherMaterial material);

  const std::vector<TetherNode>& nodes() const { return nodes_; }
  const std::vector<TetherElement>& elements() const { return elements_; }
  const TetherMaterial& material() const { return material_; }
  std::size_t size() const { return nodes_.size(); }

  /// Element indices touching `node`, in ascending element order.
  std::span<const int> incident_elements(int node) const;
  /// Ids of robot nodes, ascending.
  const std::vector<int>& robots() const { return robots_; }

  NodeArray positions() const;
  NodeArray velocities() const;
  Eigen::VectorXd masses() const;

  /// Overwrites node kinematic state.
  void set_state(const NodeArray& x, const NodeArray& v);

  /// sqrt(max k_ij / min adjacent node mass), the step-size bound frequency.
  double max_element_frequency() const;

 private:
  void validate() const;
  void build_adjacency();

  std::vector<TetherNode> nodes_;
  std::vector<TetherElement> elements_;
  TetherMaterial material_;
  std::vector<int> adjacency_offsets_;
  std::vector<int> adjacency_;
  std::vector<int> robots_;
};

/// Tension pair for one element. `on_j` is always the exact negation of `on_i`.
template <typename Scalar>
struct ElementForce {
  Vector3<Scalar> on_i = Vector3<Scalar>::Zero();
  Vector3<Scalar> on_j = Vector3<Scalar>::Zero();
  bool slack = false;
  bool degenerate = false;
};

/// One-sided spring-damper tension between two nodes. With r = ri - rj the
/// force on i is [-k(|r| - l0) - d (vij . r_hat)] r_hat while |r| > l0, and
/// zero otherwise: a tether cannot push.
template <typename Scalar>
ElementForce<Scalar> element_tension(const Vector3<Scalar>& ri, const Vector3<Scalar>& rj,
                                     const Vector3<Scalar>& vi, const Vector3<Scalar>& vj,
                                     Scalar stiffness, Scalar damping, Scalar rest_length) {
  ElementForce<Scalar> out;
  const Vector3<Scalar> r = ri - rj;
  const Scalar length = r.norm();
  if (length < Scalar(1e-12)) {
    out.degenerate = true;
    out.slack = true;
    return out;
  }
  if (length <= rest_length) {
    out.slack = true;
    return out;
  }
  const Vector3<Scalar> dir = r / length;
  const Scalar rate = (vi - vj).dot(dir);
  out.on_i = (-stiffness * (length - rest_length) - damping * rate) * dir;
  out.on_j = -out.on_i;
  return out;
}

ElementForce<double> element_tension(const TetherNetwork& net, const TetherElement& e);

/// A E / l0 with A the circular cross-section.
double element_stiffness(const TetherMaterial& material, double rest_length);

/// 2 xi sqrt(m k).
double element_damping(const TetherMaterial& material, double element_mass, double stiffness);

/// Mass of the line between two nodes: l0 A rho.
inline double element_mass(const TetherMaterial& material, double rest_length) {
  return rest_length * material.cross_section() * material.density;
}

/// Drag on a node from the two rigid half-segments beside it. Each adjacent
/// segment s = r_node - r_neighbour contributes n/|s| with n = (v x s) x s,
/// scaled by rho |v| d c_d / 4. That is the classic normal-flow drag on a
/// half-segment panel. Zero-length segments are skipped and counted.
template <typename Scalar>
Vector3<Scalar> aero_force(const Vector3<Scalar>& velocity,
                           std::span<const Vector3<Scalar>> segments,
                           Scalar density, Scalar diameter, Scalar drag_coefficient,
                           std::int64_t* degenerate_segments = nullptr) {
  Vector3<Scalar> sum = Vector3<Scalar>::Zero();
  if (density == Scalar(0)) return sum;
  for (const auto& s : segments) {
    const Scalar len = s.norm();
    if (len < Scalar(1e-12)) {
      if (degenerate_segments) ++*degenerate_segments;
      continue;
    }
    sum += velocity.cross(s).cross(s) / len;
  }
  return (density * velocity.norm() * diameter / Scalar(4)) * drag_coefficient * sum;
}

Vec3 aero_force(const TetherNetwork& net, int node, const AeroEnvironment& atmosphere,
                Diagnostics* diag = nullptr);

/// Per-node tension plus drag for the given kinematic state. Elements are
/// reduced in index order so results are bit-reproducible.
NodeArray assemble_internal_forces(const TetherNetwork& net, const NodeArray& x,
                                   const NodeArray& v, const AeroEnvironment& atmosphere,
                                   Diagnostics* diag = nullptr);

NodeArray assemble_internal_forces(const TetherNetwork& net, const AeroEnvironment& atmosphere,
                                   Diagnostics* diag = nullptr);

/// Elastic energy stored in stretched elements.
double tether_elastic_energy(const TetherNetwork& net, const NodeArray& x);

}  // namespace tethercap
