#pragma once

#include <vector>

#include "tethercap/target.hpp"
#include "tethercap/tether.hpp"
#include "tethercap/types.hpp"

namespace tethercap {

struct Face {
  std::vector<int> vertices;  // counter-clockwise seen from outside
  Vec3 normal = Vec3::UnitX();
  double offset = 0.0;        // plane: normal . p = offset
};

/// Convex collision hull in the body frame. Construction checks convexity
/// and watertightness, so queries never see a degenerate hull.
class ConvexPolyhedron {
 public:
  ConvexPolyhedron() = default;
  ConvexPolyhedron(std::vector<Vec3> vertices, std::vector<std::vector<int>> faces);

  /// Axis-aligned box centred on the body origin.
  static ConvexPolyhedron box(const Vec3& size);

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<Face>& faces() const { return faces_; }
  /// Largest vertex distance from the body origin.
  double bounding_radius() const { return bounding_radius_; }

  /// Body-frame support point; ties go to the lowest vertex index.
  int support_index(const Vec3& body_direction) const;

  /// Face whose outward normal best matches `body_direction`, lowest index on ties.
  int nearest_face_by_normal(const Vec3& body_direction) const;

 private:
  std::vector<Vec3> vertices_;
  std::vector<Face> faces_;
  double bounding_radius_ = 0.0;
};

/// A collision sphere queried against the posed target.
struct ContactQuery {
  Vec3 center = Vec3::Zero();
  double radius = 0.0;
  TargetBodyState pose;
};

struct ContactManifold {
  bool intersecting = false;
  double penetration_depth = 0.0;  // meaningful when intersecting
  double separation = 0.0;         // meaningful when not intersecting
  Vec3 contact_point = Vec3::Zero();     // on the target surface, world frame
  Vec3 contact_normal = Vec3::UnitX();   // from the target surface toward the sphere
  int face = -1;                   // hull face hit when deep, else -1
  bool fallback = false;           // GJK hit its iteration cap
};

/// World-frame support point of the posed hull along `direction`.
Vec3 support(const ConvexPolyhedron& poly, const TargetBodyState& pose, const Vec3& direction);

struct GjkSettings {
  double tolerance = 1e-10;  // m, simplex progress
  int max_iterations = 64;
  double touch_tolerance = 1e-12;  // m, sphere counts as touching, not overlapping
};

/// Sphere-versus-hull query. GJK finds the closest hull point to the sphere
/// centre; overlapping spheres report r - distance as penetration. When the
/// centre lies inside the hull the nearest face plane (lowest index on ties)
/// gives both the normal and the depth.
ContactManifold gjk_distance(const ContactQuery& query, const ConvexPolyhedron& poly,
                             const GjkSettings& settings = {});

/// Closest hull point to `body_point` in the body frame by GJK, with `inside`
/// set when the point is enclosed. Exposed for tests.
struct ClosestPoint {
  Vec3 point = Vec3::Zero();
  double distance = 0.0;
  bool inside = false;
  int iterations = 0;
  bool converged = true;
};
ClosestPoint gjk_closest_point(const ConvexPolyhedron& poly, const Vec3& body_point,
                               const GjkSettings& settings = {});

/// Exhaustive vertex/edge/face search for the same query.
ClosestPoint brute_force_closest_point(const ConvexPolyhedron& poly, const Vec3& body_point);

/// Node ids whose spheres reach the hull's bounding sphere, ascending.
std::vector<int> broad_phase(const NodeArray& positions, const Eigen::VectorXd& radii,
                             const ConvexPolyhedron& poly, const TargetBodyState& pose);

std::vector<int> broad_phase(const TetherNetwork& net, const ConvexPolyhedron& poly,
                             const TargetBodyState& pose);

}  // namespace tethercap
