#include "tethercap/collision.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>

namespace tethercap {

namespace {

constexpr double kPlaneTolerance = 1e-9;

}  // namespace

ConvexPolyhedron::ConvexPolyhedron(std::vector<Vec3> vertices,
                                   std::vector<std::vector<int>> faces)
    : vertices_(std::move(vertices)) {
  if (vertices_.size() < 4) throw ConfigError("hull needs at least 4 vertices", "target.geometry");
  if (faces.size() < 4) throw ConfigError("hull needs at least 4 faces", "target.geometry");
  const int nv = static_cast<int>(vertices_.size());
  for (const auto& v : vertices_)
    if (!v.allFinite()) throw ConfigError("vertex is not finite", "target.geometry");

  Vec3 centroid = Vec3::Zero();
  for (const auto& v : vertices_) centroid += v;
  centroid /= static_cast<double>(nv);

  std::map<std::pair<int, int>, int> edge_use;
  for (std::size_t f = 0; f < faces.size(); ++f) {
    auto idx = faces[f];
    const std::string tag = "face " + std::to_string(f);
    if (idx.size() < 3) throw ConfigError(tag + " has fewer than 3 vertices", "target.geometry");
    for (int k : idx)
      if (k < 0 || k >= nv) throw ConfigError(tag + " references an unknown vertex", "target.geometry");
    // Newell normal; robust for planar polygons of any vertex count.
    Vec3 normal = Vec3::Zero();
    Vec3 center = Vec3::Zero();
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const Vec3& a = vertices_[idx[k]];
      const Vec3& b = vertices_[idx[(k + 1) % idx.size()]];
      normal += a.cross(b);
      center += a;
    }
    center /= static_cast<double>(idx.size());
    if (normal.norm() < 1e-12) throw ConfigError(tag + " has zero area", "target.geometry");
    normal.normalize();
    if (normal.dot(center - centroid) < 0.0) {
      normal = -normal;
      std::reverse(idx.begin(), idx.end());
    }
    const double offset = normal.dot(center);
    for (int k : idx)
      if (std::abs(normal.dot(vertices_[k]) - offset) > kPlaneTolerance)
        throw ConfigError(tag + " is not planar", "target.geometry");
    for (std::size_t k = 0; k < idx.size(); ++k)
      ++edge_use[std::minmax(idx[k], idx[(k + 1) % idx.size()])];
    faces_.push_back(Face{std::move(idx), normal, offset});
  }
  for (const auto& [edge, uses] : edge_use)
    if (uses != 2) throw ConfigError("hull is not watertight", "target.geometry");
  for (std::size_t f = 0; f < faces_.size(); ++f)
    for (const auto& v : vertices_)
      if (faces_[f].normal.dot(v) - faces_[f].offset > kPlaneTolerance)
        throw ConfigError("hull is not convex at face " + std::to_string(f), "target.geometry");

  // Divergence theorem volume; zero means a flat hull.
  double volume = 0.0;
  for (const auto& face : faces_) {
    const Vec3& a = vertices_[face.vertices[0]];
    for (std::size_t k = 1; k + 1 < face.vertices.size(); ++k)
      volume += a.dot(vertices_[face.vertices[k]].cross(vertices_[face.vertices[k + 1]])) / 6.0;
  }
  if (!(volume > 1e-12)) throw ConfigError("hull has zero volume", "target.geometry");

  for (const auto& v : vertices_) bounding_radius_ = std::max(bounding_radius_, v.norm());
}

ConvexPolyhedron ConvexPolyhedron::box(const Vec3& size) {
  if (!(size.minCoeff() > 0.0)) throw ConfigError("box size must be > 0", "target.geometry.size");
  const Vec3 h = size / 2.0;
  std::vector<Vec3> v;
  for (int k = 0; k < 8; ++k)
    v.emplace_back((k & 1) ? h.x() : -h.x(), (k & 2) ? h.y() : -h.y(), (k & 4) ? h.z() : -h.z());
  // +x, -x, +y, -y, +z, -z
  std::vector<std::vector<int>> f = {{1, 3, 7, 5}, {0, 4, 6, 2}, {2, 6, 7, 3},
                                     {0, 1, 5, 4}, {4, 5, 7, 6}, {0, 2, 3, 1}};
  return ConvexPolyhedron(std::move(v), std::move(f));
}

int ConvexPolyhedron::support_index(const Vec3& body_direction) const {
  int best = 0;
  double best_dot = vertices_[0].dot(body_direction);
  for (int k = 1; k < static_cast<int>(vertices_.size()); ++k) {
    const double d = vertices_[k].dot(body_direction);
    if (d > best_dot) {
      best_dot = d;
      best = k;
    }
  }
  return best;
}

int ConvexPolyhedron::nearest_face_by_normal(const Vec3& body_direction) const {
  int best = 0;
  double best_dot = faces_[0].normal.dot(body_direction);
  for (int k = 1; k < static_cast<int>(faces_.size()); ++k) {
    const double d = faces_[k].normal.dot(body_direction);
    if (d > best_dot) {
      best_dot = d;
      best = k;
    }
  }
  return best;
}

Vec3 support(const ConvexPolyhedron& poly, const TargetBodyState& pose, const Vec3& direction) {
  if (!(direction.squaredNorm() > 0.0))
    throw std::invalid_argument("support direction must be non-zero");
  const Vec3 local = pose.orientation.conjugate() * direction;
  return pose.to_world(poly.vertices()[poly.support_index(local)]);
}

namespace {

// Working simplex in Minkowski space (hull vertex minus query point).
struct Simplex {
  std::array<Vec3, 4> pts;
  std::array<int, 4> ids;
  int size = 0;

  void keep(std::initializer_list<int> which) {
    std::array<Vec3, 4> p;
    std::array<int, 4> id;
    int n = 0;
    for (int w : which) {
      p[n] = pts[w];
      id[n] = ids[w];
      ++n;
    }
    pts = p;
    ids = id;
    size = n;
  }
};

Vec3 closest_on_segment(Simplex& s) {
  const Vec3 a = s.pts[0];
  const Vec3 b = s.pts[1];
  const Vec3 ab = b - a;
  const double t = -a.dot(ab);
  if (t <= 0.0) {
    s.keep({0});
    return a;
  }
  const double len2 = ab.squaredNorm();
  if (t >= len2) {
    s.keep({1});
    return b;
  }
  return a + (t / len2) * ab;
}

// Closest point of triangle abc to the origin, reducing the simplex to the
// supporting feature (Voronoi region walk).
Vec3 closest_on_triangle(Simplex& s) {
  const Vec3 a = s.pts[0], b = s.pts[1], c = s.pts[2];
  const Vec3 ab = b - a, ac = c - a, ap = -a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) {
    s.keep({0});
    return a;
  }
  const Vec3 bp = -b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) {
    s.keep({1});
    return b;
  }
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    const double v = d1 / (d1 - d3);
    s.keep({0, 1});
    return a + v * ab;
  }
  const Vec3 cp = -c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) {
    s.keep({2});
    return c;
  }
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    const double w = d2 / (d2 - d6);
    s.keep({0, 2});
    return a + w * ac;
  }
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    s.keep({1, 2});
    return b + w * (c - b);
  }
  const double sum = va + vb + vc;
  if (!(sum > 0.0)) {
    // Collinear triangle: best of its edges.
    Vec3 best = a;
    Simplex best_s = s;
    best_s.keep({0});
    for (auto pair : {std::array<int, 2>{0, 1}, {1, 2}, {0, 2}}) {
      Simplex e = s;
      e.keep({pair[0], pair[1]});
      const Vec3 p = closest_on_segment(e);
      if (p.squaredNorm() < best.squaredNorm()) {
        best = p;
        best_s = e;
      }
    }
    s = best_s;
    return best;
  }
  return a + ab * (vb / sum) + ac * (vc / sum);
}

// Returns true when the origin is enclosed by the tetrahedron.
bool closest_on_tetrahedron(Simplex& s, Vec3& closest) {
  static constexpr std::array<std::array<int, 4>, 4> kFaces = {
      {{0, 1, 2, 3}, {0, 2, 3, 1}, {0, 3, 1, 2}, {1, 3, 2, 0}}};
  bool any_outside = false;
  double best = std::numeric_limits<double>::infinity();
  Simplex best_simplex;
  Vec3 best_point = Vec3::Zero();
  for (const auto& f : kFaces) {
    const Vec3& a = s.pts[f[0]];
    const Vec3 n = (s.pts[f[1]] - a).cross(s.pts[f[2]] - a);
    const double side_origin = (-a).dot(n);
    const double side_opposite = (s.pts[f[3]] - a).dot(n);
    // A flat tetrahedron has no interior; test every face in that case.
    const bool outside = side_opposite == 0.0 || side_origin * side_opposite < 0.0;
    if (!outside) continue;
    any_outside = true;
    Simplex tri = s;
    tri.keep({f[0], f[1], f[2]});
    const Vec3 p = closest_on_triangle(tri);
    const double d = p.squaredNorm();
    if (d < best) {
      best = d;
      best_point = p;
      best_simplex = tri;
    }
  }
  if (!any_outside) return true;
  s = best_simplex;
  closest = best_point;
  return false;
}

}  // namespace

ClosestPoint gjk_closest_point(const ConvexPolyhedron& poly, const Vec3& body_point,
                               const GjkSettings& settings) {
  const auto& verts = poly.vertices();
  ClosestPoint out;
  Simplex simplex;
  simplex.pts[0] = verts[0] - body_point;
  simplex.ids[0] = 0;
  simplex.size = 1;
  Vec3 v = simplex.pts[0];

  for (int iter = 0; iter < settings.max_iterations; ++iter) {
    out.iterations = iter + 1;
    const double vnorm = v.norm();
    if (vnorm <= settings.tolerance) {
      out.point = v + body_point;
      out.distance = 0.0;
      out.inside = true;
      return out;
    }
    const int wi = poly.support_index(-v);
    const Vec3 w = verts[wi] - body_point;
    // (v . w)/|v| bounds the distance from below; stop when the gap closes.
    if (vnorm - v.dot(w) / vnorm <= settings.tolerance ||
        std::find(simplex.ids.begin(), simplex.ids.begin() + simplex.size, wi) !=
            simplex.ids.begin() + simplex.size) {
      out.point = v + body_point;
      out.distance = vnorm;
      return out;
    }
    simplex.pts[simplex.size] = w;
    simplex.ids[simplex.size] = wi;
    ++simplex.size;

    Vec3 next;
    switch (simplex.size) {
      case 2: next = closest_on_segment(simplex); break;
      case 3: next = closest_on_triangle(simplex); break;
      default:
        if (closest_on_tetrahedron(simplex, next)) {
          out.point = body_point;
          out.distance = 0.0;
          out.inside = true;
          return out;
        }
    }
    if (next.squaredNorm() >= v.squaredNorm()) {
      out.point = v + body_point;
      out.distance = vnorm;
      return out;
    }
    v = next;
  }
  out.converged = false;
  out.point = v + body_point;
  out.distance = v.norm();
  return out;
}

ClosestPoint brute_force_closest_point(const ConvexPolyhedron& poly, const Vec3& body_point) {
  ClosestPoint out;
  bool inside = true;
  for (const auto& f : poly.faces())
    if (f.normal.dot(body_point) - f.offset > 0.0) inside = false;
  if (inside) {
    out.point = body_point;
    out.inside = true;
    return out;
  }
  double best = std::numeric_limits<double>::infinity();
  for (const auto& f : poly.faces()) {
    const auto& idx = f.vertices;
    for (std::size_t k = 1; k + 1 < idx.size(); ++k) {
      Simplex tri;
      tri.pts = {poly.vertices()[idx[0]] - body_point, poly.vertices()[idx[k]] - body_point,
                 poly.vertices()[idx[k + 1]] - body_point, Vec3::Zero()};
      tri.ids = {0, 1, 2, 3};
      tri.size = 3;
      const Vec3 p = closest_on_triangle(tri);
      if (p.squaredNorm() < best) {
        best = p.squaredNorm();
        out.point = p + body_point;
      }
    }
  }
  out.distance = std::sqrt(best);
  return out;
}

ContactManifold gjk_distance(const ContactQuery& query, const ConvexPolyhedron& poly,
                             const GjkSettings& settings) {
  const auto& pose = query.pose;
  const Vec3 center = pose.to_body(query.center);
  ClosestPoint cp = gjk_closest_point(poly, center, settings);
  ContactManifold m;
  if (!cp.converged) {
    cp = brute_force_closest_point(poly, center);
    m.fallback = true;
  }

  Vec3 normal;
  Vec3 point;
  double depth;  // r - signed distance from the surface
  if (cp.distance > settings.tolerance) {
    normal = (center - cp.point) / cp.distance;
    point = cp.point;
    depth = query.radius - cp.distance;
  } else {
    // Centre on or inside the hull: nearest face plane.
    int best = 0;
    double best_signed = -std::numeric_limits<double>::infinity();
    const auto& faces = poly.faces();
    for (int f = 0; f < static_cast<int>(faces.size()); ++f) {
      const double s = faces[f].normal.dot(center) - faces[f].offset;
      if (s > best_signed) {
        best_signed = s;
        best = f;
      }
    }
    normal = faces[best].normal;
    point = center - best_signed * normal;
    depth = query.radius - best_signed;
    m.face = best;
  }

  m.contact_point = pose.to_world(point);
  m.contact_normal = pose.orientation * normal;
  if (depth > settings.touch_tolerance) {
    m.intersecting = true;
    m.penetration_depth = depth;
  } else {
    m.separation = std::max(0.0, -depth);
  }
  return m;
}

std::vector<int> broad_phase(const NodeArray& positions, const Eigen::VectorXd& radii,
                             const ConvexPolyhedron& poly, const TargetBodyState& pose) {
  std::vector<int> out;
  const double reach = poly.bounding_radius();
  for (Eigen::Index k = 0; k < positions.cols(); ++k) {
    const double limit = reach + radii[k];
    if ((positions.col(k) - pose.position).squaredNorm() <= limit * limit)
      out.push_back(static_cast<int>(k));
  }
  return out;
}

std::vector<int> broad_phase(const TetherNetwork& net, const ConvexPolyhedron& poly,
                             const TargetBodyState& pose) {
  Eigen::VectorXd radii(net.size());
  for (std::size_t k = 0; k < net.size(); ++k) radii[k] = net.nodes()[k].radius;
  return broad_phase(net.positions(), radii, poly, pose);
}

}  // namespace tethercap
