#include "tethercap/tether.hpp"

#include <algorithm>
#include <array>
#include <queue>
#include <set>

namespace tethercap {

void TetherMaterial::validate() const {
  if (!(youngs_modulus > 0.0)) throw ConfigError("must be > 0", "tether.youngs_modulus");
  if (!(density > 0.0)) throw ConfigError("must be > 0", "tether.density");
  if (!(diameter > 0.0)) throw ConfigError("must be > 0", "tether.diameter");
  if (!(damping_ratio >= 0.0 && damping_ratio < 1.0))
    throw ConfigError("must be in [0, 1)", "tether.damping_ratio");
  if (!(drag_coefficient > 0.0)) throw ConfigError("must be > 0", "tether.drag_coefficient");
}

TetherNetwork::TetherNetwork(std::vector<TetherNode> nodes, std::vector<TetherElement> elements,
                             TetherMaterial material)
    : nodes_(std::move(nodes)), elements_(std::move(elements)), material_(material) {
  validate();
  build_adjacency();
  for (const auto& n : nodes_)
    if (n.is_robot) robots_.push_back(n.id);
}

void TetherNetwork::validate() const {
  if (nodes_.empty()) throw ConfigError("network has no nodes", "net");
  for (std::size_t k = 0; k < nodes_.size(); ++k) {
    const auto& n = nodes_[k];
    if (n.id != static_cast<int>(k))
      throw ConfigError("node ids must be contiguous 0..n-1", "net.nodes");
    if (!(n.mass > 0.0)) throw ConfigError("node " + std::to_string(k) + " mass must be > 0", "net.nodes");
    if (!(n.radius > 0.0))
      throw ConfigError("node " + std::to_string(k) + " radius must be > 0", "net.nodes");
    if (!n.position.allFinite() || !n.velocity.allFinite())
      throw ConfigError("node " + std::to_string(k) + " state is not finite", "net.nodes");
  }
  const int n = static_cast<int>(nodes_.size());
  std::set<std::pair<int, int>> seen;
  for (std::size_t k = 0; k < elements_.size(); ++k) {
    const auto& e = elements_[k];
    const std::string tag = "element " + std::to_string(k);
    if (e.i < 0 || e.i >= n || e.j < 0 || e.j >= n)
      throw ConfigError(tag + " references an unknown node", "net.elements");
    if (e.i == e.j) throw ConfigError(tag + " joins a node to itself", "net.elements");
    if (!(e.rest_length > 0.0)) throw ConfigError(tag + " rest length must be > 0", "net.elements");
    if (!(e.stiffness > 0.0)) throw ConfigError(tag + " stiffness must be > 0", "net.elements");
    if (!(e.damping >= 0.0)) throw ConfigError(tag + " damping must be >= 0", "net.elements");
    if (!seen.insert(std::minmax(e.i, e.j)).second)
      throw ConfigError(tag + " duplicates an existing edge", "net.elements");
  }
  // Connectivity: breadth-first walk from node 0.
  std::vector<std::vector<int>> adj(nodes_.size());
  for (const auto& e : elements_) {
    adj[e.i].push_back(e.j);
    adj[e.j].push_back(e.i);
  }
  std::vector<char> visited(nodes_.size(), 0);
  std::queue<int> frontier;
  frontier.push(0);
  visited[0] = 1;
  std::size_t count = 1;
  while (!frontier.empty()) {
    const int cur = frontier.front();
    frontier.pop();
    for (int nb : adj[cur]) {
      if (!visited[nb]) {
        visited[nb] = 1;
        ++count;
        frontier.push(nb);
      }
    }
  }
  if (count != nodes_.size()) throw ConfigError("element graph is not connected", "net.elements");
}

void TetherNetwork::build_adjacency() {
  std::vector<int> degree(nodes_.size() + 1, 0);
  for (const auto& e : elements_) {
    ++degree[e.i + 1];
    ++degree[e.j + 1];
  }
  adjacency_offsets_.assign(nodes_.size() + 1, 0);
  for (std::size_t k = 1; k <= nodes_.size(); ++k)
    adjacency_offsets_[k] = adjacency_offsets_[k - 1] + degree[k];
  adjacency_.assign(adjacency_offsets_.back(), 0);
  std::vector<int> fill(adjacency_offsets_.begin(), adjacency_offsets_.end() - 1);
  for (std::size_t k = 0; k < elements_.size(); ++k) {
    adjacency_[fill[elements_[k].i]++] = static_cast<int>(k);
    adjacency_[fill[elements_[k].j]++] = static_cast<int>(k);
  }
}

std::span<const int> TetherNetwork::incident_elements(int node) const {
  const auto begin = adjacency_offsets_[node];
  const auto end = adjacency_offsets_[node + 1];
  return {adjacency_.data() + begin, static_cast<std::size_t>(end - begin)};
}

NodeArray TetherNetwork::positions() const {
  NodeArray x(3, nodes_.size());
  for (std::size_t k = 0; k < nodes_.size(); ++k) x.col(k) = nodes_[k].position;
  return x;
}

NodeArray TetherNetwork::velocities() const {
  NodeArray v(3, nodes_.size());
  for (std::size_t k = 0; k < nodes_.size(); ++k) v.col(k) = nodes_[k].velocity;
  return v;
}

Eigen::VectorXd TetherNetwork::masses() const {
  Eigen::VectorXd m(nodes_.size());
  for (std::size_t k = 0; k < nodes_.size(); ++k) m[k] = nodes_[k].mass;
  return m;
}

void TetherNetwork::set_state(const NodeArray& x, const NodeArray& v) {
  for (std::size_t k = 0; k < nodes_.size(); ++k) {
    nodes_[k].position = x.col(k);
    nodes_[k].velocity = v.col(k);
  }
}

double TetherNetwork::max_element_frequency() const {
  double max_k = 0.0;
  double min_m = std::numeric_limits<double>::infinity();
  for (const auto& e : elements_) {
    max_k = std::max(max_k, e.stiffness);
    min_m = std::min({min_m, nodes_[e.i].mass, nodes_[e.j].mass});
  }
  if (elements_.empty()) return 0.0;
  return std::sqrt(max_k / min_m);
}

ElementForce<double> element_tension(const TetherNetwork& net, const TetherElement& e) {
  const auto& a = net.nodes()[e.i];
  const auto& b = net.nodes()[e.j];
  return element_tension<double>(a.position, b.position, a.velocity, b.velocity, e.stiffness,
                                 e.damping, e.rest_length);
}

double element_stiffness(const TetherMaterial& material, double rest_length) {
  if (!(rest_length > 0.0)) throw ConfigError("rest length must be > 0", "net.rest_length");
  return material.cross_section() * material.youngs_modulus / rest_length;
}

double element_damping(const TetherMaterial& material, double element_mass, double stiffness) {
  return 2.0 * material.damping_ratio * std::sqrt(element_mass * stiffness);
}

namespace {

// Node degree in capture nets is small; anything beyond falls back to a vector.
constexpr std::size_t kInlineSegments = 8;

Vec3 node_aero(const TetherNetwork& net, int node, const NodeArray& x, const NodeArray& v,
               const AeroEnvironment& atmosphere, Diagnostics* diag) {
  if (!atmosphere.enabled || atmosphere.density == 0.0) return Vec3::Zero();
  const auto incident = net.incident_elements(node);
  std::array<Vec3, kInlineSegments> inline_buf;
  std::vector<Vec3> heap_buf;
  std::span<Vec3> segs;
  if (incident.size() <= kInlineSegments) {
    segs = std::span<Vec3>(inline_buf.data(), incident.size());
  } else {
    heap_buf.resize(incident.size());
    segs = heap_buf;
  }
  for (std::size_t k = 0; k < incident.size(); ++k) {
    const auto& e = net.elements()[incident[k]];
    const int other = e.i == node ? e.j : e.i;
    segs[k] = x.col(node) - x.col(other);
  }
  std::int64_t degenerate = 0;
  const auto& mat = net.material();
  Vec3 f = aero_force<double>(v.col(node), std::span<const Vec3>(segs.data(), segs.size()),
                              atmosphere.density, mat.diameter, mat.drag_coefficient,
                              &degenerate);
  if (diag) diag->degenerate_aero_segments += degenerate;
  return f;
}

}  // namespace

Vec3 aero_force(const TetherNetwork& net, int node, const AeroEnvironment& atmosphere,
                Diagnostics* diag) {
  return node_aero(net, node, net.positions(), net.velocities(), atmosphere, diag);
}

NodeArray assemble_internal_forces(const TetherNetwork& net, const NodeArray& x,
                                   const NodeArray& v, const AeroEnvironment& atmosphere,
                                   Diagnostics* diag) {
  NodeArray f = NodeArray::Zero(3, net.size());
  for (const auto& e : net.elements()) {
    const auto t = element_tension<double>(x.col(e.i), x.col(e.j), v.col(e.i), v.col(e.j),
                                           e.stiffness, e.damping, e.rest_length);
    if (diag) {
      diag->slack_elements += t.slack ? 1 : 0;
      diag->degenerate_elements += t.degenerate ? 1 : 0;
    }
    if (t.slack) continue;
    f.col(e.i) += t.on_i;
    f.col(e.j) += t.on_j;
  }
  if (atmosphere.enabled && atmosphere.density != 0.0) {
    for (std::size_t k = 0; k < net.size(); ++k)
      f.col(k) += node_aero(net, static_cast<int>(k), x, v, atmosphere, diag);
  }
  return f;
}

NodeArray assemble_internal_forces(const TetherNetwork& net, const AeroEnvironment& atmosphere,
                                   Diagnostics* diag) {
  return assemble_internal_forces(net, net.positions(), net.velocities(), atmosphere, diag);
}

double tether_elastic_energy(const TetherNetwork& net, const NodeArray& x) {
  double energy = 0.0;
  for (const auto& e : net.elements()) {
    const double stretch = (x.col(e.i) - x.col(e.j)).norm() - e.rest_length;
    if (stretch > 0.0) energy += 0.5 * e.stiffness * stretch * stretch;
  }
  return energy;
}

}  // namespace tethercap
