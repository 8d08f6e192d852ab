#include "tethercap/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

namespace tethercap {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

// ---------------------------------------------------------------------------
// Strict YAML reading. Every map is wrapped in a Section that remembers which
// keys were consumed; leftovers are typos and get rejected.

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

double to_double(const YAML::Node& n, const std::string& path) {
  if (!n.IsScalar()) throw ConfigError("expected a number", path);
  try {
    return n.as<double>();
  } catch (const YAML::Exception&) {
    throw ConfigError("expected a number, got '" + n.Scalar() + "'", path);
  }
}

int to_int(const YAML::Node& n, const std::string& path) {
  const double d = to_double(n, path);
  if (d != std::floor(d) || std::abs(d) > 1e9) throw ConfigError("expected an integer", path);
  return static_cast<int>(d);
}

bool to_bool(const YAML::Node& n, const std::string& path) {
  if (!n.IsScalar()) throw ConfigError("expected true or false", path);
  try {
    return n.as<bool>();
  } catch (const YAML::Exception&) {
    throw ConfigError("expected true or false, got '" + n.Scalar() + "'", path);
  }
}

std::string to_string(const YAML::Node& n, const std::string& path) {
  if (!n.IsScalar()) throw ConfigError("expected a string", path);
  return n.Scalar();
}

Vec3 to_vec3(const YAML::Node& n, const std::string& path) {
  if (!n.IsSequence() || n.size() != 3) throw ConfigError("expected a list of 3 numbers", path);
  return {to_double(n[0], path + "[0]"), to_double(n[1], path + "[1]"),
          to_double(n[2], path + "[2]")};
}

Mat3 to_mat3(const YAML::Node& n, const std::string& path) {
  if (!n.IsSequence() || n.size() != 3)
    throw ConfigError("expected 3 diagonal values or a 3x3 matrix", path);
  Mat3 m = Mat3::Zero();
  if (n[0].IsScalar()) {
    m.diagonal() = to_vec3(n, path);
    return m;
  }
  for (int r = 0; r < 3; ++r) m.row(r) = to_vec3(n[r], fmt::format("{}[{}]", path, r)).transpose();
  return m;
}

class Section {
 public:
  Section(YAML::Node node, std::string path)
      : Section(std::move(node), std::move(path), std::make_shared<std::vector<std::string>>()) {}
  // Item of a list inside `parent`; shares its problem log.
  Section(const Section& parent, YAML::Node node, std::string path)
      : Section(std::move(node), std::move(path), parent.problems_) {}

  bool has(const std::string& key) {
    used_.insert(key);
    return node_.IsMap() && get(key) && !get(key).IsNull();
  }

  // Const lookup: the mutable operator[] would insert missing keys.
  YAML::Node get(const std::string& key) const {
    const YAML::Node& n = node_;
    return n[key];
  }

  YAML::Node at(const std::string& key) {
    if (!has(key)) throw ConfigError("missing required field", join(path_, key));
    return get(key);
  }

  Section child(const std::string& key) {
    return Section(has(key) ? get(key) : YAML::Node(), join(path_, key), problems_);
  }

  std::string path(const std::string& key) const { return join(path_, key); }

  // Field readers record problems instead of throwing, so one pass reports
  // every missing, mistyped or unknown field.
  void number(const std::string& key, double& out, bool required = false) {
    if (has(key)) record([&] { out = to_double(get(key), path(key)); });
    else if (required) missing(key);
  }
  void number(const std::string& key, std::optional<double>& out) {
    if (has(key)) record([&] { out = to_double(get(key), path(key)); });
  }
  void integer(const std::string& key, int& out) {
    if (has(key)) record([&] { out = to_int(get(key), path(key)); });
  }
  void flag(const std::string& key, bool& out) {
    if (has(key)) record([&] { out = to_bool(get(key), path(key)); });
  }
  void text(const std::string& key, std::string& out) {
    if (has(key)) record([&] { out = to_string(get(key), path(key)); });
  }
  void vec3(const std::string& key, Vec3& out, bool required = false) {
    if (has(key)) record([&] { out = to_vec3(get(key), path(key)); });
    else if (required) missing(key);
  }
  void vec3(const std::string& key, std::optional<Vec3>& out) {
    if (has(key)) record([&] { out = to_vec3(get(key), path(key)); });
  }

  /// Flags keys that were never asked for.
  void finish() const {
    if (!node_.IsMap()) return;
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      const auto key = it->first.as<std::string>();
      if (!used_.contains(key)) problems_->push_back(join(path_, key) + ": unknown key");
    }
  }

  /// Throws one ConfigError listing everything recorded so far.
  void raise_if_any() const {
    if (problems_->empty()) return;
    if (problems_->size() == 1) throw ConfigError(problems_->front());
    std::string msg = "invalid scenario:";
    for (const auto& p : *problems_) msg += "\n  " + p;
    throw ConfigError(msg);
  }

 private:
  Section(YAML::Node node, std::string path, std::shared_ptr<std::vector<std::string>> log)
      : node_(std::move(node)), path_(std::move(path)), problems_(std::move(log)) {
    if (node_ && !node_.IsNull() && !node_.IsMap())
      throw ConfigError("expected a mapping", path_.empty() ? "<root>" : path_);
  }

  template <typename F>
  void record(F&& read) {
    try {
      read();
    } catch (const ConfigError& e) {
      problems_->push_back(e.what());
    }
  }
  void missing(const std::string& key) { problems_->push_back(path(key) + ": missing required field"); }

  YAML::Node node_;
  std::string path_;
  std::set<std::string> used_;
  std::shared_ptr<std::vector<std::string>> problems_;
};

void set_path(YAML::Node node, std::span<const std::string> parts, const YAML::Node& value) {
  if (parts.size() == 1) {
    node[parts[0]] = value;
    return;
  }
  if (!node[parts[0]].IsMap()) node[parts[0]] = YAML::Node(YAML::NodeType::Map);
  set_path(node[parts[0]], parts.subspan(1), value);
}

void apply_override(YAML::Node& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override '" + assignment + "' must look like KEY=VALUE", "--override");
  const std::string key = assignment.substr(0, eq);
  std::vector<std::string> parts;
  std::stringstream ss(key);
  for (std::string part; std::getline(ss, part, '.');) {
    if (part.empty()) throw ConfigError("empty path segment in '" + key + "'", "--override");
    parts.push_back(part);
  }
  YAML::Node value;
  try {
    value = YAML::Load(assignment.substr(eq + 1));
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("cannot parse value: ") + e.what(), key);
  }
  set_path(root, parts, value);
}

TargetMode parse_mode(const std::string& s, const std::string& path) {
  if (s == "kinematic") return TargetMode::kinematic;
  if (s == "dynamic") return TargetMode::dynamic;
  throw ConfigError("expected 'kinematic' or 'dynamic', got '" + s + "'", path);
}

Scheme parse_scheme(const std::string& s, const std::string& path) {
  if (s == "semi_implicit_euler") return Scheme::semi_implicit_euler;
  if (s == "rk4") return Scheme::rk4;
  throw ConfigError("expected 'semi_implicit_euler' or 'rk4', got '" + s + "'", path);
}

Scenario parse_document(const YAML::Node& root) {
  Scenario s;
  Section top(root, "");
  if (top.has("schema")) {
    const auto schema = to_string(root["schema"], "schema");
    if (schema != kScenarioSchema)
      throw ConfigError("unsupported schema '" + schema + "'", "schema");
  }
  top.text("name", s.name);

  {
    auto t = top.child("tether");
    t.number("youngs_modulus", s.tether.youngs_modulus, true);
    t.number("density", s.tether.density, true);
    t.number("diameter", s.tether.diameter);
    t.number("damping_ratio", s.tether.damping_ratio, true);
    t.number("drag_coefficient", s.tether.drag_coefficient);
    t.finish();
  }
  {
    auto n = top.child("net");
    n.text("generator", s.net.generator);
    n.integer("arm_count", s.net.x.arm_count);
    n.integer("nodes_total", s.net.x.nodes_total);
    n.number("arm_length", s.net.x.arm_length);
    n.number("hub_offset", s.net.x.hub_offset);
    n.vec3("plane_normal", s.net.x.plane_normal);
    n.number("arm_azimuth_deg", s.net.x.arm_azimuth_deg);
    n.vec3("aim_offset", s.net.x.aim_offset);
    n.number("node_radius", s.net.node_radius);
    n.number("velocity_jitter", s.net.velocity_jitter);
    if (n.has("nodes")) {
      const auto list = n.at("nodes");
      if (!list.IsSequence()) throw ConfigError("expected a list", n.path("nodes"));
      for (std::size_t k = 0; k < list.size(); ++k) {
        Section node(n, list[k], fmt::format("{}[{}]", n.path("nodes"), k));
        ExplicitNode en;
        node.vec3("position", en.position, true);
        node.flag("robot", en.robot);
        node.finish();
        s.net.nodes.push_back(en);
      }
    }
    if (n.has("elements")) {
      const auto list = n.at("elements");
      if (!list.IsSequence()) throw ConfigError("expected a list", n.path("elements"));
      for (std::size_t k = 0; k < list.size(); ++k) {
        const std::string path = fmt::format("{}[{}]", n.path("elements"), k);
        Section el(n, list[k], path);
        ExplicitElement ee;
        ee.i = to_int(el.at("i"), path + ".i");
        ee.j = to_int(el.at("j"), path + ".j");
        el.number("rest_length", ee.rest_length);
        el.finish();
        s.net.elements.push_back(ee);
      }
    }
    n.finish();
  }
  {
    auto r = top.child("robots");
    r.integer("count", s.robots.count);
    r.number("mass", s.robots.mass);
    r.number("radius", s.robots.radius);
    r.finish();
  }
  top.vec3("initial_velocity", s.initial_velocity, true);
  {
    auto t = top.child("target");
    auto g = t.child("geometry");
    g.text("type", s.target.geometry);
    g.vec3("size", s.target.size);
    if (g.has("vertices")) {
      const auto list = g.at("vertices");
      if (!list.IsSequence()) throw ConfigError("expected a list", g.path("vertices"));
      for (std::size_t k = 0; k < list.size(); ++k)
        s.target.vertices.push_back(to_vec3(list[k], fmt::format("{}[{}]", g.path("vertices"), k)));
    }
    if (g.has("faces")) {
      const auto list = g.at("faces");
      if (!list.IsSequence()) throw ConfigError("expected a list", g.path("faces"));
      for (std::size_t k = 0; k < list.size(); ++k) {
        const std::string path = fmt::format("{}[{}]", g.path("faces"), k);
        if (!list[k].IsSequence()) throw ConfigError("expected a list of vertex indices", path);
        std::vector<int> face;
        for (std::size_t m = 0; m < list[k].size(); ++m)
          face.push_back(to_int(list[k][m], fmt::format("{}[{}]", path, m)));
        s.target.faces.push_back(std::move(face));
      }
    }
    g.finish();
    t.vec3("position", s.target.position);
    if (t.has("orientation")) {
      const auto q = t.at("orientation");
      if (!q.IsSequence() || q.size() != 4)
        throw ConfigError("expected [w, x, y, z]", t.path("orientation"));
      for (int k = 0; k < 4; ++k)
        s.target.orientation[k] = to_double(q[k], fmt::format("{}[{}]", t.path("orientation"), k));
    }
    t.vec3("linear_velocity", s.target.linear_velocity);
    t.vec3("angular_velocity_deg", s.target.angular_velocity_deg);
    if (t.has("mode")) s.target.mode = parse_mode(to_string(t.at("mode"), t.path("mode")), t.path("mode"));
    t.number("mass", s.target.mass);
    if (t.has("inertia")) s.target.inertia = to_mat3(t.at("inertia"), t.path("inertia"));
    t.finish();
  }
  {
    auto c = top.child("contact");
    c.number("stiffness", s.contact.stiffness, true);
    c.number("exponent", s.contact.exponent);
    c.number("restitution", s.contact.restitution);
    c.number("damping", s.contact.damping);
    c.number("static_friction", s.contact.static_friction, true);
    c.number("dynamic_friction", s.contact.dynamic_friction, true);
    c.number("stribeck_velocity", s.contact.stribeck_velocity);
    c.number("stribeck_exponent", s.contact.stribeck_exponent);
    c.number("tanh_slope", s.contact.tanh_slope);
    c.number("min_impact_speed", s.contact.min_impact_speed);
    c.finish();
  }
  {
    auto a = top.child("aero");
    a.flag("enabled", s.aero.enabled);
    a.number("density", s.aero.density);
    a.finish();
  }
  {
    auto i = top.child("integrator");
    i.number("dt", s.integrator.dt, true);
    i.number("duration", s.integrator.duration, true);
    if (i.has("scheme"))
      s.integrator.scheme = parse_scheme(to_string(i.at("scheme"), i.path("scheme")), i.path("scheme"));
    i.flag("stability_check", s.integrator.stability_check);
    i.finish();
  }
  top.vec3("gravity", s.gravity);
  {
    auto c = top.child("capture");
    c.number("wrap_threshold", s.capture.wrap_threshold);
    c.number("speed_threshold", s.capture.speed_threshold);
    c.number("hold_time", s.capture.hold_time);
    c.number("grace_period", s.capture.grace_period);
    c.flag("terminate_on_capture", s.capture.terminate_on_capture);
    c.finish();
  }
  {
    auto o = top.child("output");
    o.text("directory", s.output.directory);
    o.number("interval", s.output.interval);
    o.finish();
  }
  if (top.has("seed")) {
    const auto node = root["seed"];
    try {
      s.seed = node.as<std::uint64_t>();
    } catch (const YAML::Exception&) {
      throw ConfigError("expected a non-negative integer", "seed");
    }
  }
  top.finish();
  top.raise_if_any();
  return s;
}

// ---------------------------------------------------------------------------
// Emission

std::string num(double v) { return fmt::format("{}", v); }

YAML::Emitter& emit_vec(YAML::Emitter& out, const Vec3& v) {
  out << YAML::Flow << YAML::BeginSeq << num(v.x()) << num(v.y()) << num(v.z()) << YAML::EndSeq;
  return out;
}

template <typename T>
void kv(YAML::Emitter& out, const char* key, const T& value) {
  out << YAML::Key << key << YAML::Value << value;
}

void kv_num(YAML::Emitter& out, const char* key, double value) { kv(out, key, num(value)); }

void kv_vec(YAML::Emitter& out, const char* key, const Vec3& value) {
  out << YAML::Key << key << YAML::Value;
  emit_vec(out, value);
}

// Lumped masses: half of every incident element's line mass, plus the robot.
std::vector<double> lumped_masses(std::size_t node_count, const std::vector<TetherElement>& elements,
                                  const TetherMaterial& material) {
  std::vector<double> m(node_count, 0.0);
  for (const auto& e : elements) {
    const double half = 0.5 * element_mass(material, e.rest_length);
    m[e.i] += half;
    m[e.j] += half;
  }
  return m;
}

void finish_elements(std::vector<TetherElement>& elements, const TetherMaterial& material) {
  for (auto& e : elements) {
    e.stiffness = element_stiffness(material, e.rest_length);
    e.damping = element_damping(material, element_mass(material, e.rest_length), e.stiffness);
  }
}

Vec3 approach_direction(const Scenario& s) {
  if (s.initial_velocity.norm() > 0.0) return s.initial_velocity.normalized();
  if (s.net.x.plane_normal && s.net.x.plane_normal->norm() > 0.0)
    return -s.net.x.plane_normal->normalized();
  throw ConfigError("needs a non-zero initial_velocity or net.plane_normal", "initial_velocity");
}

}  // namespace

// ---------------------------------------------------------------------------

XConfiguration generate_x_configuration(const XConfigSpec& spec, const TetherMaterial& material,
                                        const RobotSpec& robots, const Vec3& center,
                                        const Vec3& velocity, std::optional<double> node_radius) {
  if (spec.arm_count < 1) throw ConfigError("must be >= 1", "net.arm_count");
  if (spec.nodes_total < spec.arm_count + 1 || (spec.nodes_total - 1) % spec.arm_count != 0)
    throw ConfigError(fmt::format("must equal {}k + 1 for a positive integer k, got {}",
                                  spec.arm_count, spec.nodes_total),
                      "net.nodes_total");
  if (!(spec.arm_length > 0.0)) throw ConfigError("must be > 0", "net.arm_length");

  Vec3 normal = spec.plane_normal.value_or(velocity);
  if (!(normal.norm() > 0.0))
    throw ConfigError("deployment plane normal is undefined", "net.plane_normal");
  normal.normalize();
  // In-plane reference axis: the world axis least aligned with the normal.
  Eigen::Index axis = 0;
  normal.cwiseAbs().minCoeff(&axis);
  const Vec3 u = (Vec3::Unit(axis) - normal[axis] * normal).normalized();
  const Vec3 w = normal.cross(u);

  const int per_arm = (spec.nodes_total - 1) / spec.arm_count;
  const double rest = spec.arm_length / per_arm;

  XConfiguration out;
  const double radius = node_radius.value_or(material.diameter / 2.0);
  auto add_node = [&](const Vec3& p) {
    TetherNode n;
    n.id = static_cast<int>(out.nodes.size());
    n.position = p;
    n.velocity = velocity;
    n.radius = radius;
    out.nodes.push_back(n);
    return n.id;
  };
  const int hub = add_node(center);
  for (int a = 0; a < spec.arm_count; ++a) {
    const double angle = (spec.arm_azimuth_deg + 360.0 * a / spec.arm_count) * kDegToRad;
    const Vec3 dir = std::cos(angle) * u + std::sin(angle) * w;
    int prev = hub;
    for (int s = 1; s <= per_arm; ++s) {
      const int id = add_node(center + (s * rest) * dir);
      // Rounding in the positions can leave a segment an ulp long; never
      // start under tension.
      const double length = (out.nodes[id].position - out.nodes[prev].position).norm();
      out.elements.push_back(TetherElement{prev, id, std::max(rest, length), 0.0, 0.0});
      prev = id;
    }
    out.robots.push_back(prev);
  }
  finish_elements(out.elements, material);
  const auto mass = lumped_masses(out.nodes.size(), out.elements, material);
  for (auto& n : out.nodes) n.mass = mass[n.id];
  for (int r : out.robots) {
    out.nodes[r].is_robot = true;
    out.nodes[r].mass += robots.mass;
    out.nodes[r].radius = robots.radius;
  }
  return out;
}

TetherNetwork build_network(const Scenario& s) {
  std::vector<TetherNode> nodes;
  std::vector<TetherElement> elements;
  if (s.net.generator == "x_configuration") {
    const Vec3 dir = approach_direction(s);
    const Vec3 center = s.target.position - s.net.x.hub_offset * dir + s.net.x.aim_offset;
    auto x = generate_x_configuration(s.net.x, s.tether, s.robots, center, s.initial_velocity,
                                      s.net.node_radius);
    nodes = std::move(x.nodes);
    elements = std::move(x.elements);
  } else if (s.net.generator == "explicit") {
    const int n = static_cast<int>(s.net.nodes.size());
    for (int k = 0; k < n; ++k) {
      TetherNode node;
      node.id = k;
      node.position = s.net.nodes[k].position;
      node.velocity = s.initial_velocity;
      node.is_robot = s.net.nodes[k].robot;
      node.radius = node.is_robot ? s.robots.radius
                                  : s.net.node_radius.value_or(s.tether.diameter / 2.0);
      nodes.push_back(node);
    }
    for (std::size_t k = 0; k < s.net.elements.size(); ++k) {
      const auto& e = s.net.elements[k];
      if (e.i < 0 || e.i >= n || e.j < 0 || e.j >= n)
        throw ConfigError(fmt::format("element {} references an unknown node", k), "net.elements");
      const double rest = e.rest_length.value_or((nodes[e.i].position - nodes[e.j].position).norm());
      elements.push_back(TetherElement{e.i, e.j, rest, 0.0, 0.0});
    }
    for (const auto& e : elements)
      if (!(e.rest_length > 0.0)) throw ConfigError("rest length must be > 0", "net.elements");
    finish_elements(elements, s.tether);
    const auto mass = lumped_masses(nodes.size(), elements, s.tether);
    for (auto& node : nodes) node.mass = mass[node.id] + (node.is_robot ? s.robots.mass : 0.0);
  } else {
    throw ConfigError("expected 'x_configuration' or 'explicit', got '" + s.net.generator + "'",
                      "net.generator");
  }

  if (s.net.velocity_jitter > 0.0) {
    std::mt19937_64 rng(s.seed);
    auto uniform = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    for (auto& node : nodes)
      for (int k = 0; k < 3; ++k) node.velocity[k] += s.net.velocity_jitter * (2.0 * uniform() - 1.0);
  }
  return TetherNetwork(std::move(nodes), std::move(elements), s.tether);
}

ConvexPolyhedron build_hull(const Scenario& s) {
  if (s.target.geometry == "box") return ConvexPolyhedron::box(s.target.size);
  if (s.target.geometry == "polyhedron") return ConvexPolyhedron(s.target.vertices, s.target.faces);
  throw ConfigError("expected 'box' or 'polyhedron', got '" + s.target.geometry + "'",
                    "target.geometry.type");
}

TargetBodyState build_target(const Scenario& s) {
  TargetBodyState t;
  t.position = s.target.position;
  const auto& q = s.target.orientation;
  t.orientation = Quat(q[0], q[1], q[2], q[3]);
  t.linear_velocity = s.target.linear_velocity;
  t.angular_velocity = s.target.angular_velocity_deg * kDegToRad;
  t.mode = s.target.mode;
  t.mass = s.target.mass;
  t.inertia = s.target.inertia;
  return t;
}

Model build_model(const Scenario& s) {
  Model m;
  m.net = build_network(s);
  m.hull = build_hull(s);
  m.contact = s.contact;
  m.aero = s.aero;
  m.gravity = s.gravity;
  return m;
}

void validate(const Scenario& s) {
  std::vector<std::string> problems;
  auto check = [&](auto&& fn) {
    try {
      fn();
    } catch (const ConfigError& e) {
      problems.emplace_back(e.what());
    }
  };

  check([&] { s.tether.validate(); });
  check([&] { s.contact.validate(); });
  check([&] { s.capture.validate(); });
  check([&] {
    if (!(s.robots.mass >= 0.0)) throw ConfigError("must be >= 0", "robots.mass");
    if (!(s.robots.radius > 0.0)) throw ConfigError("must be > 0", "robots.radius");
  });
  check([&] {
    if (s.net.node_radius && !(*s.net.node_radius > 0.0)) throw ConfigError("must be > 0", "net.node_radius");
    if (!(s.net.velocity_jitter >= 0.0)) throw ConfigError("must be >= 0", "net.velocity_jitter");
  });
  check([&] {
    if (!s.initial_velocity.allFinite()) throw ConfigError("must be finite", "initial_velocity");
    if (!s.gravity.allFinite()) throw ConfigError("must be finite", "gravity");
  });
  check([&] {
    if (!(s.aero.density >= 0.0)) throw ConfigError("must be >= 0", "aero.density");
  });

  std::optional<TetherNetwork> net;
  check([&] {
    s.tether.validate();
    net = build_network(s);
  });
  if (net && static_cast<int>(net->robots().size()) != s.robots.count)
    problems.push_back(fmt::format("robots.count: {} does not match the {} robot nodes in the net",
                                   s.robots.count, net->robots().size()));

  check([&] {
    build_hull(s);
    validate(build_target(s));
  });

  check([&] {
    const auto& in = s.integrator;
    if (!(in.dt > 0.0)) throw ConfigError("must be > 0", "integrator.dt");
    if (!(in.duration >= 0.0)) throw ConfigError("must be >= 0", "integrator.duration");
    if (in.scheme == Scheme::rk4 && s.target.mode == TargetMode::dynamic)
      throw ConfigError("rk4 supports kinematic targets only", "integrator.scheme");
    const double steps = in.duration / in.dt;
    if (std::abs(steps - std::round(steps)) > 1e-6 * std::max(1.0, steps))
      throw ConfigError("duration must be a whole number of steps", "integrator.duration");
  });
  if (net && s.integrator.stability_check && s.integrator.dt > 0.0) {
    const double bound = stable_step_bound(*net);
    if (s.integrator.dt > bound)
      problems.push_back(fmt::format(
          "integrator.dt: {} s exceeds the stability bound {:.6g} s (0.2 / omega_max, "
          "omega_max = {:.6g} rad/s)",
          s.integrator.dt, bound, net->max_element_frequency()));
  }
  check([&] {
    if (!(s.output.interval > 0.0)) throw ConfigError("must be > 0", "output.interval");
    if (s.integrator.dt > 0.0) {
      const double ratio = s.output.interval / s.integrator.dt;
      if (ratio < 1.0 - 1e-9 || std::abs(ratio - std::round(ratio)) > 1e-6 * ratio)
        throw ConfigError("must be a whole multiple of integrator.dt", "output.interval");
    }
  });

  if (!problems.empty()) {
    std::string msg = "invalid scenario:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ConfigError(msg);
  }
}

void validate_output_path(const Scenario& s) {
  if (s.output.directory.empty()) return;
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(s.output.directory, ec);
  if (ec) throw IoError("cannot create output directory '" + s.output.directory + "': " + ec.message());
  const fs::path probe = fs::path(s.output.directory) / ".tethercap_write_probe";
  {
    std::ofstream f(probe);
    if (!f) throw IoError("output directory '" + s.output.directory + "' is not writable");
  }
  fs::remove(probe, ec);
}

Scenario parse_scenario(std::string_view yaml, std::span<const std::string> overrides) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml));
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("parse error: ") + e.what());
  }
  if (root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  if (!root.IsMap()) throw ConfigError("top level must be a mapping");
  for (const auto& o : overrides) apply_override(root, o);
  Scenario s = parse_document(root);
  validate(s);
  return s;
}

Scenario load_scenario(const std::filesystem::path& path, std::span<const std::string> overrides) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario file '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), overrides);
}

std::string serialize_scenario(const Scenario& s) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  kv(out, "schema", std::string(kScenarioSchema));
  kv(out, "name", s.name);

  out << YAML::Key << "tether" << YAML::Value << YAML::BeginMap;
  kv_num(out, "youngs_modulus", s.tether.youngs_modulus);
  kv_num(out, "density", s.tether.density);
  kv_num(out, "diameter", s.tether.diameter);
  kv_num(out, "damping_ratio", s.tether.damping_ratio);
  kv_num(out, "drag_coefficient", s.tether.drag_coefficient);
  out << YAML::EndMap;

  out << YAML::Key << "net" << YAML::Value << YAML::BeginMap;
  kv(out, "generator", s.net.generator);
  kv(out, "arm_count", s.net.x.arm_count);
  kv(out, "nodes_total", s.net.x.nodes_total);
  kv_num(out, "arm_length", s.net.x.arm_length);
  kv_num(out, "hub_offset", s.net.x.hub_offset);
  if (s.net.x.plane_normal) kv_vec(out, "plane_normal", *s.net.x.plane_normal);
  kv_num(out, "arm_azimuth_deg", s.net.x.arm_azimuth_deg);
  kv_vec(out, "aim_offset", s.net.x.aim_offset);
  if (s.net.node_radius) kv_num(out, "node_radius", *s.net.node_radius);
  kv_num(out, "velocity_jitter", s.net.velocity_jitter);
  if (!s.net.nodes.empty()) {
    out << YAML::Key << "nodes" << YAML::Value << YAML::BeginSeq;
    for (const auto& n : s.net.nodes) {
      out << YAML::Flow << YAML::BeginMap;
      kv_vec(out, "position", n.position);
      kv(out, "robot", n.robot);
      out << YAML::EndMap;
    }
    out << YAML::EndSeq;
  }
  if (!s.net.elements.empty()) {
    out << YAML::Key << "elements" << YAML::Value << YAML::BeginSeq;
    for (const auto& e : s.net.elements) {
      out << YAML::Flow << YAML::BeginMap;
      kv(out, "i", e.i);
      kv(out, "j", e.j);
      if (e.rest_length) kv_num(out, "rest_length", *e.rest_length);
      out << YAML::EndMap;
    }
    out << YAML::EndSeq;
  }
  out << YAML::EndMap;

  out << YAML::Key << "robots" << YAML::Value << YAML::BeginMap;
  kv(out, "count", s.robots.count);
  kv_num(out, "mass", s.robots.mass);
  kv_num(out, "radius", s.robots.radius);
  out << YAML::EndMap;

  kv_vec(out, "initial_velocity", s.initial_velocity);

  out << YAML::Key << "target" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "geometry" << YAML::Value << YAML::BeginMap;
  kv(out, "type", s.target.geometry);
  kv_vec(out, "size", s.target.size);
  if (!s.target.vertices.empty()) {
    out << YAML::Key << "vertices" << YAML::Value << YAML::BeginSeq;
    for (const auto& v : s.target.vertices) emit_vec(out, v);
    out << YAML::EndSeq;
  }
  if (!s.target.faces.empty()) {
    out << YAML::Key << "faces" << YAML::Value << YAML::BeginSeq;
    for (const auto& f : s.target.faces) out << YAML::Flow << f;
    out << YAML::EndSeq;
  }
  out << YAML::EndMap;
  kv_vec(out, "position", s.target.position);
  out << YAML::Key << "orientation" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (int k = 0; k < 4; ++k) out << num(s.target.orientation[k]);
  out << YAML::EndSeq;
  kv_vec(out, "linear_velocity", s.target.linear_velocity);
  kv_vec(out, "angular_velocity_deg", s.target.angular_velocity_deg);
  kv(out, "mode", std::string(s.target.mode == TargetMode::dynamic ? "dynamic" : "kinematic"));
  kv_num(out, "mass", s.target.mass);
  out << YAML::Key << "inertia" << YAML::Value << YAML::BeginSeq;
  for (int r = 0; r < 3; ++r) emit_vec(out, s.target.inertia.row(r).transpose());
  out << YAML::EndSeq;
  out << YAML::EndMap;

  out << YAML::Key << "contact" << YAML::Value << YAML::BeginMap;
  kv_num(out, "stiffness", s.contact.stiffness);
  kv_num(out, "exponent", s.contact.exponent);
  kv_num(out, "restitution", s.contact.restitution);
  if (s.contact.damping) kv_num(out, "damping", *s.contact.damping);
  kv_num(out, "static_friction", s.contact.static_friction);
  kv_num(out, "dynamic_friction", s.contact.dynamic_friction);
  kv_num(out, "stribeck_velocity", s.contact.stribeck_velocity);
  kv_num(out, "stribeck_exponent", s.contact.stribeck_exponent);
  kv_num(out, "tanh_slope", s.contact.tanh_slope);
  kv_num(out, "min_impact_speed", s.contact.min_impact_speed);
  out << YAML::EndMap;

  out << YAML::Key << "aero" << YAML::Value << YAML::BeginMap;
  kv(out, "enabled", s.aero.enabled);
  kv_num(out, "density", s.aero.density);
  out << YAML::EndMap;

  out << YAML::Key << "integrator" << YAML::Value << YAML::BeginMap;
  kv_num(out, "dt", s.integrator.dt);
  kv_num(out, "duration", s.integrator.duration);
  kv(out, "scheme",
     std::string(s.integrator.scheme == Scheme::rk4 ? "rk4" : "semi_implicit_euler"));
  kv(out, "stability_check", s.integrator.stability_check);
  out << YAML::EndMap;

  kv_vec(out, "gravity", s.gravity);

  out << YAML::Key << "capture" << YAML::Value << YAML::BeginMap;
  kv_num(out, "wrap_threshold", s.capture.wrap_threshold);
  kv_num(out, "speed_threshold", s.capture.speed_threshold);
  kv_num(out, "hold_time", s.capture.hold_time);
  kv_num(out, "grace_period", s.capture.grace_period);
  kv(out, "terminate_on_capture", s.capture.terminate_on_capture);
  out << YAML::EndMap;

  out << YAML::Key << "output" << YAML::Value << YAML::BeginMap;
  kv(out, "directory", s.output.directory);
  kv_num(out, "interval", s.output.interval);
  out << YAML::EndMap;

  kv(out, "seed", s.seed);
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

ResolvedParameters resolve_parameters(const Scenario& s) {
  const TetherNetwork net = build_network(s);
  ResolvedParameters r;
  r.node_count = net.size();
  r.element_count = net.elements().size();
  for (const auto& e : net.elements()) {
    r.element_stiffness.push_back(e.stiffness);
    r.element_damping.push_back(e.damping);
  }
  for (const auto& n : net.nodes()) {
    r.node_mass.push_back(n.mass);
    r.total_mass += n.mass;
  }
  r.stable_dt = stable_step_bound(net);
  r.cross_section = s.tether.cross_section();
  r.angular_velocity_rad = s.target.angular_velocity_deg * kDegToRad;
  return r;
}

}  // namespace tethercap
