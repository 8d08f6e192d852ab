#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <fmt/format.h>

#include "tethercap/run.hpp"
#include "tethercap/scenario.hpp"

namespace testing_support {

inline std::filesystem::path scenario_dir() { return TETHERCAP_SCENARIO_DIR; }

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            fmt::format("tethercap_{}_{}", tag, reinterpret_cast<std::uintptr_t>(this));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Minimal valid scenario text: required fields only, plus whatever the
/// caller appends. Small net, short run.
inline std::string minimal_yaml(const std::string& extra = "") {
  return R"(
tether: {youngs_modulus: 25.0e9, density: 1390.0, damping_ratio: 0.3}
initial_velocity: [0.0, -15.0, 0.0]
contact: {stiffness: 500.0, static_friction: 0.7, dynamic_friction: 0.5}
integrator: {dt: 8.0e-6, duration: 0.0}
)" + extra;
}

/// One robot sphere above a resting box: a drop test.
inline std::string drop_yaml(double restitution, double dt, double height = 0.3,
                             double speed = 1.0) {
  return fmt::format(R"(
name: drop
tether: {{youngs_modulus: 25.0e9, density: 1390.0, damping_ratio: 0.0}}
net:
  generator: explicit
  nodes:
    - {{position: [0.0, 0.0, {}], robot: true}}
robots: {{count: 1, mass: 1.0, radius: 0.1}}
initial_velocity: [0.0, 0.0, {}]
target:
  geometry: {{type: box, size: [1.0, 1.0, 0.2]}}
contact:
  stiffness: 2.0e4
  restitution: {}
  static_friction: 0.0
  dynamic_friction: 0.0
integrator: {{dt: {}, duration: 0.8}}
output: {{interval: {}}}
capture: {{terminate_on_capture: false}}
)",
                     height, -speed, restitution, dt, dt);
}

}  // namespace testing_support
