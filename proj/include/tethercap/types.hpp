#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace tethercap {

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;

using Vec3 = Vector3<double>;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

/// Column-major 3xN block of per-node vectors (positions, velocities, forces).
using NodeArray = Eigen::Matrix3Xd;

/// Scenario or geometry input that fails validation. `field` is the dotted
/// path of the offending scenario field when one applies.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what, std::string field = {})
      : std::runtime_error(field.empty() ? what : field + ": " + what),
        field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Raised when the state picks up a NaN/Inf.
class InstabilityError : public std::runtime_error {
 public:
  InstabilityError(const std::string& what, std::int64_t step, int node)
      : std::runtime_error(what), step_(step), node_(node) {}

  std::int64_t step() const noexcept { return step_; }
  /// Offending node id, or -1 for the target body.
  int node() const noexcept { return node_; }

 private:
  std::int64_t step_;
  int node_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Counters for degenerate or clamped cases met while evaluating forces.
struct Diagnostics {
  std::int64_t degenerate_elements = 0;
  std::int64_t degenerate_aero_segments = 0;
  std::int64_t slack_elements = 0;
  std::int64_t gjk_fallbacks = 0;
  std::int64_t clamped_normal_forces = 0;
  std::int64_t invalid_compression_rates = 0;
  std::int64_t ignored_wrenches = 0;

  Diagnostics& operator+=(const Diagnostics& o) {
    degenerate_elements += o.degenerate_elements;
    degenerate_aero_segments += o.degenerate_aero_segments;
    slack_elements += o.slack_elements;
    gjk_fallbacks += o.gjk_fallbacks;
    clamped_normal_forces += o.clamped_normal_forces;
    invalid_compression_rates += o.invalid_compression_rates;
    ignored_wrenches += o.ignored_wrenches;
    return *this;
  }

  bool operator==(const Diagnostics&) const = default;
};

}  // namespace tethercap
