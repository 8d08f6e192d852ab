#include <fstream>

#include <fmt/format.h>
#include <json.hpp>

#include "tethercap/run.hpp"

namespace tethercap {

namespace {

constexpr const char* kTrajectorySchema = "tethercap-trajectory/1";
constexpr const char* kEventsSchema = "tethercap-events/1";
constexpr const char* kMetricsSchema = "tethercap-metrics/1";
constexpr const char* kManifestSchema = "tethercap-manifest/1";

const char* phase_name(EventPhase p) {
  switch (p) {
    case EventPhase::begin: return "begin";
    case EventPhase::active: return "active";
    case EventPhase::end: return "end";
  }
  return "?";
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write '" + path.string() + "'");
  f << text;
  if (!f) throw IoError("failed writing '" + path.string() + "'");
}

nlohmann::json optional_number(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

std::string trajectory_csv(const RunResult& result) {
  std::string out = fmt::format("# {}\ntime,body,id,x,y,z,vx,vy,vz,qw,qx,qy,qz\n", kTrajectorySchema);
  auto line = std::back_inserter(out);
  for (const auto& s : result.trajectory) {
    for (Eigen::Index k = 0; k < s.x.cols(); ++k) {
      const auto x = s.x.col(k);
      const auto v = s.v.col(k);
      fmt::format_to(line, "{},node,{},{},{},{},{},{},{},,,,\n", s.time, k, x[0], x[1], x[2], v[0],
                     v[1], v[2]);
    }
    const auto& t = s.target;
    const auto& q = t.orientation;
    fmt::format_to(line, "{},target,-1,{},{},{},{},{},{},{},{},{},{}\n", s.time, t.position[0],
                   t.position[1], t.position[2], t.linear_velocity[0], t.linear_velocity[1],
                   t.linear_velocity[2], q.w(), q.x(), q.y(), q.z());
  }
  return out;
}

std::string events_csv(const RunResult& result) {
  std::string out = fmt::format(
      "# {}\ntime,phase,node,face,depth,depth_rate,impact_speed,px,py,pz,nx,ny,nz,"
      "slip_x,slip_y,slip_z,fn_x,fn_y,fn_z,ft_x,ft_y,ft_z\n",
      kEventsSchema);
  auto line = std::back_inserter(out);
  for (const auto& e : result.events) {
    const auto& c = e.contact;
    if (e.phase == EventPhase::end) {
      fmt::format_to(line, "{},end,{},,,,,,,,,,,,,,,,,,,\n", c.time, c.node);
      continue;
    }
    fmt::format_to(line, "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                   c.time, phase_name(e.phase), c.node, c.face, c.depth, c.depth_rate,
                   c.impact_speed, c.point[0], c.point[1], c.point[2], c.normal[0], c.normal[1],
                   c.normal[2], c.slip_velocity[0], c.slip_velocity[1], c.slip_velocity[2],
                   c.normal_force[0], c.normal_force[1], c.normal_force[2], c.friction_force[0],
                   c.friction_force[1], c.friction_force[2]);
  }
  return out;
}

std::string metrics_json(const RunResult& result, const Scenario& scenario) {
  const auto& m = result.metrics;
  const auto& d = result.diagnostics;
  nlohmann::ordered_json j;
  j["schema"] = kMetricsSchema;
  j["scenario"] = scenario.name;
  j["status"] = to_string(result.status);
  j["failure"] = result.failure;
  j["steps"] = result.steps;
  j["final_time"] = result.final_time;
  j["wall_seconds"] = result.wall_seconds;
  j["captured"] = m.captured;
  j["capture_time"] = optional_number(m.capture_time);
  j["first_contact_time"] = optional_number(m.first_contact_time);
  j["faces_in_contact_max"] = m.faces_in_contact_max;
  j["wrap_score"] = m.wrap_score;
  j["max_wrap_score"] = m.max_wrap_score;
  j["robot_relative_speed"] = m.robot_relative_speed;
  j["diagnostics"] = {
      {"degenerate_elements", d.degenerate_elements},
      {"degenerate_aero_segments", d.degenerate_aero_segments},
      {"slack_elements", d.slack_elements},
      {"gjk_fallbacks", d.gjk_fallbacks},
      {"clamped_normal_forces", d.clamped_normal_forces},
      {"invalid_compression_rates", d.invalid_compression_rates},
      {"ignored_wrenches", d.ignored_wrenches},
  };
  return j.dump(2) + "\n";
}

std::string manifest_yaml(const Scenario& scenario) {
  return fmt::format("# {}\n", kManifestSchema) + serialize_scenario(scenario);
}

void write_outputs(const RunResult& result, const Scenario& scenario,
                   const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
  write_file(dir / "trajectory.csv", trajectory_csv(result));
  write_file(dir / "events.csv", events_csv(result));
  write_file(dir / "metrics.json", metrics_json(result, scenario));
  write_file(dir / "manifest.yaml", manifest_yaml(scenario));
}

}  // namespace tethercap
