// tethercap: run, sweep and validate tethered-net capture scenarios.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "tethercap/run.hpp"
#include "tethercap/scenario.hpp"
#include "tethercap/sweep.hpp"

namespace {

using namespace tethercap;

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kConfig = 2,
  kInstability = 3,
  kIo = 4,
};

struct Options {
  std::string input;
  std::vector<std::string> overrides;
  std::string out;
  int workers = 0;
  bool json = false;
  double log_interval = 0.0;
};

std::string opt_time(const std::optional<double>& t) {
  return t ? fmt::format("{}", *t) : std::string("none");
}

// --out and --log-interval are shorthands for the matching scenario fields,
// applied after the user's overrides so they win.
std::vector<std::string> scenario_overrides(const Options& o) {
  std::vector<std::string> all = o.overrides;
  if (!o.out.empty()) all.push_back("output.directory=\"" + o.out + "\"");
  if (o.log_interval > 0.0) all.push_back(fmt::format("output.interval={}", o.log_interval));
  return all;
}

int cmd_run(const Options& o) {
  const Scenario s = load_scenario(o.input, scenario_overrides(o));
  validate_output_path(s);
  const RunResult r = run(s);
  if (!s.output.directory.empty()) write_outputs(r, s, s.output.directory);

  if (o.json) {
    std::cout << metrics_json(r, s);
  } else {
    fmt::print("{}: status={} captured={} capture_time={} max_wrap_score={} wall={:.2f}s\n",
               s.name, to_string(r.status), r.metrics.captured, opt_time(r.metrics.capture_time),
               r.metrics.max_wrap_score, r.wall_seconds);
  }
  if (r.status == RunStatus::diverged) {
    fmt::print(stderr, "error: {}\n", r.failure);
    return kInstability;
  }
  return kOk;
}

int cmd_sweep(const Options& o) {
  SweepSpec spec = load_sweep(o.input);
  spec.overrides.insert(spec.overrides.end(), o.overrides.begin(), o.overrides.end());
  if (o.log_interval > 0.0) spec.overrides.push_back(fmt::format("output.interval={}", o.log_interval));
  if (!o.out.empty()) spec.output = o.out;
  if (o.workers > 0) spec.workers = o.workers;
  validate_sweep(spec);

  const std::size_t n = sweep_size(spec);
  fmt::print(stderr, "sweep: {} runs on {} workers\n", n, spec.workers);
  const auto rows = run_sweep(spec);
  const std::string table = sweep_summary_csv(spec, rows);

  if (!spec.output.empty()) {
    std::filesystem::create_directories(spec.output);
    std::ofstream f(spec.output / "summary.csv", std::ios::binary);
    if (!f || !(f << table)) throw IoError("cannot write '" + (spec.output / "summary.csv").string() + "'");
  }
  if (o.json) {
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
      nlohmann::ordered_json row;
      row["run"] = r.index;
      for (std::size_t k = 0; k < spec.axes.size(); ++k) row[spec.axes[k].field] = r.values[k];
      row["status"] = r.status;
      row["captured"] = r.captured;
      row["capture_time"] = r.capture_time ? nlohmann::ordered_json(*r.capture_time) : nullptr;
      row["max_wrap_score"] = r.max_wrap_score;
      row["final_time"] = r.final_time;
      row["error"] = r.error;
      j.push_back(row);
    }
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << table;
  }
  return kOk;
}

int cmd_validate(const Options& o) {
  const Scenario s = load_scenario(o.input, scenario_overrides(o));
  const ResolvedParameters p = resolve_parameters(s);

  if (o.json) {
    nlohmann::ordered_json j;
    j["scenario"] = s.name;
    j["nodes"] = p.node_count;
    j["elements"] = p.element_count;
    j["cross_section"] = p.cross_section;
    j["total_mass"] = p.total_mass;
    j["dt"] = s.integrator.dt;
    j["stable_dt"] = p.stable_dt;
    j["steps"] = s.integrator.step_count();
    j["angular_velocity_rad"] = {p.angular_velocity_rad[0], p.angular_velocity_rad[1],
                                 p.angular_velocity_rad[2]};
    j["element_stiffness"] = p.element_stiffness;
    j["element_damping"] = p.element_damping;
    j["node_mass"] = p.node_mass;
    std::cout << j.dump(2) << "\n";
    return kOk;
  }

  fmt::print("scenario {}: valid\n", s.name);
  fmt::print("  nodes {}  elements {}  total mass {} kg\n", p.node_count, p.element_count,
             p.total_mass);
  fmt::print("  tether cross section {} m^2\n", p.cross_section);
  fmt::print("  dt {} s  stable bound {} s  steps {}\n", s.integrator.dt, p.stable_dt,
             s.integrator.step_count());
  fmt::print("  target angular velocity [{}, {}, {}] rad/s\n", p.angular_velocity_rad[0],
             p.angular_velocity_rad[1], p.angular_velocity_rad[2]);
  fmt::print("element  k [N/m]  d [N s/m]\n");
  for (std::size_t e = 0; e < p.element_count; ++e)
    fmt::print("{:6d}  {}  {}\n", e, p.element_stiffness[e], p.element_damping[e]);
  fmt::print("node  mass [kg]\n");
  for (std::size_t i = 0; i < p.node_count; ++i) fmt::print("{:4d}  {}\n", i, p.node_mass[i]);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tethered-net satellite capture simulator"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* cmd, const char* what) {
    cmd->add_option("file", o.input, what)->required();
    cmd->add_option("--override,-o", o.overrides,
                    "KEY=VALUE on a dotted scenario path, e.g. contact.stiffness=800 (repeatable)");
    cmd->add_flag("--json", o.json, "machine-readable output on stdout");
  };

  auto* run_cmd = app.add_subcommand("run", "run one scenario and write its logs");
  add_common(run_cmd, "scenario file");
  run_cmd->add_option("--out", o.out, "output directory (output.directory)");
  run_cmd->add_option("--log-interval", o.log_interval,
                      "seconds between trajectory samples (output.interval)")
      ->check(CLI::PositiveNumber);

  auto* sweep_cmd = app.add_subcommand("sweep", "run the Cartesian product of a sweep file");
  add_common(sweep_cmd, "sweep file");
  sweep_cmd->add_option("--out", o.out, "sweep output directory (sweep 'output')");
  sweep_cmd->add_option("--workers", o.workers, "parallel runs (sweep 'workers')")
      ->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--log-interval", o.log_interval,
                        "seconds between trajectory samples (output.interval)")
      ->check(CLI::PositiveNumber);

  auto* validate_cmd = app.add_subcommand("validate", "check a scenario and print derived values");
  add_common(validate_cmd, "scenario file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*run_cmd) return cmd_run(o);
    if (*sweep_cmd) return cmd_sweep(o);
    return cmd_validate(o);
  } catch (const ConfigError& e) {
    const std::string field = e.field().empty() ? "" : e.field() + ": ";
    fmt::print(stderr, "error: {}{}\n", field, e.what());
    return kConfig;
  } catch (const IoError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kIo;
  } catch (const std::filesystem::filesystem_error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kIo;
  }
}
