#include <cmath>
#include <cstdlib>
#include <sys/wait.h>

#include <gtest/gtest.h>
#include <json.hpp>

#include "support.hpp"
#include "tethercap/tether.hpp"

using namespace testing_support;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

CliResult cli(const std::string& args, const TempDir& dir) {
  const auto out = dir.path() / "stdout.txt";
  const auto err = dir.path() / "stderr.txt";
  const std::string cmd = fmt::format("\"{}\" {} > \"{}\" 2> \"{}\"", TETHERCAP_CLI, args,
                                      out.string(), err.string());
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_file(out);
  r.err = read_file(err);
  return r;
}

bool contains(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

// Small net, a few hundred steps: cheap enough to run many times.
std::string quick_scenario() {
  return minimal_yaml(R"(
name: quick
net: {nodes_total: 41, arm_length: 2.0, hub_offset: 0.8}
)") + "output: {interval: 0.002}\n";
}

std::string quick_yaml_with_duration(double duration) {
  auto s = quick_scenario();
  const auto pos = s.find("duration: 0.0");
  s.replace(pos, 13, fmt::format("duration: {}", duration));
  return s;
}

}  // namespace

TEST(Cli, HelpListsEveryVerbAndFlag) {
  TempDir dir("help");
  const auto top = cli("--help", dir);
  EXPECT_EQ(top.code, 0);
  for (const char* verb : {"run", "sweep", "validate"}) EXPECT_TRUE(contains(top.out, verb)) << verb;

  const auto run = cli("run --help", dir);
  for (const char* flag : {"--override", "--out", "--json", "--log-interval"})
    EXPECT_TRUE(contains(run.out, flag)) << flag;
  const auto sweep = cli("sweep --help", dir);
  for (const char* flag : {"--override", "--out", "--workers", "--json", "--log-interval"})
    EXPECT_TRUE(contains(sweep.out, flag)) << flag;
  const auto validate = cli("validate --help", dir);
  for (const char* flag : {"--override", "--json"}) EXPECT_TRUE(contains(validate.out, flag)) << flag;
}

TEST(Cli, MissingVerbIsAUsageError) {
  TempDir dir("usage");
  EXPECT_EQ(cli("", dir).code, 1);
  EXPECT_EQ(cli("launch x.yaml", dir).code, 1);
}

TEST(Cli, StabilityViolationExitsTwoAndPrintsTheBound) {
  TempDir dir("dt");
  const auto r = cli(fmt::format("run \"{}\" --override integrator.dt=1",
                                 (scenario_dir() / "capture_static.yaml").string()),
                     dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_TRUE(contains(r.err, "integrator.dt")) << r.err;
  EXPECT_TRUE(contains(r.err, "stability bound 9.43")) << r.err;
}

TEST(Cli, MissingFileExitsFour) {
  TempDir dir("missing");
  EXPECT_EQ(cli("run /nonexistent/scenario.yaml", dir).code, 4);
  EXPECT_EQ(cli("validate /nonexistent/scenario.yaml", dir).code, 4);
}

TEST(Cli, InvalidFileNamesTheFields) {
  TempDir dir("invalid");
  write_file(dir.path() / "bad.yaml", minimal_yaml("robots: {mass: -1.0}\n"));
  const auto r = cli(fmt::format("validate \"{}\" -o contact.dynamic_friction=0.9",
                                 (dir.path() / "bad.yaml").string()),
                     dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_TRUE(contains(r.err, "robots.mass")) << r.err;
  EXPECT_TRUE(contains(r.err, "contact.dynamic_friction")) << r.err;
}

TEST(Cli, DivergenceExitsThree) {
  TempDir dir("diverge");
  write_file(dir.path() / "pair.yaml", R"(
tether: {youngs_modulus: 25.0e9, density: 1390.0, damping_ratio: 0.0}
net:
  generator: explicit
  nodes:
    - {position: [50.0, 0.0, 0.0], robot: true}
    - {position: [51.1, 0.0, 0.0], robot: true}
  elements:
    - {i: 0, j: 1, rest_length: 1.0}
robots: {count: 2, mass: 1.0, radius: 0.05}
initial_velocity: [0.0, 0.0, 0.0]
contact: {stiffness: 500.0, static_friction: 0.7, dynamic_friction: 0.5}
integrator: {dt: 0.02, duration: 60.0, stability_check: false}
output: {interval: 0.02}
)");
  const auto r = cli(fmt::format("run \"{}\"", (dir.path() / "pair.yaml").string()), dir);
  EXPECT_EQ(r.code, 3);
  EXPECT_TRUE(contains(r.out, "status=diverged")) << r.out;
  EXPECT_TRUE(contains(r.err, "non-finite")) << r.err;
}

TEST(Cli, ValidatePrintsDerivedValuesAndJson) {
  TempDir dir("validate");
  const auto file = (scenario_dir() / "capture_static.yaml").string();
  const auto text = cli(fmt::format("validate \"{}\"", file), dir);
  EXPECT_EQ(text.code, 0);
  EXPECT_TRUE(contains(text.out, "nodes 121  elements 120")) << text.out;

  const auto r = cli(fmt::format("validate \"{}\" --json", file), dir);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j.at("nodes"), 121);
  EXPECT_EQ(j.at("elements"), 120);
  // k = E A / l0 and d = 2 xi sqrt(m k) with m the element's line mass.
  const double area = 0.25 * std::acos(-1.0) * 1e-6;
  const double k = 25e9 * area / 0.2;
  const double d = 2.0 * 0.3 * std::sqrt(1390.0 * area * 0.2 * k);
  for (double v : j.at("element_stiffness")) EXPECT_NEAR(v, k, 1e-9 * k);
  for (double v : j.at("element_damping")) EXPECT_NEAR(v, d, 1e-9 * d);
  EXPECT_NEAR(j.at("stable_dt").get<double>(), 9.4314e-6, 1e-9);
}

TEST(Cli, RunWritesOutputsAndSummary) {
  TempDir dir("run");
  write_file(dir.path() / "quick.yaml", quick_yaml_with_duration(0.02));
  const auto out = dir.path() / "out";
  const auto r = cli(fmt::format("run \"{}\" --out \"{}\" --log-interval 0.004",
                                 (dir.path() / "quick.yaml").string(), out.string()),
                     dir);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(contains(r.out, "quick: status=completed captured=false")) << r.out;
  for (const char* f : {"trajectory.csv", "events.csv", "metrics.json", "manifest.yaml"})
    EXPECT_TRUE(std::filesystem::exists(out / f)) << f;
  // 0.02 s at 0.004 s per sample: 6 samples of 41 nodes plus the target.
  const auto traj = read_file(out / "trajectory.csv");
  EXPECT_EQ(std::count(traj.begin(), traj.end(), '\n'), 2 + 6 * 42);

  const auto json = cli(fmt::format("run \"{}\" --json", (dir.path() / "quick.yaml").string()), dir);
  ASSERT_EQ(json.code, 0);
  EXPECT_EQ(nlohmann::json::parse(json.out).at("captured"), false);
}

TEST(Cli, SweepRowsAndDeterminism) {
  TempDir dir("sweep");
  write_file(dir.path() / "quick.yaml", quick_yaml_with_duration(0.01));
  write_file(dir.path() / "sweep.yaml", R"(
schema: tethercap-sweep/1
base: quick.yaml
workers: 3
output: results
axes:
  - field: initial_velocity
    values: [[0, -5, 0], [0, -10, 0], [0, -15, 0], [0, -20, 0]]
  - field: target.angular_velocity_deg
    values: [[0, 0, 0], [1, 0.5, 0.2]]
)");
  const auto sweep = (dir.path() / "sweep.yaml").string();
  const auto a = cli(fmt::format("sweep \"{}\"", sweep), dir);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_TRUE(contains(a.err, "sweep: 8 runs on 3 workers")) << a.err;
  const auto table = read_file(dir.path() / "results" / "summary.csv");
  EXPECT_EQ(table, a.out);
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 2 + 8);
  EXPECT_TRUE(contains(table, "# tethercap-sweep-summary/1\n"));
  EXPECT_TRUE(contains(table, "run,initial_velocity,target.angular_velocity_deg,status,captured"));
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "results" / "run_0007" / "metrics.json"));

  // Rerun with a different worker count: identical bytes.
  const auto b = cli(fmt::format("sweep \"{}\" --workers 1", sweep), dir);
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(read_file(dir.path() / "results" / "summary.csv"), table);

  const auto j = cli(fmt::format("sweep \"{}\" --json", sweep), dir);
  ASSERT_EQ(j.code, 0);
  EXPECT_EQ(nlohmann::json::parse(j.out).size(), 8u);
}

TEST(Cli, SweepWithoutAxesRunsTheBase) {
  TempDir dir("sweep_empty");
  write_file(dir.path() / "quick.yaml", quick_yaml_with_duration(0.01));
  write_file(dir.path() / "sweep.yaml", "base: quick.yaml\naxes: []\n");
  const auto r = cli(fmt::format("sweep \"{}\"", (dir.path() / "sweep.yaml").string()), dir);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 2 + 1);
}

TEST(Cli, SweepRejectsNonNumericFields) {
  TempDir dir("sweep_bad");
  write_file(dir.path() / "quick.yaml", quick_yaml_with_duration(0.01));
  write_file(dir.path() / "sweep.yaml",
             "base: quick.yaml\naxes:\n  - {field: name, values: [1, 2]}\n");
  const auto r = cli(fmt::format("sweep \"{}\"", (dir.path() / "sweep.yaml").string()), dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_TRUE(contains(r.err, "axes[0]")) << r.err;
}

TEST(Cli, SweepRecordsFailedRunsPerRowAndStillSucceeds) {
  TempDir dir("sweep_rows");
  write_file(dir.path() / "quick.yaml", quick_yaml_with_duration(0.01));
  write_file(dir.path() / "sweep.yaml",
             "base: quick.yaml\naxes:\n  - {field: contact.dynamic_friction, values: [0.5, 0.9]}\n");
  const auto r = cli(fmt::format("sweep \"{}\"", (dir.path() / "sweep.yaml").string()), dir);
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(contains(r.out, "invalid")) << r.out;
  EXPECT_TRUE(contains(r.out, "completed")) << r.out;
}

TEST(Cli, BundledStaticScenarioCaptures) {
  TempDir dir("bundled");
  const auto r = cli(fmt::format("run \"{}\" --out \"{}\"",
                                 (scenario_dir() / "capture_static.yaml").string(),
                                 (dir.path() / "out").string()),
                     dir);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(contains(r.out, "capture_static: status=captured captured=true")) << r.out;
}
