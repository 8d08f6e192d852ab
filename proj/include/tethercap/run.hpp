#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "tethercap/engine.hpp"
#include "tethercap/scenario.hpp"

namespace tethercap {

struct TrajectorySample {
  double time = 0.0;
  NodeArray x;
  NodeArray v;
  TargetBodyState target;
};

enum class EventPhase { begin, active, end };

struct LoggedEvent {
  EventPhase phase = EventPhase::active;
  ContactEvent contact;  // only node and time are meaningful for `end`
};

enum class RunStatus { completed, captured, diverged };

struct RunResult {
  RunStatus status = RunStatus::completed;
  std::string failure;  // instability diagnostic when diverged
  std::int64_t steps = 0;
  double final_time = 0.0;
  double wall_seconds = 0.0;
  std::vector<TrajectorySample> trajectory;
  std::vector<LoggedEvent> events;
  CaptureMetrics metrics;
  Diagnostics diagnostics;
  SimState final_state;
};

/// Called after every step with the post-step state and what happened during it.
using StepObserver = std::function<void(const SimState&, const StepOutput&)>;

/// Runs a validated scenario from t = 0 until its duration, capture plus the
/// grace period, or divergence. Identical scenarios give identical results.
RunResult run(const Scenario& scenario, const StepObserver& observer = {});

/// Writes trajectory.csv, events.csv, metrics.json and manifest.yaml into `dir`.
void write_outputs(const RunResult& result, const Scenario& scenario,
                   const std::filesystem::path& dir);

std::string trajectory_csv(const RunResult& result);
std::string events_csv(const RunResult& result);
std::string metrics_json(const RunResult& result, const Scenario& scenario);
std::string manifest_yaml(const Scenario& scenario);

const char* to_string(RunStatus status);

}  // namespace tethercap
