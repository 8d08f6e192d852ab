#include "tethercap/run.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace tethercap {

const char* to_string(RunStatus status) {
  switch (status) {
    case RunStatus::completed: return "completed";
    case RunStatus::captured: return "captured";
    case RunStatus::diverged: return "diverged";
  }
  return "unknown";
}

RunResult run(const Scenario& scenario, const StepObserver& observer) {
  const auto wall_start = std::chrono::steady_clock::now();
  const Simulator sim(build_model(scenario), scenario.integrator);
  SimState state = sim.initial_state(build_target(scenario));
  CaptureTracker tracker(scenario.capture, static_cast<int>(sim.model().hull.faces().size()));

  RunResult result;
  const std::int64_t total = scenario.integrator.step_count();
  const std::int64_t stride =
      std::max<std::int64_t>(1, std::llround(scenario.output.interval / scenario.integrator.dt));
  auto sample = [&] {
    result.trajectory.push_back(TrajectorySample{state.time, state.x, state.v, state.target});
  };
  if (total > 0) sample();

  StepOutput out;
  std::vector<LoggedEvent> step_events;
  while (state.step < total) {
    CaptureObservation obs = sim.observe(state, {});
    const bool sample_events = state.step % stride == 0;
    try {
      sim.advance(state, &out);
    } catch (const InstabilityError& e) {
      result.status = RunStatus::diverged;
      result.failure = e.what();
      break;
    }
    for (const auto& c : out.contacts) obs.faces_in_contact.push_back(c.face);
    tracker.observe(obs);

    step_events.clear();
    for (const auto& c : out.contacts) {
      const bool begun = std::binary_search(out.begun.begin(), out.begun.end(), c.node);
      if (begun || sample_events)
        step_events.push_back(LoggedEvent{begun ? EventPhase::begin : EventPhase::active, c});
    }
    for (int id : out.ended) {
      LoggedEvent ev{EventPhase::end, ContactEvent{}};
      ev.contact.node = id;
      ev.contact.time = obs.time;
      step_events.push_back(ev);
    }
    std::stable_sort(step_events.begin(), step_events.end(),
                     [](const LoggedEvent& a, const LoggedEvent& b) {
                       return a.contact.node < b.contact.node;
                     });
    result.events.insert(result.events.end(), step_events.begin(), step_events.end());

    if (observer) observer(state, out);
    if (state.step % stride == 0) sample();
    if (tracker.finished(obs.time)) {
      result.status = RunStatus::captured;
      break;
    }
  }
  // A capture that lands inside the final grace period still counts.
  if (result.status == RunStatus::completed && tracker.metrics().captured)
    result.status = RunStatus::captured;

  result.steps = state.step;
  result.final_time = state.time;
  result.metrics = tracker.metrics();
  result.diagnostics = state.diagnostics;
  result.final_state = std::move(state);
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  return result;
}

}  // namespace tethercap
