#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tethercap/run.hpp"

namespace tethercap {

inline constexpr std::string_view kSweepSchema = "tethercap-sweep/1";
inline constexpr std::string_view kSweepSummarySchema = "tethercap-sweep-summary/1";

/// One sweep dimension. Each value is a YAML scalar or flow sequence of
/// numbers, e.g. "15" or "[0, -15, 0]".
struct SweepAxis {
  std::string field;
  std::vector<std::string> values;
};

struct SweepSpec {
  std::filesystem::path base;  // resolved against the sweep file's directory
  std::vector<std::string> overrides;  // applied to every run before the axes
  std::vector<SweepAxis> axes;
  int workers = 1;
  std::filesystem::path output;  // empty: summary only, no per-run files
};

struct SweepRow {
  std::size_t index = 0;
  std::vector<std::string> values;  // one per axis
  std::string status;  // completed, captured, diverged, invalid
  bool captured = false;
  std::optional<double> capture_time;
  double max_wrap_score = 0.0;
  double final_time = 0.0;
  std::string error;
};

SweepSpec parse_sweep(std::string_view yaml, const std::filesystem::path& base_dir = {});
SweepSpec load_sweep(const std::filesystem::path& path);

/// Number of runs in the Cartesian product (1 for no axes).
std::size_t sweep_size(const SweepSpec& spec);

/// Overrides for run `index`, last axis varying fastest.
std::vector<std::string> sweep_overrides(const SweepSpec& spec, std::size_t index);

/// Checks that the base loads and every axis names a numeric field.
/// Throws ConfigError.
void validate_sweep(const SweepSpec& spec);

/// Runs every combination on up to `spec.workers` threads. Rows come back
/// in index order whatever the completion order.
std::vector<SweepRow> run_sweep(const SweepSpec& spec);

std::string sweep_summary_csv(const SweepSpec& spec, const std::vector<SweepRow>& rows);

}  // namespace tethercap
