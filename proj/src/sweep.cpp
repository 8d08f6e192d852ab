#include "tethercap/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

namespace tethercap {

namespace {

bool is_number(const YAML::Node& n) {
  if (!n.IsScalar()) return false;
  try {
    (void)n.as<double>();
    return true;
  } catch (const YAML::Exception&) {
    return false;
  }
}

bool is_numeric(const YAML::Node& n) {
  if (n.IsSequence()) {
    if (n.size() == 0) return false;
    for (const auto& e : n)
      if (!is_numeric(e)) return false;
    return true;
  }
  return is_number(n);
}

std::string flow(const YAML::Node& n) {
  YAML::Emitter e;
  e << YAML::Flow << n;
  return e.c_str();
}

YAML::Node lookup(const YAML::Node& root, const std::string& dotted) {
  // Node::operator= writes through to the referenced node; reset() rebinds.
  YAML::Node node;
  node.reset(root);
  std::stringstream ss(dotted);
  for (std::string part; std::getline(ss, part, '.');) {
    if (!node.IsMap()) return {};
    const YAML::Node& cnode = node;
    const YAML::Node next = cnode[part];
    if (!next) return {};
    node.reset(next);
  }
  return node;
}

Scenario load_base(const SweepSpec& spec, const std::vector<std::string>& extra) {
  std::vector<std::string> all = spec.overrides;
  all.insert(all.end(), extra.begin(), extra.end());
  return load_scenario(spec.base, all);
}

// Values in the summary table: vectors become space separated so the CSV
// needs no quoting.
std::string cell(const std::string& yaml_value) {
  const YAML::Node n = YAML::Load(yaml_value);
  if (!n.IsSequence()) return n.Scalar();
  std::string out;
  for (const auto& e : n) out += (out.empty() ? "" : " ") + e.Scalar();
  return out;
}

}  // namespace

SweepSpec parse_sweep(std::string_view yaml, const std::filesystem::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml));
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("parse error: ") + e.what());
  }
  if (!root.IsMap()) throw ConfigError("top level must be a mapping");

  SweepSpec spec;
  for (auto it = root.begin(); it != root.end(); ++it) {
    const auto key = it->first.as<std::string>();
    const YAML::Node& v = it->second;
    if (key == "schema") {
      if (v.Scalar() != kSweepSchema)
        throw ConfigError("unsupported schema '" + v.Scalar() + "'", "schema");
    } else if (key == "base") {
      if (!v.IsScalar()) throw ConfigError("expected a path", "base");
      spec.base = v.Scalar();
    } else if (key == "workers") {
      if (!is_number(v) || v.as<double>() < 1 || v.as<double>() != std::floor(v.as<double>()))
        throw ConfigError("expected a positive integer", "workers");
      spec.workers = v.as<int>();
    } else if (key == "output") {
      if (!v.IsScalar()) throw ConfigError("expected a path", "output");
      spec.output = v.Scalar();
    } else if (key == "overrides") {
      if (!v.IsSequence()) throw ConfigError("expected a list of KEY=VALUE strings", "overrides");
      for (const auto& o : v) spec.overrides.push_back(o.Scalar());
    } else if (key == "axes") {
      if (!v.IsSequence()) throw ConfigError("expected a list", "axes");
      for (std::size_t i = 0; i < v.size(); ++i) {
        const std::string path = fmt::format("axes[{}]", i);
        const YAML::Node& a = v[i];
        if (!a.IsMap() || !a["field"] || !a["values"])
          throw ConfigError("each axis needs 'field' and 'values'", path);
        for (auto k = a.begin(); k != a.end(); ++k) {
          const auto name = k->first.as<std::string>();
          if (name != "field" && name != "values") throw ConfigError("unknown key", path + "." + name);
        }
        SweepAxis axis;
        axis.field = a["field"].Scalar();
        const YAML::Node& values = a["values"];
        if (!values.IsSequence() || values.size() == 0)
          throw ConfigError("expected a non-empty list", path + ".values");
        for (std::size_t j = 0; j < values.size(); ++j) {
          if (!is_numeric(values[j]))
            throw ConfigError("sweep values must be numbers or lists of numbers",
                              fmt::format("{}.values[{}]", path, j));
          axis.values.push_back(flow(values[j]));
        }
        spec.axes.push_back(std::move(axis));
      }
    } else {
      throw ConfigError("unknown key", key);
    }
  }
  if (spec.base.empty()) throw ConfigError("missing required field", "base");
  if (spec.base.is_relative()) spec.base = base_dir / spec.base;
  if (!spec.output.empty() && spec.output.is_relative()) spec.output = base_dir / spec.output;
  return spec;
}

SweepSpec load_sweep(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open sweep file '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_sweep(buf.str(), path.parent_path());
}

std::size_t sweep_size(const SweepSpec& spec) {
  std::size_t n = 1;
  for (const auto& a : spec.axes) n *= a.values.size();
  return n;
}

std::vector<std::string> sweep_overrides(const SweepSpec& spec, std::size_t index) {
  std::vector<std::string> out(spec.axes.size());
  for (std::size_t k = spec.axes.size(); k-- > 0;) {
    const auto& a = spec.axes[k];
    out[k] = a.field + "=" + a.values[index % a.values.size()];
    index /= a.values.size();
  }
  return out;
}

void validate_sweep(const SweepSpec& spec) {
  if (spec.workers < 1) throw ConfigError("expected a positive integer", "workers");
  const Scenario base = load_base(spec, {});
  const YAML::Node resolved = YAML::Load(serialize_scenario(base));
  for (std::size_t i = 0; i < spec.axes.size(); ++i) {
    const auto& a = spec.axes[i];
    const std::string path = fmt::format("axes[{}].field", i);
    const YAML::Node current = lookup(resolved, a.field);
    if (current) {
      if (!is_numeric(current)) throw ConfigError("'" + a.field + "' is not a numeric field", path);
      continue;
    }
    // Optional fields are absent from the resolved form; the parser decides.
    try {
      (void)parse_scenario(serialize_scenario(base), std::vector{a.field + "=" + a.values.front()});
    } catch (const ConfigError& e) {
      if (e.field() == a.field || std::string(e.what()).find("unknown key") != std::string::npos)
        throw ConfigError("'" + a.field + "' is not a scenario field", path);
    }
  }
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec) {
  const std::size_t n = sweep_size(spec);
  std::vector<SweepRow> rows(n);
  std::atomic<std::size_t> next{0};

  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      SweepRow& row = rows[i];
      row.index = i;
      const auto overrides = sweep_overrides(spec, i);
      for (const auto& o : overrides) row.values.push_back(o.substr(o.find('=') + 1));
      try {
        Scenario s = load_base(spec, overrides);
        if (!spec.output.empty()) s.output.directory = (spec.output / fmt::format("run_{:04d}", i)).string();
        validate_output_path(s);
        const RunResult r = run(s);
        if (!s.output.directory.empty()) write_outputs(r, s, s.output.directory);
        row.status = to_string(r.status);
        row.captured = r.metrics.captured;
        row.capture_time = r.metrics.capture_time;
        row.max_wrap_score = r.metrics.max_wrap_score;
        row.final_time = r.final_time;
        row.error = r.failure;
      } catch (const ConfigError& e) {
        row.status = "invalid";
        row.error = e.what();
      } catch (const IoError& e) {
        row.status = "io_error";
        row.error = e.what();
      }
    }
  };

  const int threads = static_cast<int>(std::min<std::size_t>(spec.workers, n));
  std::vector<std::jthread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(work);
  work();
  pool.clear();
  return rows;
}

std::string sweep_summary_csv(const SweepSpec& spec, const std::vector<SweepRow>& rows) {
  std::string out = fmt::format("# {}\nrun", kSweepSummarySchema);
  for (const auto& a : spec.axes) out += "," + a.field;
  out += ",status,captured,capture_time,max_wrap_score,final_time,error\n";
  for (const auto& r : rows) {
    out += fmt::format("{}", r.index);
    for (const auto& v : r.values) out += "," + cell(v);
    std::string error = r.error;
    std::replace(error.begin(), error.end(), '\n', ' ');
    std::replace(error.begin(), error.end(), ',', ';');
    out += fmt::format(",{},{},{},{},{},{}\n", r.status, r.captured ? "true" : "false",
                       r.capture_time ? fmt::format("{}", *r.capture_time) : std::string(),
                       r.max_wrap_score, r.final_time, error);
  }
  return out;
}

}  // namespace tethercap
