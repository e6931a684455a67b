#pragma once

#include <string>
#include <vector>

#include "gflow/scenario.hpp"

namespace gflow::harness {

struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;   // replaces check_tol
  std::optional<double> step;  // replaces integrator h
};

struct RunOutput {
  std::string report_json;  // stable key order; wall_time_ms is the only varying field
  std::vector<std::pair<std::string, std::string>> files;  // (name, contents)
  bool pass = false;
};

// Executes one CLI command against a loaded scenario. Commands: check,
// average, flow, support, gauge, etale, dictionary. Task parameters come from
// the scenario's [tasks] section.
RunOutput run_command(const Scenario& scenario, const std::string& command,
                      const RunOverrides& overrides = {});

// Writes report.json and the CSV artifacts into out_dir (created if needed).
void write_outputs(const RunOutput& out, const std::string& out_dir);

}  // namespace gflow::harness
