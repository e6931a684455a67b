#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "gflow/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"gflow: vector fields and flows on group quotients and etale covers"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  bool seed_set = false;
  double tol = 0.0;
  bool tol_set = false;
  double step = 0.0;
  bool step_set = false;

  const std::vector<std::string> commands = {"check",   "average", "flow",  "support",
                                             "gauge", "etale",   "dictionary"};
  for (const auto& name : commands) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--scenario", scenario_path, "scenario file")->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--seed", seed, "override scenario seed")
        ->each([&seed_set](const std::string&) { seed_set = true; });
    sub->add_option("--tol", tol, "override check tolerance")
        ->each([&tol_set](const std::string&) { tol_set = true; });
    sub->add_option("--step", step, "override integrator step")
        ->each([&step_set](const std::string&) { step_set = true; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    const gflow::harness::Scenario scenario = gflow::harness::load_scenario(scenario_path);
    gflow::harness::RunOverrides overrides;
    if (seed_set) overrides.seed = seed;
    if (tol_set) overrides.tol = tol;
    if (step_set) overrides.step = step;
    const gflow::harness::RunOutput out =
        gflow::harness::run_command(scenario, command, overrides);
    gflow::harness::write_outputs(out, out_dir);
    std::fputs(out.report_json.c_str(), stdout);
    return out.pass ? 0 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "gflow: %s\n", e.what());
    return 2;
  }
}
