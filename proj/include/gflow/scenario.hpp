#pragma once

#include <map>
#include <string>
#include <vector>

#include "gflow/config.hpp"
#include "gflow/etale.hpp"
#include "gflow/fields.hpp"
#include "gflow/groupoid.hpp"

namespace gflow::harness {

struct ScenarioError : std::runtime_error {
  ScenarioError(const std::string& msg, int line = 0)
      : std::runtime_error(line > 0 ? msg + " (line " + std::to_string(line) + ")" : msg),
        line(line) {}
  int line;
};

// A task line from the [tasks] section: command plus arguments, file order
// preserved.
struct Task {
  std::string command;
  std::vector<std::string> args;
};

// Fully validated scenario: groups checked exhaustively, action laws sampled,
// expressions validated against declared dimensions.
struct Scenario {
  std::string id;
  std::string path;
  Config cfg;

  geom::ManifoldPtr manifold;
  groups::GroupPtr group;
  std::shared_ptr<const groups::SmoothAction> action;
  gpd::GroupoidPtr groupoid;  // action groupoid when manifold+group+action given

  std::map<std::string, fields::ActionField> fields;
  std::map<std::string, fields::FieldEquivalence> equivalences;
  std::vector<geom::Vec> grid;

  std::map<std::string, gpd::GroupoidPtr> finite_groupoids;
  std::map<std::string, gpd::FiniteMorphism> finite_morphisms;

  etale::ChartSystem charts;
  std::map<std::string, etale::EtaleFieldAssignment> assignments;

  std::vector<Task> tasks;

  const fields::ActionField& field(const std::string& name) const;
  const fields::FieldEquivalence& equivalence(const std::string& name) const;
};

// Line-oriented key/value + section format; see scenarios/ for examples.
Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const std::string& text, const std::string& path);

}  // namespace gflow::harness
