#include "gflow/scenario.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace gflow::harness {

namespace {

using geom::Vec;

struct Entry {
  std::string key;
  std::string value;
  int line;
};

struct Section {
  std::string kind;
  std::string arg;
  int line;
  std::vector<Entry> entries;

  const Entry* find(const std::string& key) const {
    for (const auto& e : entries)
      if (e.key == key) return &e;
    return nullptr;
  }
  std::string get(const std::string& key, const std::string& fallback = {}) const {
    const Entry* e = find(key);
    return e ? e->value : fallback;
  }
  std::string require(const std::string& key) const {
    const Entry* e = find(key);
    if (!e) throw ScenarioError("[" + kind + (arg.empty() ? "" : " " + arg) +
                                "] is missing key '" + key + "'", line);
    return e->value;
  }
};

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream iss(s);
  std::string tok;
  while (iss >> tok) out.push_back(tok);
  return out;
}

std::vector<std::string> split_semicolon(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ';') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  const std::string last = trim(cur);
  if (!last.empty() || !out.empty()) out.push_back(last);
  while (!out.empty() && out.back().empty()) out.pop_back();
  return out;
}

double parse_double(const std::string& s, int line) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    throw ScenarioError("malformed number '" + s + "'", line);
  return v;
}

long parse_long(const std::string& s, int line) {
  char* end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0')
    throw ScenarioError("malformed integer '" + s + "'", line);
  return v;
}

std::vector<int> parse_ints(const std::string& s, int line) {
  std::vector<int> out;
  for (const auto& t : split_ws(s)) out.push_back(static_cast<int>(parse_long(t, line)));
  return out;
}

Vec parse_vec(const std::string& s, int line) {
  const auto toks = split_ws(s);
  Vec v(static_cast<Eigen::Index>(toks.size()));
  for (std::size_t i = 0; i < toks.size(); ++i)
    v[static_cast<Eigen::Index>(i)] = parse_double(toks[i], line);
  return v;
}

std::vector<expr::Expr> parse_exprs(const std::string& s, int line) {
  std::vector<expr::Expr> out;
  for (const auto& piece : split_semicolon(s)) {
    try {
      out.push_back(expr::parse(piece));
    } catch (const expr::ExprError& e) {
      throw ScenarioError(std::string("expression error: ") + e.what() + " at offset " +
                              std::to_string(e.offset) + " in '" + piece + "'",
                          line);
    }
  }
  return out;
}


void validate_exprs(const std::vector<expr::Expr>& exprs, int x_dim, int g_dim, bool allow_t,
                    int line) {
  try {
    for (const auto& e : exprs) e.validate(x_dim, g_dim, allow_t);
  } catch (const expr::ExprError& e) {
    throw ScenarioError(std::string("expression validation: ") + e.what(), line);
  }
}

geom::Mat parse_matrix(const std::string& s, int line) {
  const auto rows = split_semicolon(s);
  if (rows.empty()) throw ScenarioError("empty matrix", line);
  std::vector<Vec> parsed;
  for (const auto& r : rows) parsed.push_back(parse_vec(r, line));
  geom::Mat m(static_cast<Eigen::Index>(parsed.size()), parsed[0].size());
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    if (parsed[i].size() != m.cols()) throw ScenarioError("ragged matrix rows", line);
    m.row(static_cast<Eigen::Index>(i)) = parsed[i];
  }
  return m;
}

geom::ManifoldPtr build_manifold(const Section& sec) {
  const std::string type = sec.get("type", "euclidean");
  if (type == "euclidean")
    return geom::euclidean(static_cast<int>(parse_long(sec.require("ambient"), sec.line)));
  if (type == "sphere") {
    const int ambient = static_cast<int>(parse_long(sec.require("ambient"), sec.line));
    const double r = sec.find("radius") ? parse_double(sec.get("radius"), sec.line) : 1.0;
    return geom::sphere(ambient, r);
  }
  if (type == "torus")
    return geom::torus(static_cast<int>(parse_long(sec.require("k"), sec.line)));
  if (type == "level_set") {
    const int ambient = static_cast<int>(parse_long(sec.require("ambient"), sec.line));
    auto cs = parse_exprs(sec.require("constraint"), sec.line);
    validate_exprs(cs, ambient, 0, false, sec.line);
    return geom::level_set(ambient, std::move(cs));
  }
  throw ScenarioError("unknown manifold type '" + type + "'", sec.line);
}

groups::GroupPtr build_group(const Section& sec) {
  if (const Entry* name = sec.find("name")) {
    try {
      return groups::builtin_group(name->value);
    } catch (const groups::GroupError& e) {
      throw ScenarioError(e.what(), name->line);
    }
  }
  const std::string type = sec.get("type");
  if (type == "finite") {
    const auto names = split_ws(sec.require("elements"));
    const auto rows = split_semicolon(sec.require("cayley"));
    std::vector<std::vector<int>> table;
    for (const auto& r : rows) table.push_back(parse_ints(r, sec.line));
    const int identity = static_cast<int>(parse_long(sec.get("identity", "0"), sec.line));
    try {
      return groups::finite_group(names, table, identity, sec.get("label", "finite"));
    } catch (const groups::GroupError& e) {
      throw ScenarioError(e.what(), sec.line);
    }
  }
  throw ScenarioError("group section needs 'name' (builtin) or 'type = finite'", sec.line);
}

std::shared_ptr<const groups::SmoothAction> build_action(const Section& sec,
                                                         groups::GroupPtr group,
                                                         geom::ManifoldPtr manifold) {
  const std::string type = sec.require("type");
  const int n = manifold->ambient_dim();
  try {
    if (type == "sign") {
      if (group->kind() != groups::GroupKind::Finite || group->order() != 2)
        throw ScenarioError("sign action needs an order-2 finite group", sec.line);
      std::vector<geom::Mat> mats = {geom::Mat::Identity(n, n), -geom::Mat::Identity(n, n)};
      return std::make_shared<groups::SmoothAction>(
          groups::matrix_action(group, manifold, std::move(mats), "sign"));
    }
    if (type == "permutation") {
      return std::make_shared<groups::SmoothAction>(
          groups::permutation_action(group, manifold));
    }
    if (type == "matrices") {
      if (group->kind() != groups::GroupKind::Finite)
        throw ScenarioError("matrices action needs a finite group", sec.line);
      std::vector<geom::Mat> mats;
      for (int i = 0; i < group->order(); ++i) {
        const Entry* e = sec.find("matrix " + std::to_string(i));
        if (!e)
          throw ScenarioError("matrices action is missing 'matrix " + std::to_string(i) + "'",
                              sec.line);
        mats.push_back(parse_matrix(e->value, e->line));
      }
      return std::make_shared<groups::SmoothAction>(
          groups::matrix_action(group, manifold, std::move(mats)));
    }
    if (type == "rotation") {
      std::vector<std::vector<int>> pairs;
      for (int i = 1; i <= group->lie_dim(); ++i) {
        const Entry* e = sec.find("pairs " + std::to_string(i));
        if (!e) {
          pairs.push_back({i - 1});
          continue;
        }
        std::vector<int> ps;
        for (int p : parse_ints(e->value, e->line)) ps.push_back(p - 1);  // 1-based in files
        pairs.push_back(std::move(ps));
      }
      return std::make_shared<groups::SmoothAction>(
          groups::rotation_action(group, manifold, std::move(pairs)));
    }
    if (type == "so3_linear") {
      return std::make_shared<groups::SmoothAction>(
          groups::so3_linear_action(group, manifold));
    }
    if (type == "expr") {
      auto comps = parse_exprs(sec.require("map"), sec.line);
      const int gdim = group->kind() == groups::GroupKind::SO3 ? 9 : group->lie_dim();
      validate_exprs(comps, n, gdim, false, sec.line);
      return std::make_shared<groups::SmoothAction>(
          groups::expr_action(group, manifold, std::move(comps)));
    }
  } catch (const groups::GroupError& e) {
    throw ScenarioError(e.what(), sec.line);
  }
  throw ScenarioError("unknown action type '" + type + "'", sec.line);
}

fields::ActionField build_field(const Section& sec, const Scenario& s) {
  if (!s.groupoid) throw ScenarioError("[field] requires manifold, group and action", sec.line);
  const auto& group = *s.group;
  const int n = s.manifold->ambient_dim();
  const int gdim = group.kind() == groups::GroupKind::SO3 ? 9 : group.lie_dim();

  fields::ActionField f;
  f.groupoid = s.groupoid;
  f.name = sec.arg;

  auto xs = std::make_shared<std::vector<expr::Expr>>(parse_exprs(sec.require("x"), sec.line));
  if (static_cast<int>(xs->size()) != n)
    throw ScenarioError("field '" + sec.arg + "' needs " + std::to_string(n) +
                        " x components", sec.line);
  validate_exprs(*xs, n, 0, false, sec.line);
  f.x = [xs, n](const Vec& m) -> Vec {
    expr::EvalContext ctx{{m.data(), static_cast<std::size_t>(m.size())}, {}, 0.0, false};
    Vec out(n);
    for (int i = 0; i < n; ++i) out[i] = (*xs)[static_cast<std::size_t>(i)].eval(ctx);
    return out;
  };

  if (const Entry* ye = sec.find("y")) {
    if (group.lie_dim() == 0)
      throw ScenarioError("field '" + sec.arg + "': y requires lie_dim > 0", ye->line);
    auto ys = std::make_shared<std::vector<expr::Expr>>(parse_exprs(ye->value, ye->line));
    if (static_cast<int>(ys->size()) != group.lie_dim())
      throw ScenarioError("field '" + sec.arg + "': y needs " +
                          std::to_string(group.lie_dim()) + " components", ye->line);
    validate_exprs(*ys, n, gdim, false, ye->line);
    const groups::GroupPtr grp = s.group;
    const int lie = group.lie_dim();
    f.y = [ys, grp, lie](const Vec& m, const groups::GroupElement& g) -> Vec {
      const Vec gc = grp->kind() == groups::GroupKind::Torus ? g.angles : grp->embed(g);
      expr::EvalContext ctx{{m.data(), static_cast<std::size_t>(m.size())},
                            {gc.data(), static_cast<std::size_t>(gc.size())},
                            0.0,
                            false};
      Vec out(lie);
      for (int i = 0; i < lie; ++i) out[i] = (*ys)[static_cast<std::size_t>(i)].eval(ctx);
      return out;
    };
  }
  return f;
}

fields::FieldEquivalence build_equivalence(const Section& sec, const Scenario& s) {
  if (!s.groupoid)
    throw ScenarioError("[equivalence] requires manifold, group and action", sec.line);
  fields::FieldEquivalence e;
  e.groupoid = s.groupoid;
  e.name = sec.arg;
  const int lie = s.group->lie_dim();
  if (const Entry* pe = sec.find("psi")) {
    if (lie == 0)
      throw ScenarioError("equivalence '" + sec.arg + "': psi requires lie_dim > 0", pe->line);
    auto ps = std::make_shared<std::vector<expr::Expr>>(parse_exprs(pe->value, pe->line));
    if (static_cast<int>(ps->size()) != lie)
      throw ScenarioError("equivalence '" + sec.arg + "': psi needs " + std::to_string(lie) +
                          " components", pe->line);
    const int n = s.manifold->ambient_dim();
    validate_exprs(*ps, n, 0, false, pe->line);
    e.psi = [ps, lie](const Vec& m) -> Vec {
      expr::EvalContext ctx{{m.data(), static_cast<std::size_t>(m.size())}, {}, 0.0, false};
      Vec out(lie);
      for (int i = 0; i < lie; ++i) out[i] = (*ps)[static_cast<std::size_t>(i)].eval(ctx);
      return out;
    };
  }
  return e;
}

gpd::GroupoidPtr build_finite_groupoid(const Section& sec) {
  gpd::FiniteTables t;
  t.n_objects = static_cast<int>(parse_long(sec.require("objects"), sec.line));
  t.src = parse_ints(sec.require("src"), sec.line);
  t.dst = parse_ints(sec.require("dst"), sec.line);
  t.unit = parse_ints(sec.require("unit"), sec.line);
  for (const auto& row : split_semicolon(sec.require("comp")))
    t.comp.push_back(parse_ints(row, sec.line));
  try {
    return gpd::finite_groupoid(std::move(t), sec.arg);
  } catch (const gpd::GroupoidError& e) {
    throw ScenarioError(e.what(), sec.line);
  }
}

void apply_tolerances(const Section& sec, Config& cfg) {
  for (const auto& e : sec.entries) {
    const double v = parse_double(e.value, e.line);
    if (e.key == "on_manifold") cfg.on_manifold_tol = v;
    else if (e.key == "tangency") cfg.tangency_tol = v;
    else if (e.key == "rank") cfg.rank_tol = v;
    else if (e.key == "fd_step") cfg.fd_step = v;
    else if (e.key == "check") cfg.check_tol = v;
    else if (e.key == "action") cfg.action_tol = v;
    else if (e.key == "tangent_check") cfg.tangent_check_tol = v;
    else if (e.key == "naturality") cfg.naturality_tol = v;
    else if (e.key == "average_exact") cfg.average_tol_exact = v;
    else if (e.key == "average_quadrature") cfg.average_tol_quadrature = v;
    else if (e.key == "gauge") cfg.gauge_tol = v;
    else if (e.key == "etale_assignment") cfg.etale_assignment_tol = v;
    else if (e.key == "etale_functoriality") cfg.etale_functoriality_tol = v;
    else if (e.key == "etale_integral") cfg.etale_integral_tol = v;
    else if (e.key == "flow_check") cfg.flow_check_tol = v;
    else if (e.key == "haar_torus_nodes") cfg.haar_torus_nodes = static_cast<int>(v);
    else if (e.key == "haar_so3_beta") cfg.haar_so3_beta_nodes = static_cast<int>(v);
    else if (e.key == "haar_so3_ab") cfg.haar_so3_ab_nodes = static_cast<int>(v);
    else throw ScenarioError("unknown tolerance key '" + e.key + "'", e.line);
  }
}

void apply_integrator(const Section& sec, Config& cfg) {
  for (const auto& e : sec.entries) {
    if (e.key == "h" || e.key == "step") cfg.step = parse_double(e.value, e.line);
    else if (e.key == "t_final") cfg.t_final = parse_double(e.value, e.line);
    else if (e.key == "record_stride")
      cfg.record_stride = static_cast<int>(parse_long(e.value, e.line));
    else if (e.key == "max_steps") cfg.max_steps = parse_long(e.value, e.line);
    else if (e.key == "escape_radius") cfg.escape_radius = parse_double(e.value, e.line);
    else if (e.key == "scheme") {
      if (e.value == "rk4") cfg.step_halving = false;
      else if (e.value == "rk4_halving") cfg.step_halving = true;
      else throw ScenarioError("unknown scheme '" + e.value + "'", e.line);
    } else throw ScenarioError("unknown integrator key '" + e.key + "'", e.line);
  }
}

}  // namespace

const fields::ActionField& Scenario::field(const std::string& name) const {
  auto it = fields.find(name);
  if (it == fields.end()) throw ScenarioError("unknown field '" + name + "'");
  return it->second;
}

const fields::FieldEquivalence& Scenario::equivalence(const std::string& name) const {
  auto it = equivalences.find(name);
  if (it == equivalences.end()) throw ScenarioError("unknown equivalence '" + name + "'");
  return it->second;
}

Scenario parse_scenario(const std::string& text, const std::string& path) {
  std::vector<Section> sections;
  Section top{"", "", 0, {}};
  Section* cur = &top;

  std::istringstream iss(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(iss, raw)) {
    ++lineno;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ScenarioError("unterminated section header", lineno);
      const auto toks = split_ws(line.substr(1, line.size() - 2));
      if (toks.empty()) throw ScenarioError("empty section header", lineno);
      Section sec;
      sec.kind = toks[0];
      if (toks.size() > 1) sec.arg = toks[1];
      if (toks.size() > 2) throw ScenarioError("too many section arguments", lineno);
      sec.line = lineno;
      sections.push_back(std::move(sec));
      cur = &sections.back();
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ScenarioError("expected 'key = value' or section header", lineno);
    cur->entries.push_back({trim(line.substr(0, eq)), trim(line.substr(eq + 1)), lineno});
  }

  Scenario s;
  s.path = path;
  s.id = top.get("id", "scenario");
  for (const auto& e : top.entries)
    if (e.key != "id" && e.key != "seed")
      throw ScenarioError("unknown top-level key '" + e.key + "'", e.line);
  if (const Entry* e = top.find("seed"))
    s.cfg.seed = static_cast<std::uint64_t>(parse_long(e->value, e->line));

  static const std::vector<std::string> known_sections = {
      "manifold", "group",   "action",          "field",    "equivalence", "integrator",
      "tolerances", "samples", "grid",          "tasks",    "finite_groupoid",
      "morphism", "chart",   "transition",      "etale",    "assignment"};
  static const std::vector<std::string> known_commands = {
      "check", "average", "flow", "support", "gauge", "etale", "etale_flow", "dictionary"};
  for (const auto& sec : sections) {
    bool known = false;
    for (const auto& k : known_sections) known = known || sec.kind == k;
    if (!known) throw ScenarioError("unknown section [" + sec.kind + "]", sec.line);
    if (sec.kind == "tasks")
      for (const auto& e : sec.entries) {
        bool cmd = false;
        for (const auto& k : known_commands) cmd = cmd || e.key == k;
        if (!cmd) throw ScenarioError("unknown task command '" + e.key + "'", e.line);
      }
  }

  const auto find_section = [&](const std::string& kind) -> const Section* {
    for (const auto& sec : sections)
      if (sec.kind == kind) return &sec;
    return nullptr;
  };

  if (const Section* sec = find_section("tolerances")) apply_tolerances(*sec, s.cfg);
  if (const Section* sec = find_section("integrator")) apply_integrator(*sec, s.cfg);
  if (const Section* sec = find_section("samples")) {
    for (const auto& e : sec->entries) {
      if (e.key == "count") s.cfg.sample_count = static_cast<int>(parse_long(e.value, e.line));
      else if (e.key == "box") s.cfg.sample_box = parse_double(e.value, e.line);
      else if (e.key == "seed") s.cfg.seed = static_cast<std::uint64_t>(parse_long(e.value, e.line));
      else throw ScenarioError("unknown samples key '" + e.key + "'", e.line);
    }
  }

  if (const Section* sec = find_section("manifold")) s.manifold = build_manifold(*sec);
  if (const Section* sec = find_section("group")) s.group = build_group(*sec);
  if (const Section* sec = find_section("action")) {
    if (!s.manifold || !s.group)
      throw ScenarioError("[action] requires [manifold] and [group]", sec->line);
    s.action = build_action(*sec, s.group, s.manifold);
    Rng rng(s.cfg.seed);
    try {
      s.groupoid = gpd::action_groupoid(s.action, rng, s.cfg);
    } catch (const groups::GroupError& e) {
      throw ScenarioError(std::string("action validation: ") + e.what(), sec->line);
    }
  }

  for (const auto& sec : sections) {
    if (sec.kind == "field") {
      if (sec.arg.empty()) throw ScenarioError("[field] needs a name", sec.line);
      s.fields.emplace(sec.arg, build_field(sec, s));
    } else if (sec.kind == "equivalence") {
      if (sec.arg.empty()) throw ScenarioError("[equivalence] needs a name", sec.line);
      s.equivalences.emplace(sec.arg, build_equivalence(sec, s));
    } else if (sec.kind == "finite_groupoid") {
      if (sec.arg.empty()) throw ScenarioError("[finite_groupoid] needs a name", sec.line);
      s.finite_groupoids.emplace(sec.arg, build_finite_groupoid(sec));
    } else if (sec.kind == "chart") {
      if (sec.arg.empty()) throw ScenarioError("[chart] needs a name", sec.line);
      etale::Chart c;
      c.name = sec.arg;
      c.space = build_manifold(sec);
      if (const Entry* e = sec.find("domain")) {
        auto ds = parse_exprs(e->value, e->line);
        if (ds.size() != 1) throw ScenarioError("chart domain must be one expression", e->line);
        validate_exprs(ds, c.space->ambient_dim(), 0, false, e->line);
        c.domain = ds[0];
      }
      s.charts.charts.push_back(std::move(c));
    }
  }

  // Passes that need earlier objects resolved.
  for (const auto& sec : sections) {
    if (sec.kind == "morphism") {
      if (sec.arg.empty()) throw ScenarioError("[morphism] needs a name", sec.line);
      gpd::FiniteMorphism f;
      f.name = sec.arg;
      const std::string src_name = sec.require("source");
      const std::string dst_name = sec.require("target");
      if (!s.finite_groupoids.count(src_name) || !s.finite_groupoids.count(dst_name))
        throw ScenarioError("morphism '" + sec.arg + "' references unknown groupoid", sec.line);
      f.source = s.finite_groupoids.at(src_name);
      f.target = s.finite_groupoids.at(dst_name);
      f.f0 = parse_ints(sec.require("f0"), sec.line);
      f.f1 = parse_ints(sec.require("f1"), sec.line);
      try {
        gpd::validate_finite_morphism(f);
      } catch (const gpd::GroupoidError& e) {
        throw ScenarioError(e.what(), sec.line);
      }
      s.finite_morphisms.emplace(sec.arg, std::move(f));
    } else if (sec.kind == "transition") {
      if (sec.arg.empty()) throw ScenarioError("[transition] needs a name", sec.line);
      etale::Transition t;
      t.name = sec.arg;
      t.from = s.charts.chart_index(sec.require("from"));
      t.to = s.charts.chart_index(sec.require("to"));
      const auto& from_chart = s.charts.charts[static_cast<std::size_t>(t.from)];
      const auto& to_chart = s.charts.charts[static_cast<std::size_t>(t.to)];
      auto comps = parse_exprs(sec.require("map"), sec.line);
      validate_exprs(comps, from_chart.space->ambient_dim(), 0, false, sec.line);
      t.map = geom::expr_map(from_chart.space, to_chart.space, std::move(comps),
                             s.cfg.fd_step, sec.arg);
      if (const Entry* e = sec.find("domain")) {
        auto ds = parse_exprs(e->value, e->line);
        if (ds.size() != 1)
          throw ScenarioError("transition domain must be one expression", e->line);
        validate_exprs(ds, from_chart.space->ambient_dim(), 0, false, e->line);
        t.domain = ds[0];
      }
      s.charts.transitions.push_back(std::move(t));
    }
  }

  for (const auto& sec : sections) {
    if (sec.kind == "etale") {
      for (const auto& e : sec.entries) {
        if (e.key != "compose") throw ScenarioError("unknown etale key '" + e.key + "'", e.line);
        const auto names = split_ws(e.value);
        if (names.size() != 3)
          throw ScenarioError("compose needs 'inner outer composite'", e.line);
        s.charts.compositions.push_back({s.charts.transition_index(names[0]),
                                         s.charts.transition_index(names[1]),
                                         s.charts.transition_index(names[2])});
      }
    } else if (sec.kind == "assignment") {
      if (sec.arg.empty()) throw ScenarioError("[assignment] needs a name", sec.line);
      etale::EtaleFieldAssignment a;
      a.name = sec.arg;
      for (const auto& chart : s.charts.charts) {
        const Entry* e = sec.find(chart.name);
        if (!e)
          throw ScenarioError("assignment '" + sec.arg + "' is missing chart '" +
                              chart.name + "'", sec.line);
        auto comps = std::make_shared<std::vector<expr::Expr>>(parse_exprs(e->value, e->line));
        const int n = chart.space->ambient_dim();
        if (static_cast<int>(comps->size()) != n)
          throw ScenarioError("assignment components mismatch chart '" + chart.name + "'",
                              e->line);
        validate_exprs(*comps, n, 0, false, e->line);
        a.per_chart.push_back([comps, n](const Vec& u) -> Vec {
          expr::EvalContext ctx{{u.data(), static_cast<std::size_t>(u.size())}, {}, 0.0, false};
          Vec out(n);
          for (int i = 0; i < n; ++i) out[i] = (*comps)[static_cast<std::size_t>(i)].eval(ctx);
          return out;
        });
      }
      s.assignments.emplace(sec.arg, std::move(a));
    } else if (sec.kind == "grid") {
      for (const auto& e : sec.entries) {
        if (e.key == "point") {
          s.grid.push_back(parse_vec(e.value, e.line));
        } else if (e.key == "count") {
          if (!s.manifold) throw ScenarioError("grid sampling requires [manifold]", e.line);
          Rng rng(s.cfg.seed ^ 0x5bd1e995u);
          const long count = parse_long(e.value, e.line);
          for (long i = 0; i < count; ++i)
            s.grid.push_back(s.manifold->sample(rng, s.cfg.sample_box));
        } else {
          throw ScenarioError("unknown grid key '" + e.key + "'", e.line);
        }
      }
    } else if (sec.kind == "tasks") {
      for (const auto& e : sec.entries) s.tasks.push_back({e.key, split_ws(e.value)});
    }
  }

  // Grid points must sit on the manifold.
  if (s.manifold)
    for (const auto& p : s.grid) {
      if (p.size() != s.manifold->ambient_dim())
        throw ScenarioError("grid point dimension mismatch");
      if (!geom::on_manifold(*s.manifold, p, 1e-6))
        throw ScenarioError("grid point off manifold: constraint residual too large");
    }

  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  Scenario s = parse_scenario(buf.str(), path);
  return s;
}

}  // namespace gflow::harness
