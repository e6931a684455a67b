#include "gflow/runner.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "gflow/flows.hpp"

namespace gflow::harness {

namespace {

using geom::Vec;
using json = nlohmann::ordered_json;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json config_json(const Config& c) {
  json j;
  j["on_manifold_tol"] = c.on_manifold_tol;
  j["tangency_tol"] = c.tangency_tol;
  j["rank_tol"] = c.rank_tol;
  j["fd_step"] = c.fd_step;
  j["check_tol"] = c.check_tol;
  j["action_tol"] = c.action_tol;
  j["tangent_check_tol"] = c.tangent_check_tol;
  j["naturality_tol"] = c.naturality_tol;
  j["average_tol_exact"] = c.average_tol_exact;
  j["average_tol_quadrature"] = c.average_tol_quadrature;
  j["gauge_tol"] = c.gauge_tol;
  j["etale_assignment_tol"] = c.etale_assignment_tol;
  j["etale_functoriality_tol"] = c.etale_functoriality_tol;
  j["etale_integral_tol"] = c.etale_integral_tol;
  j["flow_check_tol"] = c.flow_check_tol;
  j["haar_torus_nodes"] = c.haar_torus_nodes;
  j["haar_so3_beta_nodes"] = c.haar_so3_beta_nodes;
  j["haar_so3_ab_nodes"] = c.haar_so3_ab_nodes;
  j["step"] = c.step;
  j["t_final"] = c.t_final;
  j["record_stride"] = c.record_stride;
  j["max_steps"] = c.max_steps;
  j["escape_radius"] = c.escape_radius;
  j["scheme"] = c.step_halving ? "rk4_halving" : "rk4";
  j["sample_count"] = c.sample_count;
  j["sample_box"] = c.sample_box;
  j["seed"] = c.seed;
  return j;
}

json report_json(const VerificationReport& r) {
  json j;
  j["subject"] = r.subject;
  j["seed"] = r.seed;
  json checks = json::array();
  for (const auto& c : r.checks) {
    json cj;
    cj["name"] = c.name;
    cj["max_residual"] = c.max_residual;
    cj["tolerance"] = c.tolerance;
    cj["pass"] = c.pass;
    if (!c.detail.empty()) cj["detail"] = c.detail;
    checks.push_back(cj);
  }
  j["checks"] = checks;
  j["pass"] = r.pass();
  return j;
}

std::string flow_csv(const flows::FlowResult& fr) {
  std::string out = "traj_id,t";
  const int n = fr.grid.empty() ? 0 : static_cast<int>(fr.grid.front().size());
  for (int i = 0; i < n; ++i) out += ",coord_" + std::to_string(i);
  out += ",status\n";
  for (std::size_t i = 0; i < fr.trajectories.size(); ++i) {
    const auto& traj = fr.trajectories[i];
    const char* status = flows::to_string(traj.status);
    for (std::size_t j = 0; j < traj.points.size(); ++j) {
      out += std::to_string(i) + "," + fmt(traj.times[j]);
      for (int c = 0; c < n; ++c) out += "," + fmt(traj.points[j][c]);
      out += std::string(",") + status + "\n";
    }
  }
  return out;
}

std::string gauge_csv(const flows::FlowResult& phi, const flows::GaugeTransport& gt,
                      const groups::CompactGroup& group) {
  std::string out = "traj_id,t";
  const int n = phi.grid.empty() ? 0 : static_cast<int>(phi.grid.front().size());
  const int gdim = group.kind() == groups::GroupKind::Torus ? group.lie_dim()
                                                            : group.embedded_dim();
  for (int i = 0; i < n; ++i) out += ",coord_" + std::to_string(i);
  out += ",status";
  for (int i = 0; i < gdim; ++i) out += ",g_" + std::to_string(i);
  out += "\n";
  for (std::size_t i = 0; i < gt.trajectories.size(); ++i) {
    const auto& traj = phi.trajectories[i];
    const auto& g = gt.trajectories[i];
    const std::size_t rows = std::min(traj.points.size(), g.gauge.size());
    const char* status =
        g.non_free ? "non-free" : flows::to_string(g.status);
    for (std::size_t j = 0; j < rows; ++j) {
      out += std::to_string(i) + "," + fmt(traj.times[j]);
      for (int c = 0; c < n; ++c) out += "," + fmt(traj.points[j][c]);
      out += std::string(",") + status;
      const Vec coords = group.kind() == groups::GroupKind::Torus ? g.gauge[j].angles
                                                                  : group.embed(g.gauge[j]);
      for (int c = 0; c < gdim; ++c) out += "," + fmt(coords[c]);
      out += "\n";
    }
  }
  return out;
}

struct CommandContext {
  const Scenario& s;
  Config cfg;
  json reports = json::array();
  std::vector<std::pair<std::string, std::string>> files;
  bool pass = true;

  void add_report(VerificationReport r) {
    r.seed = cfg.seed;
    reports.push_back(report_json(r));
    pass = pass && r.pass();
  }
};

std::vector<Vec> scenario_grid(const Scenario& s, const Config& cfg) {
  if (!s.grid.empty()) return s.grid;
  if (!s.manifold) throw ScenarioError("command needs a [grid] or a [manifold] to sample");
  Rng rng(cfg.seed ^ 0x5bd1e995u);
  std::vector<Vec> grid;
  for (int i = 0; i < 8; ++i) grid.push_back(s.manifold->sample(rng, cfg.sample_box));
  return grid;
}

void run_check(CommandContext& ctx, const std::vector<std::vector<std::string>>& arg_sets) {
  const auto& s = ctx.s;
  if (!s.groupoid && s.finite_groupoids.empty())
    throw ScenarioError("nothing to check: scenario declares no groupoid data");
  if (s.groupoid) {
    Rng rng(ctx.cfg.seed);
    VerificationReport base = gpd::check_groupoid(*s.groupoid, ctx.cfg.sample_count,
                                                  ctx.cfg.check_tol, rng);
    base.add_flag("proper", true,
                  s.groupoid->is_proper
                      ? (s.groupoid->proper_asserted ? "asserted" : "derived: compact group")
                      : "not proper");
    ctx.add_report(base);
    const auto tg = gpd::tangent_groupoid(s.groupoid, ctx.cfg);
    Rng rng2(ctx.cfg.seed + 1);
    ctx.add_report(gpd::check_groupoid(*tg, ctx.cfg.sample_count, ctx.cfg.tangent_check_tol,
                                       rng2));
    Rng rng3(ctx.cfg.seed + 2);
    ctx.add_report(gpd::check_morphism(gpd::groupoid_projection(tg), ctx.cfg.sample_count,
                                       ctx.cfg.naturality_tol, rng3));
  }
  for (const auto& [name, g] : s.finite_groupoids) {
    Rng rng(ctx.cfg.seed);
    ctx.add_report(gpd::check_groupoid(*g, ctx.cfg.sample_count, 1e-12, rng));
  }
  // Field laws for fields named in the task arguments: the (X, Y) structure
  // laws, then the section/morphism laws of the packaged groupoid field.
  for (const auto& args : arg_sets)
    for (const auto& fname : args) {
      Rng rng(ctx.cfg.seed + 3);
      ctx.add_report(fields::validate_action_field(s.field(fname), ctx.cfg.sample_count,
                                                   ctx.cfg.check_tol, rng, ctx.cfg));
      Rng rng2(ctx.cfg.seed + 4);
      const auto gf = fields::to_groupoid_field(s.field(fname), ctx.cfg.sample_count,
                                                ctx.cfg.check_tol, rng2, ctx.cfg);
      Rng rng3(ctx.cfg.seed + 5);
      ctx.add_report(fields::check_groupoid_field(gf, ctx.cfg.sample_count,
                                                  ctx.cfg.check_tol, rng3));
    }
}

void run_average(CommandContext& ctx, const std::vector<std::string>& args) {
  if (args.empty()) throw ScenarioError("average task needs a field name");
  const auto& s = ctx.s;
  const auto& f = s.field(args[0]);
  const double tol = s.group->kind() == groups::GroupKind::SO3
                         ? ctx.cfg.average_tol_quadrature
                         : ctx.cfg.average_tol_exact;

  const fields::AveragingResult avg = fields::average(f, ctx.cfg);

  VerificationReport rep;
  rep.subject = "average:" + f.name;
  rep.seed = ctx.cfg.seed;
  Rng rng(ctx.cfg.seed);
  const double inv_residual =
      fields::invariance_residual(avg.averaged, ctx.cfg.sample_count / 2 + 4, rng, ctx.cfg);
  rep.add("averaged_invariance", inv_residual, tol);
  if (inv_residual > 100.0 * tol)
    rep.add_flag("quadrature_order_sufficient", false,
                 "invariance residual exceeds 100x the base tolerance; raise the Haar orders");

  // The certificate psi exists exactly when the input satisfies the (X, Y)
  // structure laws; averaging itself is defined for any field data.
  Rng vrng(ctx.cfg.seed + 5);
  const VerificationReport lawful =
      fields::validate_action_field(f, ctx.cfg.sample_count / 2 + 4, ctx.cfg.check_tol, vrng,
                                    ctx.cfg);
  if (lawful.pass()) {
    ctx.add_report(rep);
    Rng rng2(ctx.cfg.seed + 1);
    ctx.add_report(fields::check_equivalence(f, avg.averaged, avg.psi,
                                             ctx.cfg.sample_count / 2 + 4, tol, rng2,
                                             ctx.cfg));
  } else {
    rep.add_flag("certificate_not_applicable", true,
                 "input violates the structure laws (field_law residual " +
                     std::to_string(lawful.worst("field_law")) +
                     "); no equivalence to the input exists");
    ctx.add_report(rep);
  }

  // Sampled values of the averaged field (also yields the sup norm metric).
  Rng rng3(ctx.cfg.seed + 2);
  double sup = 0.0;
  std::string csv = "sample_id";
  const int n = s.manifold->ambient_dim();
  for (int i = 0; i < n; ++i) csv += ",coord_" + std::to_string(i);
  for (int i = 0; i < n; ++i) csv += ",xt_" + std::to_string(i);
  csv += "\n";
  for (int i = 0; i < 16; ++i) {
    const Vec m = s.manifold->sample(rng3, ctx.cfg.sample_box);
    const Vec xv = fields::eval_x(avg.averaged, m, ctx.cfg).v;
    sup = std::max(sup, xv.lpNorm<Eigen::Infinity>());
    csv += std::to_string(i);
    for (int c = 0; c < n; ++c) csv += "," + fmt(m[c]);
    for (int c = 0; c < n; ++c) csv += "," + fmt(xv[c]);
    csv += "\n";
  }
  ctx.files.emplace_back("average_" + f.name + ".csv", csv);
  ctx.reports.back()["metrics"] = {{"x_tilde_sup_norm", sup}};
}

void run_flow(CommandContext& ctx, const std::vector<std::string>& args) {
  if (args.empty()) throw ScenarioError("flow task needs a field name");
  const auto& s = ctx.s;
  const auto& f = s.field(args[0]);
  const double t_final =
      args.size() > 1 ? std::strtod(args[1].c_str(), nullptr) : ctx.cfg.t_final;
  const flows::Integrator integ = flows::Integrator::from_config(ctx.cfg);
  const flows::FlowResult fr = flows::flow(f, scenario_grid(s, ctx.cfg), t_final, integ,
                                           ctx.cfg);
  Rng rng(ctx.cfg.seed);
  ctx.add_report(flows::check_flow(fr, f, 8, ctx.cfg.flow_check_tol, rng, ctx.cfg));
  int complete = 0;
  for (const auto& t : fr.trajectories)
    if (t.status == flows::TrajStatus::Complete) ++complete;
  ctx.reports.back()["metrics"] = {
      {"trajectories", fr.trajectories.size()},
      {"complete", complete},
  };
  ctx.files.emplace_back("flow_" + f.name + ".csv", flow_csv(fr));
}

void run_support(CommandContext& ctx, const std::vector<std::string>& args) {
  if (args.empty()) throw ScenarioError("support task needs a field name");
  const auto& s = ctx.s;
  const auto& f = s.field(args[0]);
  const double tol = args.size() > 1 ? std::strtod(args[1].c_str(), nullptr) : 1e-6;

  Rng sample_rng(ctx.cfg.seed ^ 0x2545f491u);
  std::vector<Vec> samples = s.grid;
  for (int i = 0; i < ctx.cfg.sample_count; ++i)
    samples.push_back(s.manifold->sample(sample_rng, ctx.cfg.sample_box));

  Rng rng(ctx.cfg.seed);
  const auto labels = fields::support_indicator(f, samples, tol, rng, ctx.cfg);

  std::string csv = "sample_id";
  const int n = s.manifold->ambient_dim();
  for (int i = 0; i < n; ++i) csv += ",coord_" + std::to_string(i);
  csv += ",label,residual,orbit_residual\n";
  int zero_count = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto& lab = labels[i];
    if (lab.equivalent_to_zero) ++zero_count;
    csv += std::to_string(i);
    for (int c = 0; c < n; ++c) csv += "," + fmt(lab.point[c]);
    csv += lab.equivalent_to_zero ? ",equivalent_to_zero" : ",in_support";
    csv += "," + fmt(lab.residual) + "," + fmt(lab.orbit_residual) + "\n";
  }
  ctx.files.emplace_back("support_" + f.name + ".csv", csv);

  VerificationReport rep;
  rep.subject = "support:" + f.name;
  rep.add_flag("support_indicator_computed", true,
               std::to_string(zero_count) + "/" + std::to_string(labels.size()) +
                   " samples equivalent to zero");
  ctx.add_report(rep);
}

void run_gauge(CommandContext& ctx, const std::vector<std::string>& args) {
  if (args.size() < 3)
    throw ScenarioError("gauge task needs: base_field target_field equivalence");
  const auto& s = ctx.s;
  const auto& f = s.field(args[0]);
  const auto& fprime = s.field(args[1]);
  const auto& psi = s.equivalence(args[2]);

  Rng rng(ctx.cfg.seed);
  ctx.add_report(fields::check_equivalence(f, fprime, psi, ctx.cfg.sample_count,
                                           ctx.cfg.check_tol, rng, ctx.cfg));

  const flows::Integrator integ = flows::Integrator::from_config(ctx.cfg);
  const auto grid = scenario_grid(s, ctx.cfg);
  const flows::FlowResult phi = flows::flow(f, grid, ctx.cfg.t_final, integ, ctx.cfg);
  const flows::FlowResult psi_flow = flows::flow(fprime, grid, ctx.cfg.t_final, integ, ctx.cfg);
  const flows::GaugeTransport gt = flows::gauge_transport(phi, psi_flow, fprime, psi, ctx.cfg);

  VerificationReport rep;
  rep.subject = "gauge:" + args[0] + "->" + args[1];
  rep.add("gauge_certificate", gt.max_residual, ctx.cfg.gauge_tol);
  bool any_non_free = false;
  for (const auto& t : gt.trajectories) any_non_free = any_non_free || t.non_free;
  rep.add_flag("gauge_free_orbits", true,
               any_non_free ? "some orbits hit non-free points (residual-only verification)"
                            : "all orbits free");
  ctx.add_report(rep);
  ctx.files.emplace_back("gauge_" + args[0] + "_" + args[1] + ".csv",
                         gauge_csv(phi, gt, *s.group));
}

void run_etale(CommandContext& ctx, const std::vector<std::string>& args) {
  if (args.empty()) throw ScenarioError("etale task needs an assignment name");
  const auto& s = ctx.s;
  auto it = s.assignments.find(args[0]);
  if (it == s.assignments.end())
    throw ScenarioError("unknown assignment '" + args[0] + "'");
  Rng rng(ctx.cfg.seed);
  ctx.add_report(etale::check_assignment(s.charts, it->second, ctx.cfg.sample_count,
                                         ctx.cfg.etale_assignment_tol,
                                         ctx.cfg.etale_functoriality_tol, rng, ctx.cfg));
}

void run_etale_flow(CommandContext& ctx, const std::vector<std::string>& args) {
  if (args.size() < 2) throw ScenarioError("etale_flow task needs: assignment chart [T]");
  const auto& s = ctx.s;
  auto it = s.assignments.find(args[0]);
  if (it == s.assignments.end())
    throw ScenarioError("unknown assignment '" + args[0] + "'");
  const int chart = s.charts.chart_index(args[1]);
  const double t_final =
      args.size() > 2 ? std::strtod(args[2].c_str(), nullptr) : ctx.cfg.t_final;

  const auto& x_u = it->second.per_chart[static_cast<std::size_t>(chart)];
  const flows::Integrator integ = flows::Integrator::from_config(ctx.cfg);
  Rng rng(ctx.cfg.seed ^ 0x9e3779b9u);
  std::vector<flows::Trajectory> trajectories;
  for (int i = 0; i < 4; ++i) {
    const Vec u0 = etale::sample_domain(s.charts, chart, nullptr, rng, ctx.cfg);
    trajectories.push_back(integrate_curve(
        *s.charts.charts[static_cast<std::size_t>(chart)].space, x_u, u0, t_final, integ,
        ctx.cfg));
  }
  ctx.add_report(etale::check_etale_integral(s.charts, chart, trajectories, x_u,
                                             ctx.cfg.etale_integral_tol, ctx.cfg));
}

void run_dictionary(CommandContext& ctx, const std::vector<std::string>& args) {
  if (args.size() < 4)
    throw ScenarioError("dictionary task needs: groupoid groupoid morphism morphism [expect N]");
  const auto& s = ctx.s;
  auto fit = s.finite_morphisms.find(args[2]);
  auto git = s.finite_morphisms.find(args[3]);
  if (fit == s.finite_morphisms.end() || git == s.finite_morphisms.end())
    throw ScenarioError("dictionary task references an unknown morphism");
  const gpd::DictionaryResult result = gpd::dictionary_check(fit->second, git->second);

  VerificationReport rep;
  rep.subject = "dictionary:" + args[2] + "=>" + args[3];
  rep.add_flag("dictionary_roundtrip_identity", result.roundtrip_identity);
  if (args.size() >= 6 && args[4] == "expect") {
    const long long expected = std::strtoll(args[5].c_str(), nullptr, 10);
    rep.add_flag("dictionary_count",
                 result.two_morphism_count == expected,
                 "count " + std::to_string(result.two_morphism_count) + ", expected " +
                     std::to_string(expected));
  } else {
    rep.add_flag("dictionary_count", true,
                 "count " + std::to_string(result.two_morphism_count));
  }
  ctx.add_report(rep);
  ctx.reports.back()["metrics"] = {{"two_morphism_count", result.two_morphism_count}};
}

}  // namespace

RunOutput run_command(const Scenario& scenario, const std::string& command,
                      const RunOverrides& overrides) {
  const auto t0 = std::chrono::steady_clock::now();

  CommandContext ctx{scenario, scenario.cfg, json::array(), {}, true};
  if (overrides.seed) ctx.cfg.seed = *overrides.seed;
  if (overrides.tol) ctx.cfg.check_tol = *overrides.tol;
  if (overrides.step) ctx.cfg.step = *overrides.step;

  const bool known = command == "check" || command == "average" || command == "flow" ||
                     command == "support" || command == "gauge" || command == "etale" ||
                     command == "dictionary";
  if (!known) throw ScenarioError("unknown command '" + command + "'");

  // The etale command also consumes etale_flow task lines (chart-level
  // integral checks belong to the same surface).
  const auto matches = [&command](const std::string& task_command) {
    if (command == "etale") return task_command == "etale" || task_command == "etale_flow";
    return task_command == command;
  };
  std::vector<Task> selected;
  for (const auto& task : scenario.tasks)
    if (matches(task.command)) selected.push_back(task);
  if (selected.empty() && command != "check")
    throw ScenarioError("scenario declares no [tasks] entry for '" + command + "'");

  if (command == "check") {
    std::vector<std::vector<std::string>> arg_sets;
    for (const auto& task : selected) arg_sets.push_back(task.args);
    run_check(ctx, arg_sets);
  } else {
    for (const auto& task : selected) {
      if (task.command == "average") run_average(ctx, task.args);
      else if (task.command == "flow") run_flow(ctx, task.args);
      else if (task.command == "support") run_support(ctx, task.args);
      else if (task.command == "gauge") run_gauge(ctx, task.args);
      else if (task.command == "etale") run_etale(ctx, task.args);
      else if (task.command == "etale_flow") run_etale_flow(ctx, task.args);
      else if (task.command == "dictionary") run_dictionary(ctx, task.args);
    }
  }

  const double wall_ms = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - t0)
                             .count();

  json j;
  j["scenario"] = scenario.id;
  j["command"] = command;
  j["seed"] = ctx.cfg.seed;
  j["config"] = config_json(ctx.cfg);
  j["reports"] = ctx.reports;
  json artifacts = json::array();
  for (const auto& [name, contents] : ctx.files) artifacts.push_back(name);
  j["artifacts"] = artifacts;
  j["pass"] = ctx.pass;
  j["wall_time_ms"] = wall_ms;

  RunOutput out;
  out.report_json = j.dump(2) + "\n";
  out.files = std::move(ctx.files);
  out.pass = ctx.pass;
  return out;
}

void write_outputs(const RunOutput& out, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream f(out_dir + "/report.json", std::ios::binary);
    if (!f) throw ScenarioError("cannot write report.json in '" + out_dir + "'");
    f << out.report_json;
  }
  for (const auto& [name, contents] : out.files) {
    std::ofstream f(out_dir + "/" + name, std::ios::binary);
    if (!f) throw ScenarioError("cannot write '" + name + "' in '" + out_dir + "'");
    f << contents;
  }
}

}  // namespace gflow::harness
