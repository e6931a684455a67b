#include "gflow/etale.hpp"

#include <algorithm>
#include <cmath>

namespace gflow::etale {

namespace {

geom::Mat tangent_basis(const geom::Manifold& m, const Vec& x) {
  const int n = m.ambient_dim();
  const int k = m.constraint_dim();
  if (k == 0) return geom::Mat::Identity(n, n);
  Eigen::JacobiSVD<geom::Mat> svd(m.constraint_jacobian(x), Eigen::ComputeFullV);
  return svd.matrixV().rightCols(n - k);
}

}  // namespace

int ChartSystem::chart_index(const std::string& name) const {
  for (std::size_t i = 0; i < charts.size(); ++i)
    if (charts[i].name == name) return static_cast<int>(i);
  throw EtaleError("unknown chart '" + name + "'");
}

int ChartSystem::transition_index(const std::string& name) const {
  for (std::size_t i = 0; i < transitions.size(); ++i)
    if (transitions[i].name == name) return static_cast<int>(i);
  throw EtaleError("unknown transition '" + name + "'");
}

bool in_domain(const expr::Expr& domain, const Vec& u) {
  if (domain.empty()) return true;
  expr::EvalContext ctx{{u.data(), static_cast<std::size_t>(u.size())}, {}, 0.0, false};
  return domain.eval(ctx) > 0.0;
}

Vec sample_domain(const ChartSystem& sys, int chart, const Transition* transition, Rng& rng,
                  const Config& cfg) {
  const Chart& c = sys.charts[static_cast<std::size_t>(chart)];
  for (int attempt = 0; attempt < 4096; ++attempt) {
    const Vec u = c.space->sample(rng, cfg.sample_box);
    if (!in_domain(c.domain, u)) continue;
    if (transition && !in_domain(transition->domain, u)) continue;
    return u;
  }
  throw EtaleError("could not sample inside domain of chart '" + c.name + "'");
}

Vec pullback_at(const geom::SmoothMap& f, const ChartField& x_v, const Vec& u,
                const Config& cfg) {
  const Vec fu = f.fn(u);
  const geom::Mat bu = tangent_basis(*f.domain, u);
  const geom::Mat bv = tangent_basis(*f.codomain, fu);
  const geom::Mat a = bv.transpose() * geom::jacobian(f, u) * bu;
  Eigen::FullPivLU<geom::Mat> lu(a);
  if (!lu.isInvertible() || lu.rcond() < 1e-8)
    throw EtaleError("map '" + f.name + "' is not etale at the evaluation point");
  const Vec rhs =
      bv.transpose() * geom::tangent_project(*f.codomain, fu, x_v(fu), cfg).v;
  return bu * lu.solve(rhs);
}

ChartField pullback(const geom::SmoothMap& f, ChartField x_v, const Config& cfg) {
  geom::SmoothMap map = f;
  return [map, x_v = std::move(x_v), cfg](const Vec& u) -> Vec {
    return pullback_at(map, x_v, u, cfg);
  };
}

VerificationReport check_assignment(const ChartSystem& sys,
                                    const EtaleFieldAssignment& assignment, int n_samples,
                                    double tol_triangle, double tol_functorial, Rng& rng,
                                    const Config& cfg) {
  VerificationReport rep;
  rep.subject = "etale_assignment:" + assignment.name;
  if (assignment.per_chart.size() != sys.charts.size())
    throw EtaleError("assignment must give one field per chart");

  // Constant fibre dimension across charts.
  bool dims_equal = true;
  const int d = sys.charts.empty() ? 0 : sys.charts.front().space->dim();
  for (const auto& c : sys.charts)
    if (c.space->dim() != d) dims_equal = false;
  rep.add_flag("constant_fibre_dimension", dims_equal,
               "chart dimension " + std::to_string(d));

  for (const auto& t : sys.transitions) {
    double worst = 0.0;
    for (int s = 0; s < n_samples; ++s) {
      const Vec u = sample_domain(sys, t.from, &t, rng, cfg);
      const Vec pulled =
          pullback_at(t.map, assignment.per_chart[static_cast<std::size_t>(t.to)], u, cfg);
      const Vec declared = geom::tangent_project(
          *sys.charts[static_cast<std::size_t>(t.from)].space, u,
          assignment.per_chart[static_cast<std::size_t>(t.from)](u), cfg).v;
      worst = std::max(worst, (pulled - declared).lpNorm<Eigen::Infinity>());
    }
    rep.add("triangle_" + t.name, worst, tol_triangle);
  }

  for (const auto& [inner_i, outer_i, composite_i] : sys.compositions) {
    const Transition& inner = sys.transitions[static_cast<std::size_t>(inner_i)];
    const Transition& outer = sys.transitions[static_cast<std::size_t>(outer_i)];
    const Transition& composite = sys.transitions[static_cast<std::size_t>(composite_i)];
    if (inner.to != outer.from || composite.from != inner.from || composite.to != outer.to)
      throw EtaleError("composition triple (" + inner.name + ", " + outer.name + ", " +
                       composite.name + ") endpoints do not line up");
    const ChartField& x = assignment.per_chart[static_cast<std::size_t>(outer.to)];
    double worst = 0.0;
    for (int s = 0; s < n_samples; ++s) {
      const Vec u = sample_domain(sys, inner.from, &inner, rng, cfg);
      const Vec via_pair = pullback_at(inner.map, pullback(outer.map, x, cfg), u, cfg);
      const Vec via_composite = pullback_at(composite.map, x, u, cfg);
      worst = std::max(worst, (via_pair - via_composite).lpNorm<Eigen::Infinity>());
    }
    rep.add("functoriality_" + composite.name, worst, tol_functorial);
  }
  return rep;
}

VerificationReport check_etale_integral(const ChartSystem& sys, int chart,
                                        const std::vector<flows::Trajectory>& trajectories,
                                        const ChartField& x_u, double tol, const Config& cfg) {
  VerificationReport rep;
  const Chart& c = sys.charts[static_cast<std::size_t>(chart)];
  rep.subject = "etale_integral:" + c.name;
  double worst = 0.0;
  bool inside = true;
  for (const auto& traj : trajectories) {
    for (const Vec& p : traj.points)
      if (!in_domain(c.domain, p)) inside = false;
    for (std::size_t j = 1; j + 1 < traj.points.size(); ++j) {
      const double dt = traj.times[j + 1] - traj.times[j - 1];
      const Vec dphi = (traj.points[j + 1] - traj.points[j - 1]) / dt;
      const Vec field =
          geom::tangent_project(*c.space, traj.points[j], x_u(traj.points[j]), cfg).v;
      worst = std::max(worst, (dphi - field).lpNorm<Eigen::Infinity>());
    }
  }
  rep.add_flag("trajectories_inside_domain", inside);
  rep.add("etale_integral_condition", worst, tol);
  return rep;
}

}  // namespace gflow::etale
