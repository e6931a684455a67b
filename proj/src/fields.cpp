#include "gflow/fields.hpp"

#include <algorithm>
#include <cmath>

namespace gflow::fields {

namespace {

using gpd::gdistance;
using gpd::Presentation;

const groups::SmoothAction& action_of(const GroupoidPtr& g) {
  if (!g || g->presentation != Presentation::Action || !g->action)
    throw FieldError("operation requires an action groupoid");
  return *g->action;
}

}  // namespace

TangentVector eval_x(const ActionField& f, const Vec& m, const Config& cfg) {
  const auto& a = action_of(f.groupoid);
  return geom::tangent_project(*a.manifold, m, f.x(m), cfg);
}

Vec eval_y(const ActionField& f, const Vec& m, const GroupElement& g) {
  const auto& a = action_of(f.groupoid);
  if (!f.y) return Vec::Zero(a.group->lie_dim());
  return f.y(m, g);
}

Vec eval_psi(const FieldEquivalence& e, const Vec& m) {
  const auto& a = action_of(e.groupoid);
  if (!e.psi) return Vec::Zero(a.group->lie_dim());
  return e.psi(m);
}

ActionField zero_action_field(GroupoidPtr g) {
  const auto& a = action_of(g);
  const int n = a.manifold->ambient_dim();
  ActionField f;
  f.groupoid = std::move(g);
  f.x = [n](const Vec&) { return Vec::Zero(n); };
  f.name = "zero";
  return f;
}

FieldEquivalence zero_equivalence(GroupoidPtr g) {
  FieldEquivalence e;
  e.groupoid = std::move(g);
  e.name = "zero";
  return e;
}

VerificationReport validate_action_field(const ActionField& f, int n_samples, double tol,
                                         Rng& rng, const Config& cfg) {
  const auto& a = action_of(f.groupoid);
  VerificationReport rep;
  rep.subject = "action_field:" + f.name;
  double law = 0.0, cocycle = 0.0;
  std::string worst_detail;
  for (int s = 0; s < n_samples; ++s) {
    const Vec m = a.manifold->sample(rng, cfg.sample_box);
    const GroupElement g = a.group->sample(rng);
    const GroupElement h = a.group->sample(rng);
    const Vec mg = a.act(m, g);

    Vec rhs = groups::tangent_action(a, eval_x(f, m, cfg), g, cfg).v;
    if (a.group->lie_dim() > 0)
      rhs += groups::inf_action(a, mg, eval_y(f, m, g), cfg).v;
    const double r = (eval_x(f, mg, cfg).v - rhs).lpNorm<Eigen::Infinity>();
    if (r > law) {
      law = r;
      worst_detail = "worst sample m = [" + std::to_string(m[0]) + ", ...]";
    }

    if (a.group->lie_dim() > 0) {
      const Vec lhs = eval_y(f, m, a.group->multiply(g, h));
      const Vec rhs2 = a.group->ad(a.group->inverse(h), eval_y(f, m, g)) + eval_y(f, mg, h);
      cocycle = std::max(cocycle, (lhs - rhs2).lpNorm<Eigen::Infinity>());
    }
  }
  rep.add("field_law", law, tol, worst_detail);
  rep.add("cocycle_law", cocycle, tol);
  return rep;
}

GroupoidVectorField to_groupoid_field(const ActionField& f, int n_samples, double tol,
                                      Rng& rng, const Config& cfg) {
  const VerificationReport v = validate_action_field(f, n_samples, tol, rng, cfg);
  if (!v.pass()) {
    std::string why;
    for (const auto& c : v.checks)
      if (!c.pass)
        why += (why.empty() ? "" : "; ") + c.name + " residual " +
               std::to_string(c.max_residual) + " > " + std::to_string(c.tolerance) +
               (c.detail.empty() ? "" : " (" + c.detail + ")");
    throw FieldError("action field '" + f.name + "' rejected: " + why);
  }

  GroupoidVectorField gf;
  gf.groupoid = f.groupoid;
  gf.tangent = gpd::tangent_groupoid(f.groupoid, cfg);
  gf.name = f.name;
  const ActionField field = f;
  const Config c = cfg;
  gf.x0 = [field, c](const GPoint& p) -> GPoint {
    const TangentVector tv = eval_x(field, p.x, c);
    Vec out(2 * p.x.size());
    out << p.x, tv.v;
    return {out, 0};
  };
  const gpd::LieGroupoid* tangent = gf.tangent.get();
  const GroupoidPtr parent = f.groupoid;
  gf.x1 = [field, c, tangent, parent](const GPoint& arrow) -> GPoint {
    auto [m, g] = parent->decode_arrow(arrow);
    return tangent->encode_tangent_arrow(m, eval_x(field, m, c).v, g, eval_y(field, m, g));
  };
  return gf;
}

GroupoidVectorField zero_field(GroupoidPtr g, const Config& cfg) {
  ActionField z = zero_action_field(g);
  Rng rng(cfg.seed);
  return to_groupoid_field(z, 4, 1e-12, rng, cfg);
}

VerificationReport check_groupoid_field(const GroupoidVectorField& f, int n_samples,
                                        double tol, Rng& rng) {
  VerificationReport rep;
  rep.subject = "groupoid_field:" + f.name;
  const auto& g = *f.groupoid;
  const auto& tg = *f.tangent;
  const gpd::GroupoidMorphism pi = gpd::groupoid_projection(f.tangent);

  double section0 = 0, section1 = 0, r_src = 0, r_tgt = 0, r_unit = 0, r_inv = 0, r_mul = 0;
  for (int s = 0; s < n_samples; ++s) {
    const GPoint p = g.sample_object(rng);
    section0 = std::max(section0, gdistance(pi.f0(f.x0(p)), p));
    const GPoint a = g.sample_arrow(rng);
    section1 = std::max(section1, gdistance(pi.f1(f.x1(a)), a));

    r_src = std::max(r_src, gdistance(tg.src(f.x1(a)), f.x0(g.src(a))));
    r_tgt = std::max(r_tgt, gdistance(tg.tgt(f.x1(a)), f.x0(g.tgt(a))));
    r_unit = std::max(r_unit, gdistance(f.x1(g.unit(p)), tg.unit(f.x0(p))));
    r_inv = std::max(r_inv, gdistance(f.x1(g.inv(a)), tg.inv(f.x1(a))));

    const GPoint b = g.lift_arrow(g.tgt(a), rng);
    r_mul = std::max(r_mul, gdistance(f.x1(g.mul(a, b)), tg.mul(f.x1(a), f.x1(b))));
  }
  rep.add("section_objects", section0, tol);
  rep.add("section_arrows", section1, tol);
  rep.add("morphism_source", r_src, tol);
  rep.add("morphism_target", r_tgt, tol);
  rep.add("morphism_unit", r_unit, tol);
  rep.add("morphism_inverse", r_inv, tol);
  rep.add("morphism_mul", r_mul, tol);
  return rep;
}

AveragingResult average(const ActionField& f, const Config& cfg) {
  const auto& a = action_of(f.groupoid);
  auto nodes = std::make_shared<std::vector<std::pair<GroupElement, double>>>(
      a.group->haar_nodes(cfg));
  const ActionField field = f;
  const GroupoidPtr gpd_ptr = f.groupoid;
  const Config c = cfg;

  AveragingResult out;
  out.averaged.groupoid = gpd_ptr;
  out.averaged.name = f.name + "~";
  out.averaged.x = [field, nodes, c](const Vec& m) -> Vec {
    const auto& act = *field.groupoid->action;
    Vec acc = Vec::Zero(m.size());
    for (const auto& [g, w] : *nodes) {
      const Vec mg = act.act(m, g);
      const TangentVector xv = eval_x(field, mg, c);
      acc += w * groups::tangent_action(act, xv, act.group->inverse(g), c).v;
    }
    return acc;
  };

  out.psi.groupoid = gpd_ptr;
  out.psi.name = "psi(" + f.name + ")";
  if (a.group->lie_dim() > 0) {
    out.psi.psi = [field, nodes](const Vec& m) -> Vec {
      const auto& act = *field.groupoid->action;
      Vec acc = Vec::Zero(act.group->lie_dim());
      for (const auto& [g, w] : *nodes) acc += w * act.group->ad(g, eval_y(field, m, g));
      return acc;
    };
  }
  return out;
}

double invariance_residual(const ActionField& f, int n_samples, Rng& rng, const Config& cfg) {
  const auto& a = action_of(f.groupoid);
  double worst = 0.0;
  for (int s = 0; s < n_samples; ++s) {
    const Vec m = a.manifold->sample(rng, cfg.sample_box);
    const GroupElement g = a.group->sample(rng);
    const Vec lhs = eval_x(f, a.act(m, g), cfg).v;
    const Vec rhs = groups::tangent_action(a, eval_x(f, m, cfg), g, cfg).v;
    worst = std::max(worst, (lhs - rhs).lpNorm<Eigen::Infinity>());
  }
  return worst;
}

VerificationReport check_equivalence(const ActionField& f, const ActionField& fprime,
                                     const FieldEquivalence& psi, int n_samples, double tol,
                                     Rng& rng, const Config& cfg) {
  const auto& a = action_of(f.groupoid);
  if (fprime.groupoid != f.groupoid || psi.groupoid != f.groupoid)
    throw FieldError("check_equivalence requires a common parent groupoid");
  VerificationReport rep;
  rep.subject = "equivalence:" + psi.name;
  double r_field = 0.0, r_ad = 0.0;
  for (int s = 0; s < n_samples; ++s) {
    const Vec m = a.manifold->sample(rng, cfg.sample_box);
    Vec rhs = eval_x(f, m, cfg).v;
    if (a.group->lie_dim() > 0) rhs += groups::inf_action(a, m, eval_psi(psi, m), cfg).v;
    r_field = std::max(r_field, (eval_x(fprime, m, cfg).v - rhs).lpNorm<Eigen::Infinity>());

    if (a.group->lie_dim() > 0) {
      const GroupElement g = a.group->sample(rng);
      const Vec mg = a.act(m, g);
      const Vec lhs = eval_y(f, m, g) + eval_psi(psi, mg);
      const Vec rhs2 = a.group->ad(a.group->inverse(g), eval_psi(psi, m)) + eval_y(fprime, m, g);
      r_ad = std::max(r_ad, (lhs - rhs2).lpNorm<Eigen::Infinity>());
    }
  }
  rep.add("equivalence_field", r_field, tol);
  rep.add("equivalence_ad", r_ad, tol);
  return rep;
}

std::pair<Vec, double> solve_iota(const ActionField& f_tilde, const Vec& m, const Config& cfg) {
  const auto& a = action_of(f_tilde.groupoid);
  const int k = a.group->lie_dim();
  const Vec xv = eval_x(f_tilde, m, cfg).v;
  if (k == 0) return {Vec::Zero(0), xv.lpNorm<Eigen::Infinity>()};

  geom::Mat l(m.size(), k);
  for (int j = 0; j < k; ++j) {
    Vec e = Vec::Zero(k);
    e[j] = 1.0;
    l.col(j) = groups::inf_action(a, m, e, cfg).v;
  }
  // Normal equations with a Tikhonov floor; residual of the unregularized
  // system (iota degenerates at fixed points of the action).
  geom::Mat lhs = l.transpose() * l + 1e-12 * geom::Mat::Identity(k, k);
  const Vec xi = Eigen::LDLT<geom::Mat>(lhs).solve(l.transpose() * xv);
  return {xi, (xv - l * xi).lpNorm<Eigen::Infinity>()};
}

std::vector<SupportLabel> support_indicator(const ActionField& f_tilde,
                                            const std::vector<Vec>& samples, double tol,
                                            Rng& rng, const Config& cfg) {
  const auto& a = action_of(f_tilde.groupoid);
  const int k = a.group->lie_dim();
  std::vector<SupportLabel> out;
  out.reserve(samples.size());
  for (const Vec& m : samples) {
    SupportLabel lab;
    lab.point = m;
    auto [xi, residual] = solve_iota(f_tilde, m, cfg);
    lab.residual = residual;
    bool ok = residual <= tol;
    if (ok && k > 0) {
      // The pointwise solutions along the sampled orbit must transform by Ad.
      for (int trial = 0; trial < 4; ++trial) {
        const GroupElement g = a.group->sample(rng);
        const Vec mg = a.act(m, g);
        auto [xi_g, res_g] = solve_iota(f_tilde, mg, cfg);
        if (res_g > tol) {
          ok = false;
          lab.orbit_residual = std::max(lab.orbit_residual, res_g);
          continue;
        }
        const double d =
            (xi_g - a.group->ad(a.group->inverse(g), xi)).lpNorm<Eigen::Infinity>();
        lab.orbit_residual = std::max(lab.orbit_residual, d);
        if (d > tol) ok = false;
      }
    }
    lab.equivalent_to_zero = ok;
    out.push_back(std::move(lab));
  }
  return out;
}

ActionField linear_combination(double a, const ActionField& f, double b,
                               const ActionField& fprime, std::string name) {
  if (f.groupoid != fprime.groupoid)
    throw FieldError("linear_combination requires a common parent groupoid");
  ActionField out;
  out.groupoid = f.groupoid;
  out.name = name.empty() ? "lin(" + f.name + "," + fprime.name + ")" : std::move(name);
  auto fx = f.x, gx = fprime.x;
  out.x = [a, b, fx, gx](const Vec& m) -> Vec { return a * fx(m) + b * gx(m); };
  if (f.has_y() || fprime.has_y()) {
    auto fy = f.y, gy = fprime.y;
    const int lie = f.groupoid->action->group->lie_dim();
    out.y = [a, b, fy, gy, lie](const Vec& m, const GroupElement& g) -> Vec {
      Vec acc = Vec::Zero(lie);
      if (fy) acc += a * fy(m, g);
      if (gy) acc += b * gy(m, g);
      return acc;
    };
  }
  return out;
}

}  // namespace gflow::fields
