#include "gflow/groupoid.hpp"

#include <algorithm>
#include <cmath>

namespace gflow::gpd {

namespace {

using groups::GroupKind;

Vec concat(const Vec& a, const Vec& b) {
  Vec out(a.size() + b.size());
  out << a, b;
  return out;
}

// Directional derivative of the continuous part of f at p along w, holding
// the sheet label fixed (labels are locally constant).
Vec directional(const GMapFn& f, const GPoint& p, const Vec& w, double h) {
  const double norm = w.norm();
  const GPoint f0 = f(p);
  if (norm == 0.0 || w.size() == 0) return Vec::Zero(f0.x.size());
  const Vec u = w / norm;
  const GPoint fp = f({p.x + h * u, p.label});
  const GPoint fm = f({p.x - h * u, p.label});
  return (fp.x - fm.x) * (norm / (2.0 * h));
}

// Tangent lift of a structure map under the doubled-ambient representation.
GMapFn tangent_lift(GMapFn f, int parent_ambient, double h) {
  return [f = std::move(f), parent_ambient, h](const GPoint& p) -> GPoint {
    const Vec base = p.x.head(parent_ambient);
    const Vec w = p.x.tail(parent_ambient);
    const GPoint fb = f({base, p.label});
    const Vec d = directional(f, {base, p.label}, w, h);
    return {concat(fb.x, d), fb.label};
  };
}

GMulFn tangent_lift_mul(GMulFn mu, int parent_ambient, double h) {
  return [mu = std::move(mu), parent_ambient, h](const GPoint& a, const GPoint& b) -> GPoint {
    const Vec abase = a.x.head(parent_ambient), aw = a.x.tail(parent_ambient);
    const Vec bbase = b.x.head(parent_ambient), bw = b.x.tail(parent_ambient);
    const GPoint m0 = mu({abase, a.label}, {bbase, b.label});
    const double norm = std::sqrt(aw.squaredNorm() + bw.squaredNorm());
    Vec d = Vec::Zero(m0.x.size());
    if (norm > 0.0 && parent_ambient > 0) {
      const Vec ua = aw / norm, ub = bw / norm;
      const GPoint mp = mu({abase + h * ua, a.label}, {bbase + h * ub, b.label});
      const GPoint mm = mu({abase - h * ua, a.label}, {bbase - h * ub, b.label});
      d = (mp.x - mm.x) * (norm / (2.0 * h));
    }
    return {concat(m0.x, d), m0.label};
  };
}

Mat tangent_basis(const geom::Manifold& m, const Vec& x) {
  const int n = m.ambient_dim();
  const int k = m.constraint_dim();
  if (k == 0) return Mat::Identity(n, n);
  Eigen::JacobiSVD<Mat> svd(m.constraint_jacobian(x), Eigen::ComputeFullV);
  return svd.matrixV().rightCols(n - k);
}

}  // namespace

double gdistance(const GPoint& a, const GPoint& b) {
  if (a.label != b.label) return 1.0;
  if (a.x.size() != b.x.size()) return 1.0;
  if (a.x.size() == 0) return 0.0;
  return (a.x - b.x).lpNorm<Eigen::Infinity>();
}

GPoint LieGroupoid::encode_arrow(const Vec& m, const GroupElement& g) const {
  if (!action) throw GroupoidError(name + ": not an action groupoid");
  const auto& grp = *action->group;
  if (grp.kind() == GroupKind::Finite) return {m, g.index};
  return {concat(m, grp.embed(g)), 0};
}

std::pair<Vec, GroupElement> LieGroupoid::decode_arrow(const GPoint& arrow) const {
  if (!action) throw GroupoidError(name + ": not an action groupoid");
  const auto& grp = *action->group;
  const int n = action->manifold->ambient_dim();
  if (grp.kind() == GroupKind::Finite) return {arrow.x.head(n), grp.element(arrow.label)};
  return {arrow.x.head(n), grp.unembed(arrow.x.tail(grp.embedded_dim()))};
}

GPoint LieGroupoid::encode_tangent_arrow(const Vec& m, const Vec& v, const GroupElement& g,
                                         const Vec& xi) const {
  if (presentation != Presentation::Tangent || !parent || !parent->action)
    throw GroupoidError(name + ": not the tangent of an action groupoid");
  const auto& grp = *parent->action->group;
  if (grp.kind() == GroupKind::Finite) return {concat(m, v), g.index};
  Vec x(m.size() + v.size() + grp.embedded_dim() + grp.lie_dim());
  x << m, v, grp.embed(g), xi;
  return {x, 0};
}

std::tuple<Vec, Vec, GroupElement, Vec> LieGroupoid::decode_tangent_arrow(
    const GPoint& arrow) const {
  if (presentation != Presentation::Tangent || !parent || !parent->action)
    throw GroupoidError(name + ": not the tangent of an action groupoid");
  const auto& grp = *parent->action->group;
  const int n = parent->action->manifold->ambient_dim();
  const Vec m = arrow.x.head(n);
  const Vec v = arrow.x.segment(n, n);
  if (grp.kind() == GroupKind::Finite)
    return {m, v, grp.element(arrow.label), Vec::Zero(0)};
  const GroupElement g = grp.unembed(arrow.x.segment(2 * n, grp.embedded_dim()));
  const Vec xi = arrow.x.tail(grp.lie_dim());
  return {m, v, g, xi};
}

GroupoidPtr action_groupoid(std::shared_ptr<const groups::SmoothAction> action, Rng& rng,
                            const Config& cfg) {
  groups::validate_action(*action, rng, 32, cfg.action_tol);

  auto g = std::make_shared<LieGroupoid>();
  g->presentation = Presentation::Action;
  g->action = action;
  g->is_proper = true;  // catalog groups are compact
  g->is_etale = action->group->kind() == GroupKind::Finite;  // source is a covering then
  g->name = "action(" + action->group->describe() + " on " + action->manifold->describe() + ")";

  const auto grp = action->group;
  const auto m = action->manifold;
  g->objects = {m, 1};
  if (grp->kind() == GroupKind::Finite) {
    g->arrows = {m, grp->order()};
  } else {
    g->arrows = {geom::product(m, grp->group_manifold()), 1};
  }

  const LieGroupoid* self = g.get();
  g->src = [self](const GPoint& a) -> GPoint { return {self->decode_arrow(a).first, 0}; };
  g->tgt = [self](const GPoint& a) -> GPoint {
    auto [mm, gg] = self->decode_arrow(a);
    return {self->action->act(mm, gg), 0};
  };
  g->unit = [self](const GPoint& p) -> GPoint {
    return self->encode_arrow(p.x, self->action->group->identity());
  };
  g->inv = [self](const GPoint& a) -> GPoint {
    auto [mm, gg] = self->decode_arrow(a);
    return self->encode_arrow(self->action->act(mm, gg), self->action->group->inverse(gg));
  };
  // Smooth extension: ignores the second base point.
  g->mul = [self](const GPoint& a, const GPoint& b) -> GPoint {
    auto [ma, ga] = self->decode_arrow(a);
    auto [mb, gb] = self->decode_arrow(b);
    return self->encode_arrow(ma, self->action->group->multiply(ga, gb));
  };

  const double box = cfg.sample_box;
  g->sample_object = [self, box](Rng& r) -> GPoint {
    return {self->action->manifold->sample(r, box), 0};
  };
  g->lift_arrow = [self](const GPoint& p, Rng& r) -> GPoint {
    return self->encode_arrow(p.x, self->action->group->sample(r));
  };
  g->sample_arrow = [self, box](Rng& r) -> GPoint {
    return self->encode_arrow(self->action->manifold->sample(r, box),
                              self->action->group->sample(r));
  };
  return g;
}

GroupoidPtr finite_groupoid(FiniteTables t, std::string name) {
  const int no = t.n_objects;
  const int na = t.n_arrows();
  auto fail = [&name](const std::string& why) { throw GroupoidError(name + ": " + why); };

  if (static_cast<int>(t.dst.size()) != na) fail("src/dst length mismatch");
  if (static_cast<int>(t.unit.size()) != no) fail("unit table length mismatch");
  if (static_cast<int>(t.comp.size()) != na) fail("composition table row count mismatch");
  for (int a = 0; a < na; ++a) {
    if (t.src[a] < 0 || t.src[a] >= no || t.dst[a] < 0 || t.dst[a] >= no)
      fail("arrow " + std::to_string(a) + " has out-of-range endpoints");
    if (static_cast<int>(t.comp[a].size()) != na) fail("composition table column count mismatch");
  }
  for (int x = 0; x < no; ++x) {
    const int e = t.unit[x];
    if (e < 0 || e >= na || t.src[e] != x || t.dst[e] != x)
      fail("unit of object " + std::to_string(x) + " is not an endo-arrow");
  }
  for (int a = 0; a < na; ++a)
    for (int b = 0; b < na; ++b) {
      const int c = t.comp[a][b];
      const bool composable = t.dst[a] == t.src[b];
      if (composable) {
        if (c < 0 || c >= na)
          fail("composite undefined for composable pair (" + std::to_string(a) + "," +
               std::to_string(b) + ")");
        if (t.src[c] != t.src[a] || t.dst[c] != t.dst[b])
          fail("composite endpoints wrong at pair (" + std::to_string(a) + "," +
               std::to_string(b) + ")");
      } else if (c != -1) {
        fail("composite defined for non-composable pair (" + std::to_string(a) + "," +
             std::to_string(b) + ")");
      }
    }
  for (int a = 0; a < na; ++a) {
    if (t.comp[t.unit[t.src[a]]][a] != a || t.comp[a][t.unit[t.dst[a]]] != a)
      fail("unit law fails at arrow " + std::to_string(a));
  }
  for (int a = 0; a < na; ++a)
    for (int b = 0; b < na; ++b) {
      if (t.dst[a] != t.src[b]) continue;
      for (int c = 0; c < na; ++c) {
        if (t.dst[b] != t.src[c]) continue;
        if (t.comp[t.comp[a][b]][c] != t.comp[a][t.comp[b][c]])
          fail("associativity fails at triple (" + std::to_string(a) + "," + std::to_string(b) +
               "," + std::to_string(c) + ")");
      }
    }
  t.inv.assign(static_cast<std::size_t>(na), -1);
  for (int a = 0; a < na; ++a) {
    for (int b = 0; b < na; ++b)
      if (t.dst[a] == t.src[b] && t.dst[b] == t.src[a] &&
          t.comp[a][b] == t.unit[t.src[a]] && t.comp[b][a] == t.unit[t.dst[a]])
        t.inv[static_cast<std::size_t>(a)] = b;
    if (t.inv[static_cast<std::size_t>(a)] < 0)
      fail("arrow " + std::to_string(a) + " has no inverse");
  }

  auto tables = std::make_shared<FiniteTables>(std::move(t));
  // Per-object arrow lists for lifting.
  auto outgoing = std::make_shared<std::vector<std::vector<int>>>(
      static_cast<std::size_t>(no));
  for (int a = 0; a < na; ++a)
    (*outgoing)[static_cast<std::size_t>(tables->src[static_cast<std::size_t>(a)])].push_back(a);

  auto g = std::make_shared<LieGroupoid>();
  g->presentation = Presentation::Finite;
  g->tables = tables;
  g->is_proper = true;
  g->is_etale = true;
  g->name = std::move(name);
  g->objects = {geom::euclidean(0), no};
  g->arrows = {geom::euclidean(0), na};

  g->src = [tables](const GPoint& a) -> GPoint {
    return {Vec(0), tables->src[static_cast<std::size_t>(a.label)]};
  };
  g->tgt = [tables](const GPoint& a) -> GPoint {
    return {Vec(0), tables->dst[static_cast<std::size_t>(a.label)]};
  };
  g->unit = [tables](const GPoint& p) -> GPoint {
    return {Vec(0), tables->unit[static_cast<std::size_t>(p.label)]};
  };
  g->inv = [tables](const GPoint& a) -> GPoint {
    return {Vec(0), tables->inv[static_cast<std::size_t>(a.label)]};
  };
  std::string gname = g->name;
  g->mul = [tables, gname](const GPoint& a, const GPoint& b) -> GPoint {
    const int c = tables->comp[static_cast<std::size_t>(a.label)][static_cast<std::size_t>(b.label)];
    if (c < 0)
      throw GroupoidError(gname + ": mu applied to non-composable arrows " +
                          std::to_string(a.label) + ", " + std::to_string(b.label));
    return {Vec(0), c};
  };
  g->sample_object = [no](Rng& r) -> GPoint { return {Vec(0), r.uniform_int(no)}; };
  g->sample_arrow = [na](Rng& r) -> GPoint { return {Vec(0), r.uniform_int(na)}; };
  g->lift_arrow = [outgoing](const GPoint& p, Rng& r) -> GPoint {
    const auto& outs = (*outgoing)[static_cast<std::size_t>(p.label)];
    if (outs.empty()) throw GroupoidError("object has no outgoing arrows");
    return {Vec(0), outs[static_cast<std::size_t>(r.uniform_int(static_cast<int>(outs.size())))]};
  };
  return g;
}

GroupoidPtr pair_groupoid(int n) {
  FiniteTables t;
  t.n_objects = n;
  const auto idx = [n](int i, int j) { return i * n + j; };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      t.src.push_back(i);
      t.dst.push_back(j);
    }
  t.comp.assign(static_cast<std::size_t>(n * n),
                std::vector<int>(static_cast<std::size_t>(n * n), -1));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        t.comp[static_cast<std::size_t>(idx(i, j))][static_cast<std::size_t>(idx(j, k))] =
            idx(i, k);
  for (int i = 0; i < n; ++i) t.unit.push_back(idx(i, i));
  return finite_groupoid(std::move(t), "pair(" + std::to_string(n) + ")");
}

GroupoidPtr delooping(groups::GroupPtr finite) {
  if (finite->kind() != GroupKind::Finite)
    throw GroupoidError("delooping needs a finite group");
  const int n = finite->order();
  FiniteTables t;
  t.n_objects = 1;
  t.src.assign(static_cast<std::size_t>(n), 0);
  t.dst.assign(static_cast<std::size_t>(n), 0);
  t.comp.assign(static_cast<std::size_t>(n), std::vector<int>(static_cast<std::size_t>(n), -1));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      t.comp[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] =
          finite->multiply(finite->element(a), finite->element(b)).index;
  t.unit = {finite->identity().index};
  return finite_groupoid(std::move(t), "B(" + finite->describe() + ")");
}

GroupoidPtr disjoint_union(const GroupoidPtr& a, const GroupoidPtr& b) {
  if (!a->tables || !b->tables) throw GroupoidError("disjoint_union needs finite groupoids");
  const auto& ta = *a->tables;
  const auto& tb = *b->tables;
  FiniteTables t;
  t.n_objects = ta.n_objects + tb.n_objects;
  const int na = ta.n_arrows();
  const int nb = tb.n_arrows();
  for (int i = 0; i < na; ++i) {
    t.src.push_back(ta.src[static_cast<std::size_t>(i)]);
    t.dst.push_back(ta.dst[static_cast<std::size_t>(i)]);
  }
  for (int i = 0; i < nb; ++i) {
    t.src.push_back(tb.src[static_cast<std::size_t>(i)] + ta.n_objects);
    t.dst.push_back(tb.dst[static_cast<std::size_t>(i)] + ta.n_objects);
  }
  t.comp.assign(static_cast<std::size_t>(na + nb),
                std::vector<int>(static_cast<std::size_t>(na + nb), -1));
  for (int x = 0; x < na; ++x)
    for (int y = 0; y < na; ++y)
      if (ta.comp[static_cast<std::size_t>(x)][static_cast<std::size_t>(y)] >= 0)
        t.comp[static_cast<std::size_t>(x)][static_cast<std::size_t>(y)] =
            ta.comp[static_cast<std::size_t>(x)][static_cast<std::size_t>(y)];
  for (int x = 0; x < nb; ++x)
    for (int y = 0; y < nb; ++y)
      if (tb.comp[static_cast<std::size_t>(x)][static_cast<std::size_t>(y)] >= 0)
        t.comp[static_cast<std::size_t>(x + na)][static_cast<std::size_t>(y + na)] =
            tb.comp[static_cast<std::size_t>(x)][static_cast<std::size_t>(y)] + na;
  for (int x = 0; x < ta.n_objects; ++x) t.unit.push_back(ta.unit[static_cast<std::size_t>(x)]);
  for (int x = 0; x < tb.n_objects; ++x)
    t.unit.push_back(tb.unit[static_cast<std::size_t>(x)] + na);
  return finite_groupoid(std::move(t), a->name + " + " + b->name);
}

GroupoidPtr euclidean_pair_groupoid(int n) {
  auto g = std::make_shared<LieGroupoid>();
  g->presentation = Presentation::Generic;
  g->is_proper = true;  // s x t is the identity on R^n x R^n
  g->proper_asserted = true;
  g->name = "pair(euclidean(" + std::to_string(n) + "))";
  g->objects = {geom::euclidean(n), 1};
  g->arrows = {geom::euclidean(2 * n), 1};
  g->src = [n](const GPoint& a) -> GPoint { return {a.x.head(n), 0}; };
  g->tgt = [n](const GPoint& a) -> GPoint { return {a.x.tail(n), 0}; };
  g->unit = [](const GPoint& p) -> GPoint { return {concat(p.x, p.x), 0}; };
  g->inv = [n](const GPoint& a) -> GPoint { return {concat(a.x.tail(n), a.x.head(n)), 0}; };
  g->mul = [n](const GPoint& a, const GPoint& b) -> GPoint {
    return {concat(a.x.head(n), b.x.tail(n)), 0};
  };
  g->sample_object = [n](Rng& r) -> GPoint {
    Vec x(n);
    for (int i = 0; i < n; ++i) x[i] = r.uniform(-2.0, 2.0);
    return {x, 0};
  };
  g->lift_arrow = [n](const GPoint& p, Rng& r) -> GPoint {
    Vec y(n);
    for (int i = 0; i < n; ++i) y[i] = r.uniform(-2.0, 2.0);
    return {concat(p.x, y), 0};
  };
  auto sample_object = g->sample_object;
  auto lift = g->lift_arrow;
  g->sample_arrow = [sample_object, lift](Rng& r) -> GPoint {
    return lift(sample_object(r), r);
  };
  return g;
}

GroupoidPtr tangent_groupoid(const GroupoidPtr& gamma, const Config& cfg) {
  auto tg = std::make_shared<LieGroupoid>();
  tg->presentation = Presentation::Tangent;
  tg->parent = gamma;
  tg->is_proper = gamma->is_proper;
  tg->proper_asserted = gamma->proper_asserted;
  tg->is_etale = gamma->is_etale;
  tg->name = "T(" + gamma->name + ")";

  if (gamma->presentation == Presentation::Action) {
    // TM x G x g presentation of T(M x| G).
    const auto action = gamma->action;
    const auto grp = action->group;
    const auto m = action->manifold;
    const int lie = grp->lie_dim();
    auto tb = geom::tangent_bundle(m);
    tg->objects = {tb, 1};
    if (grp->kind() == GroupKind::Finite) {
      tg->arrows = {tb, grp->order()};
    } else {
      tg->arrows = {geom::product(tb, geom::product(grp->group_manifold(),
                                                    geom::euclidean(lie))),
                    1};
    }

    const LieGroupoid* self = tg.get();
    const int n = m->ambient_dim();
    const Config c = cfg;

    tg->src = [self, n](const GPoint& a) -> GPoint {
      auto [mm, v, g, xi] = self->decode_tangent_arrow(a);
      return {concat(mm, v), 0};
    };
    tg->tgt = [self, c](const GPoint& a) -> GPoint {
      auto [mm, v, g, xi] = self->decode_tangent_arrow(a);
      const auto& act = *self->parent->action;
      const Vec target = act.act(mm, g);
      Vec w = groups::tangent_action(act, {mm, v}, g, c).v;
      if (xi.size() > 0) w += groups::inf_action(act, target, xi, c).v;
      return {concat(target, w), 0};
    };
    tg->unit = [self, lie](const GPoint& p) -> GPoint {
      const int n2 = static_cast<int>(p.x.size()) / 2;
      return self->encode_tangent_arrow(p.x.head(n2), p.x.tail(n2),
                                        self->parent->action->group->identity(),
                                        Vec::Zero(lie));
    };
    tg->inv = [self, c](const GPoint& a) -> GPoint {
      auto [mm, v, g, xi] = self->decode_tangent_arrow(a);
      const auto& act = *self->parent->action;
      const auto& grp2 = *act.group;
      const Vec target = act.act(mm, g);
      Vec w = groups::tangent_action(act, {mm, v}, g, c).v;
      Vec nxi = xi;
      if (xi.size() > 0) {
        w += groups::inf_action(act, target, xi, c).v;
        nxi = -grp2.ad(g, xi);
      }
      return self->encode_tangent_arrow(target, w, grp2.inverse(g), nxi);
    };
    tg->mul = [self](const GPoint& a, const GPoint& b) -> GPoint {
      auto [ma, va, ga, xa] = self->decode_tangent_arrow(a);
      auto [mb, vb, gb, xb] = self->decode_tangent_arrow(b);
      const auto& grp2 = *self->parent->action->group;
      Vec xi = xa;
      if (xa.size() > 0) xi = grp2.ad(grp2.inverse(gb), xa) + xb;
      return self->encode_tangent_arrow(ma, va, grp2.multiply(ga, gb), xi);
    };

    const double box = cfg.sample_box;
    tg->sample_object = [tb, box](Rng& r) -> GPoint { return {tb->sample(r, box), 0}; };
    tg->lift_arrow = [self, n, lie](const GPoint& p, Rng& r) -> GPoint {
      Vec xi(lie);
      for (int i = 0; i < lie; ++i) xi[i] = r.uniform(-1.0, 1.0);
      return self->encode_tangent_arrow(p.x.head(n), p.x.tail(n),
                                        self->parent->action->group->sample(r), xi);
    };
    auto sample_object = tg->sample_object;
    auto lift = tg->lift_arrow;
    tg->sample_arrow = [sample_object, lift](Rng& r) -> GPoint {
      return lift(sample_object(r), r);
    };
    return tg;
  }

  // Generic path: doubled ambient coordinates, directional derivatives.
  const int no = gamma->objects.chart->ambient_dim();
  const int na = gamma->arrows.chart->ambient_dim();
  const double h = cfg.fd_step;
  tg->objects = {geom::tangent_bundle(gamma->objects.chart), gamma->objects.labels};
  tg->arrows = {geom::tangent_bundle(gamma->arrows.chart), gamma->arrows.labels};
  tg->src = tangent_lift(gamma->src, na, h);
  tg->tgt = tangent_lift(gamma->tgt, na, h);
  tg->unit = tangent_lift(gamma->unit, no, h);
  tg->inv = tangent_lift(gamma->inv, na, h);
  tg->mul = tangent_lift_mul(gamma->mul, na, h);

  auto objects_chart = tg->objects.chart;
  const double box = cfg.sample_box;
  tg->sample_object = [objects_chart, gamma, box](Rng& r) -> GPoint {
    const GPoint base = gamma->sample_object(r);
    const geom::TangentVector tv =
        geom::sample_tangent(*gamma->objects.chart, base.x, r);
    return {concat(base.x, tv.v), base.label};
  };
  // Lift: find a tangent vector at a parent arrow whose source derivative
  // matches the requested object tangent; least squares plus a random kernel
  // component for coverage.
  GroupoidPtr parent = gamma;
  tg->lift_arrow = [parent, no, na, h](const GPoint& p, Rng& r) -> GPoint {
    const Vec pbase = p.x.head(no);
    const Vec pvec = p.x.tail(no);
    const GPoint delta = parent->lift_arrow({pbase, p.label}, r);
    if (na == 0) return {Vec(0), delta.label};
    const Mat basis = tangent_basis(*parent->arrows.chart, delta.x);
    Mat jac(no, na);
    for (int col = 0; col < na; ++col) {
      Vec e = Vec::Zero(na);
      e[col] = 1.0;
      jac.col(col) = directional(parent->src, delta, e, h);
    }
    const Mat a = jac * basis;
    Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Vec c = svd.solve(pvec);
    if ((a * c - pvec).lpNorm<Eigen::Infinity>() > 1e-6 * (1.0 + pvec.norm()))
      throw GroupoidError(parent->name + ": tangent lift failed (source not submersive?)");
    // Random motion in the kernel of Ds.
    const auto& sv = svd.singularValues();
    for (int i = 0; i < svd.matrixV().cols(); ++i)
      if (i >= sv.size() || sv[i] < 1e-10)
        c += r.uniform(-1.0, 1.0) * svd.matrixV().col(i);
    return {concat(delta.x, Vec(basis * c)), delta.label};
  };
  auto sample_object2 = tg->sample_object;
  auto lift2 = tg->lift_arrow;
  tg->sample_arrow = [sample_object2, lift2](Rng& r) -> GPoint {
    return lift2(sample_object2(r), r);
  };
  return tg;
}

VerificationReport check_groupoid(const LieGroupoid& g, int n_samples, double tol, Rng& rng) {
  VerificationReport rep;
  rep.subject = "groupoid:" + g.name;
  double unit_src = 0, unit_tgt = 0, inv_src = 0, inv_tgt = 0;
  double left_unit = 0, right_unit = 0, inv_left = 0, inv_right = 0;
  double assoc = 0, src_coh = 0, tgt_coh = 0;

  for (int s = 0; s < n_samples; ++s) {
    const GPoint p = g.sample_object(rng);
    const GPoint ep = g.unit(p);
    unit_src = std::max(unit_src, gdistance(g.src(ep), p));
    unit_tgt = std::max(unit_tgt, gdistance(g.tgt(ep), p));

    const GPoint a = g.sample_arrow(rng);
    const GPoint ia = g.inv(a);
    inv_src = std::max(inv_src, gdistance(g.src(ia), g.tgt(a)));
    inv_tgt = std::max(inv_tgt, gdistance(g.tgt(ia), g.src(a)));
    left_unit = std::max(left_unit, gdistance(g.mul(g.unit(g.src(a)), a), a));
    right_unit = std::max(right_unit, gdistance(g.mul(a, g.unit(g.tgt(a))), a));
    inv_right = std::max(inv_right, gdistance(g.mul(a, ia), g.unit(g.src(a))));
    inv_left = std::max(inv_left, gdistance(g.mul(ia, a), g.unit(g.tgt(a))));

    const GPoint b = g.lift_arrow(g.tgt(a), rng);
    const GPoint ab = g.mul(a, b);
    src_coh = std::max(src_coh, gdistance(g.src(ab), g.src(a)));
    tgt_coh = std::max(tgt_coh, gdistance(g.tgt(ab), g.tgt(b)));

    const GPoint c = g.lift_arrow(g.tgt(b), rng);
    assoc = std::max(assoc, gdistance(g.mul(ab, c), g.mul(a, g.mul(b, c))));
  }

  rep.add("unit_source", unit_src, tol);
  rep.add("unit_target", unit_tgt, tol);
  rep.add("inverse_source", inv_src, tol);
  rep.add("inverse_target", inv_tgt, tol);
  rep.add("left_unit", left_unit, tol);
  rep.add("right_unit", right_unit, tol);
  rep.add("inverse_left", inv_left, tol);
  rep.add("inverse_right", inv_right, tol);
  rep.add("associativity", assoc, tol);
  rep.add("source_coherence", src_coh, tol);
  rep.add("target_coherence", tgt_coh, tol);
  return rep;
}

VerificationReport check_morphism(const GroupoidMorphism& f, int n_samples, double tol,
                                  Rng& rng) {
  VerificationReport rep;
  rep.subject = "morphism:" + f.name;
  const auto& s = *f.source;
  const auto& t = *f.target;
  double r_src = 0, r_tgt = 0, r_unit = 0, r_mul = 0;
  for (int i = 0; i < n_samples; ++i) {
    const GPoint a = s.sample_arrow(rng);
    r_src = std::max(r_src, gdistance(f.f0(s.src(a)), t.src(f.f1(a))));
    r_tgt = std::max(r_tgt, gdistance(f.f0(s.tgt(a)), t.tgt(f.f1(a))));
    const GPoint p = s.sample_object(rng);
    r_unit = std::max(r_unit, gdistance(f.f1(s.unit(p)), t.unit(f.f0(p))));
    const GPoint b = s.lift_arrow(s.tgt(a), rng);
    r_mul = std::max(r_mul, gdistance(f.f1(s.mul(a, b)), t.mul(f.f1(a), f.f1(b))));
  }
  rep.add("intertwines_source", r_src, tol);
  rep.add("intertwines_target", r_tgt, tol);
  rep.add("intertwines_unit", r_unit, tol);
  rep.add("intertwines_mul", r_mul, tol);
  return rep;
}

GroupoidMorphism equivariant_morphism(GroupoidPtr source, GroupoidPtr target,
                                      geom::SmoothMap f, std::string name) {
  if (source->presentation != Presentation::Action ||
      target->presentation != Presentation::Action)
    throw GroupoidError("equivariant_morphism expects action groupoids");
  GroupoidMorphism m;
  m.source = source;
  m.target = target;
  m.name = name.empty() ? "equivariant(" + f.name + ")" : std::move(name);
  auto fn = f.fn;
  m.f0 = [fn](const GPoint& p) -> GPoint { return {fn(p.x), 0}; };
  const LieGroupoid* src_g = source.get();
  const LieGroupoid* tgt_g = target.get();
  m.f1 = [fn, src_g, tgt_g](const GPoint& a) -> GPoint {
    auto [mm, g] = src_g->decode_arrow(a);
    return tgt_g->encode_arrow(fn(mm), g);
  };
  m.equivariant_map = std::move(f);
  return m;
}

GroupoidMorphism identity_morphism(GroupoidPtr g) {
  GroupoidMorphism m;
  m.source = g;
  m.target = g;
  m.name = "id(" + g->name + ")";
  m.f0 = [](const GPoint& p) { return p; };
  m.f1 = [](const GPoint& a) { return a; };
  return m;
}

GroupoidMorphism compose_morphisms(const GroupoidMorphism& outer,
                                   const GroupoidMorphism& inner) {
  GroupoidMorphism m;
  m.source = inner.source;
  m.target = outer.target;
  m.name = outer.name + " . " + inner.name;
  auto of0 = outer.f0, if0 = inner.f0, of1 = outer.f1, if1 = inner.f1;
  m.f0 = [of0, if0](const GPoint& p) { return of0(if0(p)); };
  m.f1 = [of1, if1](const GPoint& a) { return of1(if1(a)); };
  if (outer.equivariant_map && inner.equivariant_map) {
    geom::SmoothMap comp;
    comp.domain = inner.equivariant_map->domain;
    comp.codomain = outer.equivariant_map->codomain;
    auto fo = outer.equivariant_map->fn, fi = inner.equivariant_map->fn;
    comp.fn = [fo, fi](const Vec& x) { return fo(fi(x)); };
    comp.fd_step = inner.equivariant_map->fd_step;
    comp.name = m.name;
    m.equivariant_map = std::move(comp);
  }
  return m;
}

GroupoidMorphism tangent_morphism(const GroupoidMorphism& f, GroupoidPtr tangent_source,
                                  GroupoidPtr tangent_target, const Config& cfg) {
  GroupoidMorphism tf;
  tf.source = tangent_source;
  tf.target = tangent_target;
  tf.name = "T(" + f.name + ")";

  if (f.equivariant_map && tangent_source->presentation == Presentation::Tangent &&
      tangent_source->parent->presentation == Presentation::Action &&
      tangent_target->parent && tangent_target->parent->presentation == Presentation::Action) {
    const geom::SmoothMap map = *f.equivariant_map;
    const Config c = cfg;
    tf.f0 = [map, c](const GPoint& p) -> GPoint {
      const int n = static_cast<int>(p.x.size()) / 2;
      const geom::TangentVector out = geom::push_forward(map, {p.x.head(n), p.x.tail(n)}, c);
      return {concat(out.base, out.v), 0};
    };
    const LieGroupoid* ts = tangent_source.get();
    const LieGroupoid* tt = tangent_target.get();
    tf.f1 = [map, c, ts, tt](const GPoint& a) -> GPoint {
      auto [mm, v, g, xi] = ts->decode_tangent_arrow(a);
      const geom::TangentVector out = geom::push_forward(map, {mm, v}, c);
      return tt->encode_tangent_arrow(out.base, out.v, g, xi);
    };
    return tf;
  }

  const int no = f.source->objects.chart->ambient_dim();
  const int na = f.source->arrows.chart->ambient_dim();
  tf.f0 = tangent_lift(f.f0, no, cfg.fd_step);
  tf.f1 = tangent_lift(f.f1, na, cfg.fd_step);
  return tf;
}

GroupoidMorphism groupoid_projection(const GroupoidPtr& tangent) {
  if (tangent->presentation != Presentation::Tangent || !tangent->parent)
    throw GroupoidError("groupoid_projection expects a tangent groupoid");
  GroupoidMorphism pi;
  pi.source = tangent;
  pi.target = tangent->parent;
  pi.name = "pi(" + tangent->parent->name + ")";
  const LieGroupoid* tg = tangent.get();
  const GroupoidPtr parent = tangent->parent;
  pi.f0 = [](const GPoint& p) -> GPoint {
    const int n = static_cast<int>(p.x.size()) / 2;
    return {p.x.head(n), p.label};
  };
  if (parent->presentation == Presentation::Action) {
    pi.f1 = [tg, parent](const GPoint& a) -> GPoint {
      auto [mm, v, g, xi] = tg->decode_tangent_arrow(a);
      return parent->encode_arrow(mm, g);
    };
  } else {
    const int na = parent->arrows.chart->ambient_dim();
    pi.f1 = [na](const GPoint& a) -> GPoint { return {a.x.head(na), a.label}; };
  }
  return pi;
}

VerificationReport check_two_morphism(const GroupoidMorphism& f, const GroupoidMorphism& g,
                                      const GroupoidTwoMorphism& phi, int n_samples,
                                      double tol, Rng& rng) {
  VerificationReport rep;
  rep.subject = "two_morphism";
  const auto& s = *f.source;
  const auto& t = *f.target;
  double r_src = 0, r_tgt = 0, r_nat = 0;
  for (int i = 0; i < n_samples; ++i) {
    const GPoint p = s.sample_object(rng);
    r_src = std::max(r_src, gdistance(t.src(phi.phi(p)), f.f0(p)));
    r_tgt = std::max(r_tgt, gdistance(t.tgt(phi.phi(p)), g.f0(p)));
    const GPoint a = s.sample_arrow(rng);
    // mu(f1(a), phi(t a)) = mu(phi(s a), g1(a))
    r_nat = std::max(r_nat, gdistance(t.mul(f.f1(a), phi.phi(s.tgt(a))),
                                      t.mul(phi.phi(s.src(a)), g.f1(a))));
  }
  rep.add("two_morphism_source", r_src, tol);
  rep.add("two_morphism_target", r_tgt, tol);
  rep.add("two_morphism_naturality", r_nat, tol);
  return rep;
}

void validate_finite_morphism(const FiniteMorphism& f) {
  if (!f.source->tables || !f.target->tables)
    throw GroupoidError("finite morphism needs finite groupoids");
  const auto& s = *f.source->tables;
  const auto& t = *f.target->tables;
  if (static_cast<int>(f.f0.size()) != s.n_objects ||
      static_cast<int>(f.f1.size()) != s.n_arrows())
    throw GroupoidError(f.name + ": morphism table sizes mismatch");
  for (int a = 0; a < s.n_arrows(); ++a) {
    const int fa = f.f1[static_cast<std::size_t>(a)];
    if (fa < 0 || fa >= t.n_arrows()) throw GroupoidError(f.name + ": arrow image out of range");
    if (t.src[static_cast<std::size_t>(fa)] !=
            f.f0[static_cast<std::size_t>(s.src[static_cast<std::size_t>(a)])] ||
        t.dst[static_cast<std::size_t>(fa)] !=
            f.f0[static_cast<std::size_t>(s.dst[static_cast<std::size_t>(a)])])
      throw GroupoidError(f.name + ": endpoints not intertwined at arrow " + std::to_string(a));
  }
  for (int x = 0; x < s.n_objects; ++x)
    if (f.f1[static_cast<std::size_t>(s.unit[static_cast<std::size_t>(x)])] !=
        t.unit[static_cast<std::size_t>(f.f0[static_cast<std::size_t>(x)])])
      throw GroupoidError(f.name + ": unit not preserved at object " + std::to_string(x));
  for (int a = 0; a < s.n_arrows(); ++a)
    for (int b = 0; b < s.n_arrows(); ++b) {
      const int c = s.comp[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
      if (c < 0) continue;
      if (t.comp[static_cast<std::size_t>(f.f1[static_cast<std::size_t>(a)])]
                [static_cast<std::size_t>(f.f1[static_cast<std::size_t>(b)])] !=
          f.f1[static_cast<std::size_t>(c)])
        throw GroupoidError(f.name + ": composition not preserved at pair (" +
                            std::to_string(a) + "," + std::to_string(b) + ")");
    }
}

FiniteMorphism finite_identity(const GroupoidPtr& g) {
  if (!g->tables) throw GroupoidError("finite_identity needs a finite groupoid");
  FiniteMorphism f;
  f.source = g;
  f.target = g;
  f.name = "id(" + g->name + ")";
  for (int x = 0; x < g->tables->n_objects; ++x) f.f0.push_back(x);
  for (int a = 0; a < g->tables->n_arrows(); ++a) f.f1.push_back(a);
  return f;
}

DictionaryResult dictionary_check(const FiniteMorphism& f, const FiniteMorphism& g) {
  validate_finite_morphism(f);
  validate_finite_morphism(g);
  if (f.source != g.source || f.target != g.target)
    throw GroupoidError("dictionary_check expects parallel morphisms");
  const auto& s = *f.source->tables;
  const auto& t = *f.target->tables;

  // Candidate arrows per object: phi(x): f0(x) -> g0(x).
  std::vector<std::vector<int>> candidates(static_cast<std::size_t>(s.n_objects));
  for (int x = 0; x < s.n_objects; ++x)
    for (int a = 0; a < t.n_arrows(); ++a)
      if (t.src[static_cast<std::size_t>(a)] == f.f0[static_cast<std::size_t>(x)] &&
          t.dst[static_cast<std::size_t>(a)] == g.f0[static_cast<std::size_t>(x)])
        candidates[static_cast<std::size_t>(x)].push_back(a);

  DictionaryResult result;
  std::vector<int> phi(static_cast<std::size_t>(s.n_objects), -1);
  const auto natural = [&](const std::vector<int>& assignment) {
    for (int a = 0; a < s.n_arrows(); ++a) {
      const int fa = f.f1[static_cast<std::size_t>(a)];
      const int ga = g.f1[static_cast<std::size_t>(a)];
      const int px = assignment[static_cast<std::size_t>(s.src[static_cast<std::size_t>(a)])];
      const int py = assignment[static_cast<std::size_t>(s.dst[static_cast<std::size_t>(a)])];
      // mu(f1(a), phi(dst)) = mu(phi(src), g1(a))
      if (t.comp[static_cast<std::size_t>(fa)][static_cast<std::size_t>(py)] !=
          t.comp[static_cast<std::size_t>(px)][static_cast<std::size_t>(ga)])
        return false;
    }
    return true;
  };

  const std::function<void(int)> enumerate = [&](int x) {
    if (x == s.n_objects) {
      if (natural(phi)) result.two_morphisms.push_back(phi);
      return;
    }
    for (int a : candidates[static_cast<std::size_t>(x)]) {
      phi[static_cast<std::size_t>(x)] = a;
      enumerate(x + 1);
    }
    phi[static_cast<std::size_t>(x)] = -1;
  };
  enumerate(0);
  result.two_morphism_count = static_cast<long long>(result.two_morphisms.size());

  // Part-3 sanity: pre/post-composing each phi with identity data reproduces
  // phi, witnessing the correspondence as a bijection on this finite set.
  for (const auto& assignment : result.two_morphisms)
    for (int x = 0; x < s.n_objects; ++x) {
      const int a = assignment[static_cast<std::size_t>(x)];
      const int pre = t.comp[static_cast<std::size_t>(
          t.unit[static_cast<std::size_t>(f.f0[static_cast<std::size_t>(x)])])]
                            [static_cast<std::size_t>(a)];
      const int post = t.comp[static_cast<std::size_t>(pre)][static_cast<std::size_t>(
          t.unit[static_cast<std::size_t>(g.f0[static_cast<std::size_t>(x)])])];
      if (post != a) result.roundtrip_identity = false;
    }
  return result;
}

}  // namespace gflow::gpd
