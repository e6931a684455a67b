#include "gflow/groups.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace gflow::groups {

namespace {

double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * M_PI);
  if (a < 0.0) a += 2.0 * M_PI;
  return a;
}

double wrap_signed(double a) {
  a = std::fmod(a, 2.0 * M_PI);
  if (a > M_PI) a -= 2.0 * M_PI;
  if (a < -M_PI) a += 2.0 * M_PI;
  return a;
}

Eigen::Matrix3d hat(const Vec& xi) {
  Eigen::Matrix3d m;
  m << 0, -xi[2], xi[1], xi[2], 0, -xi[0], -xi[1], xi[0], 0;
  return m;
}

Eigen::Matrix3d rodrigues(const Vec& xi_t) {
  const double theta = xi_t.norm();
  const Eigen::Matrix3d k = hat(xi_t);
  if (theta < 1e-12)
    return Eigen::Matrix3d::Identity() + k + 0.5 * k * k;
  return Eigen::Matrix3d::Identity() + (std::sin(theta) / theta) * k +
         ((1.0 - std::cos(theta)) / (theta * theta)) * k * k;
}

class FiniteGroup final : public CompactGroup {
 public:
  FiniteGroup(std::vector<std::string> names, std::vector<std::vector<int>> table,
              int identity, std::string name)
      : names_(std::move(names)), table_(std::move(table)), identity_(identity),
        name_(std::move(name)) {
    const int n = static_cast<int>(names_.size());
    if (static_cast<int>(table_.size()) != n)
      throw GroupError(name_ + ": Cayley table has wrong row count");
    for (const auto& row : table_)
      for (int v : row)
        if (static_cast<int>(row.size()) != n || v < 0 || v >= n)
          throw GroupError(name_ + ": Cayley table entry out of range");
    if (identity_ < 0 || identity_ >= n) throw GroupError(name_ + ": bad identity index");
    // Identity law.
    for (int a = 0; a < n; ++a)
      if (table_[a][identity_] != a || table_[identity_][a] != a)
        throw GroupError(name_ + ": identity law fails at element " + names_[a]);
    // Associativity, exhaustive.
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c)
          if (table_[table_[a][b]][c] != table_[a][table_[b][c]])
            throw GroupError(name_ + ": associativity fails at triple (" + names_[a] + "," +
                             names_[b] + "," + names_[c] + ")");
    // Inverses.
    inv_.resize(n, -1);
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b)
        if (table_[a][b] == identity_ && table_[b][a] == identity_) inv_[a] = b;
      if (inv_[a] < 0) throw GroupError(name_ + ": element " + names_[a] + " has no inverse");
    }
  }

  GroupKind kind() const override { return GroupKind::Finite; }
  int lie_dim() const override { return 0; }
  GroupElement identity() const override { return element(identity_); }
  GroupElement multiply(const GroupElement& a, const GroupElement& b) const override {
    return element(table_[a.index][b.index]);
  }
  GroupElement inverse(const GroupElement& a) const override { return element(inv_[a.index]); }
  GroupElement exp(const Vec&, double) const override {
    throw GroupError(name_ + ": exp unsupported on a finite group (lie_dim 0)");
  }
  Vec ad(const GroupElement&, const Vec&) const override {
    throw GroupError(name_ + ": ad unsupported on a finite group (lie_dim 0)");
  }
  double distance(const GroupElement& a, const GroupElement& b) const override {
    return a.index == b.index ? 0.0 : 1.0;
  }
  GroupElement sample(Rng& rng) const override {
    return element(rng.uniform_int(static_cast<int>(names_.size())));
  }
  std::vector<std::pair<GroupElement, double>> haar_nodes(const Config&) const override {
    std::vector<std::pair<GroupElement, double>> nodes;
    const double w = 1.0 / static_cast<double>(names_.size());
    for (int i = 0; i < static_cast<int>(names_.size()); ++i) nodes.push_back({element(i), w});
    return nodes;
  }
  int embedded_dim() const override { return 0; }
  Vec embed(const GroupElement&) const override { return Vec(0); }
  GroupElement unembed(const Vec&) const override {
    throw GroupError(name_ + ": finite elements carry a discrete label, not coordinates");
  }
  geom::ManifoldPtr group_manifold() const override { return nullptr; }
  int order() const override { return static_cast<int>(names_.size()); }
  GroupElement element(int index) const override {
    GroupElement g;
    g.index = index;
    return g;
  }
  std::string describe() const override { return name_; }

  const std::string& element_name(int i) const { return names_[static_cast<std::size_t>(i)]; }

 private:
  std::vector<std::string> names_;
  std::vector<std::vector<int>> table_;
  int identity_;
  std::vector<int> inv_;
  std::string name_;
};

class TorusGroup final : public CompactGroup {
 public:
  explicit TorusGroup(int k) : k_(k) {}

  GroupKind kind() const override { return GroupKind::Torus; }
  int lie_dim() const override { return k_; }
  GroupElement identity() const override {
    GroupElement g;
    g.angles = Vec::Zero(k_);
    return g;
  }
  GroupElement multiply(const GroupElement& a, const GroupElement& b) const override {
    GroupElement g;
    g.angles = a.angles + b.angles;
    for (int i = 0; i < k_; ++i) g.angles[i] = wrap_angle(g.angles[i]);
    return g;
  }
  GroupElement inverse(const GroupElement& a) const override {
    GroupElement g;
    g.angles = -a.angles;
    for (int i = 0; i < k_; ++i) g.angles[i] = wrap_angle(g.angles[i]);
    return g;
  }
  GroupElement exp(const Vec& xi, double t) const override {
    GroupElement g;
    g.angles = t * xi;
    for (int i = 0; i < k_; ++i) g.angles[i] = wrap_angle(g.angles[i]);
    return g;
  }
  Vec ad(const GroupElement&, const Vec& xi) const override { return xi; }  // abelian
  double distance(const GroupElement& a, const GroupElement& b) const override {
    double d = 0.0;
    for (int i = 0; i < k_; ++i) d = std::max(d, std::abs(wrap_signed(a.angles[i] - b.angles[i])));
    return d;
  }
  GroupElement sample(Rng& rng) const override {
    GroupElement g;
    g.angles.resize(k_);
    for (int i = 0; i < k_; ++i) g.angles[i] = rng.uniform(0.0, 2.0 * M_PI);
    return g;
  }
  std::vector<std::pair<GroupElement, double>> haar_nodes(const Config& cfg) const override {
    const int n = cfg.haar_torus_nodes;
    if (n < 4) throw GroupError("torus Haar rule needs at least 4 nodes per angle");
    std::vector<std::pair<GroupElement, double>> nodes;
    std::vector<int> idx(static_cast<std::size_t>(k_), 0);
    const double w = std::pow(1.0 / n, k_);
    for (;;) {
      GroupElement g;
      g.angles.resize(k_);
      for (int i = 0; i < k_; ++i) g.angles[i] = 2.0 * M_PI * idx[static_cast<std::size_t>(i)] / n;
      nodes.push_back({g, w});
      int i = 0;
      while (i < k_ && ++idx[static_cast<std::size_t>(i)] == n) idx[static_cast<std::size_t>(i++)] = 0;
      if (i == k_) break;
    }
    return nodes;
  }
  int embedded_dim() const override { return 2 * k_; }
  Vec embed(const GroupElement& g) const override {
    Vec c(2 * k_);
    for (int i = 0; i < k_; ++i) {
      c[2 * i] = std::cos(g.angles[i]);
      c[2 * i + 1] = std::sin(g.angles[i]);
    }
    return c;
  }
  GroupElement unembed(const Vec& c) const override {
    GroupElement g;
    g.angles.resize(k_);
    for (int i = 0; i < k_; ++i) g.angles[i] = wrap_angle(std::atan2(c[2 * i + 1], c[2 * i]));
    return g;
  }
  geom::ManifoldPtr group_manifold() const override { return geom::torus(k_); }
  std::string describe() const override {
    return k_ == 1 ? "circle" : "torus" + std::to_string(k_);
  }

 private:
  int k_;
};

class SO3Group final : public CompactGroup {
 public:
  GroupKind kind() const override { return GroupKind::SO3; }
  int lie_dim() const override { return 3; }
  GroupElement identity() const override { return GroupElement{}; }
  GroupElement multiply(const GroupElement& a, const GroupElement& b) const override {
    GroupElement g;
    g.rot = a.rot * b.rot;
    return g;
  }
  GroupElement inverse(const GroupElement& a) const override {
    GroupElement g;
    g.rot = a.rot.transpose();
    return g;
  }
  GroupElement exp(const Vec& xi, double t) const override {
    GroupElement g;
    g.rot = rodrigues(t * xi);
    return g;
  }
  Vec ad(const GroupElement& g, const Vec& xi) const override { return g.rot * xi; }
  double distance(const GroupElement& a, const GroupElement& b) const override {
    return (a.rot - b.rot).lpNorm<Eigen::Infinity>();
  }
  GroupElement sample(Rng& rng) const override {
    return unembed(geom::rotation_matrices()->sample(rng, 1.0));
  }
  std::vector<std::pair<GroupElement, double>> haar_nodes(const Config& cfg) const override {
    // zxz Euler angles with density sin(beta) / (8 pi^2): Gauss-Legendre in
    // beta on [0, pi], trapezoid in alpha and gamma.
    const int nb = cfg.haar_so3_beta_nodes;
    const int nab = cfg.haar_so3_ab_nodes;
    if (nb < 4 || nab < 4) throw GroupError("so3 Haar rule needs at least 4 nodes per angle");
    const auto gl = gauss_legendre(nb);
    std::vector<std::pair<GroupElement, double>> nodes;
    nodes.reserve(static_cast<std::size_t>(nb) * nab * nab);
    for (int ia = 0; ia < nab; ++ia) {
      const double alpha = 2.0 * M_PI * ia / nab;
      for (const auto& [u, wu] : gl) {
        const double beta = 0.5 * M_PI * (u + 1.0);
        const double wb = 0.5 * M_PI * wu * std::sin(beta);
        for (int ig = 0; ig < nab; ++ig) {
          const double gamma = 2.0 * M_PI * ig / nab;
          GroupElement g;
          g.rot = rot_z(alpha) * rot_x(beta) * rot_z(gamma);
          const double w = wb * (2.0 * M_PI / nab) * (2.0 * M_PI / nab) / (8.0 * M_PI * M_PI);
          nodes.push_back({g, w});
        }
      }
    }
    return nodes;
  }
  int embedded_dim() const override { return 9; }
  Vec embed(const GroupElement& g) const override {
    Vec c(9);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) c[3 * i + j] = g.rot(i, j);
    return c;
  }
  GroupElement unembed(const Vec& c) const override {
    GroupElement g;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) g.rot(i, j) = c[3 * i + j];
    return g;
  }
  geom::ManifoldPtr group_manifold() const override { return geom::rotation_matrices(); }
  std::string describe() const override { return "so3"; }

  static Eigen::Matrix3d rot_z(double a) {
    Eigen::Matrix3d m;
    m << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
    return m;
  }
  static Eigen::Matrix3d rot_x(double a) {
    Eigen::Matrix3d m;
    m << 1, 0, 0, 0, std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a);
    return m;
  }
};

std::vector<std::vector<int>> cyclic_table(int n) {
  std::vector<std::vector<int>> t(static_cast<std::size_t>(n),
                                  std::vector<int>(static_cast<std::size_t>(n)));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) t[a][b] = (a + b) % n;
  return t;
}

// S3 as permutations of {0,1,2}; composition (p*q)(i) = p(q(i)) matches the
// Cayley-table convention table[a][b] = a*b.
const std::vector<std::array<int, 3>>& s3_perms() {
  static const std::vector<std::array<int, 3>> perms = {
      {0, 1, 2}, {1, 2, 0}, {2, 0, 1}, {0, 2, 1}, {2, 1, 0}, {1, 0, 2}};
  return perms;
}

std::vector<std::vector<int>> s3_table() {
  const auto& perms = s3_perms();
  const int n = static_cast<int>(perms.size());
  std::vector<std::vector<int>> t(static_cast<std::size_t>(n),
                                  std::vector<int>(static_cast<std::size_t>(n)));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      std::array<int, 3> comp{};
      for (int i = 0; i < 3; ++i) comp[static_cast<std::size_t>(i)] = perms[static_cast<std::size_t>(a)][static_cast<std::size_t>(perms[static_cast<std::size_t>(b)][static_cast<std::size_t>(i)])];
      for (int c = 0; c < n; ++c)
        if (perms[static_cast<std::size_t>(c)] == comp) t[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = c;
    }
  return t;
}

}  // namespace

GroupElement CompactGroup::element(int) const {
  throw GroupError(describe() + ": element(index) only applies to finite groups");
}

GroupPtr finite_group(std::vector<std::string> names, std::vector<std::vector<int>> cayley,
                      int identity_index, std::string name) {
  return std::make_shared<FiniteGroup>(std::move(names), std::move(cayley), identity_index,
                                       std::move(name));
}

GroupPtr torus_group(int k) { return std::make_shared<TorusGroup>(k); }
GroupPtr so3_group() { return std::make_shared<SO3Group>(); }

GroupPtr builtin_group(const std::string& name) {
  if (name == "C2") return finite_group({"e", "s"}, cyclic_table(2), 0, "C2");
  if (name == "C3") return finite_group({"e", "r", "r2"}, cyclic_table(3), 0, "C3");
  if (name == "C4") return finite_group({"e", "r", "r2", "r3"}, cyclic_table(4), 0, "C4");
  if (name == "S3")
    return finite_group({"e", "c1", "c2", "t01", "t02", "t12"}, s3_table(), 0, "S3");
  if (name == "circle") return torus_group(1);
  if (name == "torus2") return torus_group(2);
  if (name == "so3") return so3_group();
  std::string catalog;
  for (const auto& n : builtin_group_names()) catalog += (catalog.empty() ? "" : ", ") + n;
  throw GroupError("unknown builtin group '" + name + "' (catalog: " + catalog + ")");
}

std::vector<std::string> builtin_group_names() {
  return {"C2", "C3", "C4", "S3", "circle", "torus2", "so3"};
}

SmoothAction matrix_action(GroupPtr group, geom::ManifoldPtr m, std::vector<Mat> mats,
                           std::string name) {
  if (group->kind() != GroupKind::Finite)
    throw GroupError("matrix_action expects a finite group");
  if (static_cast<int>(mats.size()) != group->order())
    throw GroupError("matrix_action needs one matrix per group element");
  auto ms = std::make_shared<std::vector<Mat>>(std::move(mats));
  SmoothAction a;
  a.group = std::move(group);
  a.manifold = std::move(m);
  a.name = std::move(name);
  a.act = [ms](const Vec& x, const GroupElement& g) -> Vec {
    return (*ms)[static_cast<std::size_t>(g.index)] * x;
  };
  a.act_jacobian = [ms](const Vec&, const GroupElement& g) -> Mat {
    return (*ms)[static_cast<std::size_t>(g.index)];
  };
  return a;
}

SmoothAction rotation_action(GroupPtr group, geom::ManifoldPtr m,
                             std::vector<std::vector<int>> pairs_per_angle) {
  if (group->kind() != GroupKind::Torus)
    throw GroupError("rotation_action expects a torus group");
  const int k = group->lie_dim();
  if (pairs_per_angle.empty())
    for (int i = 0; i < k; ++i) pairs_per_angle.push_back({i});
  if (static_cast<int>(pairs_per_angle.size()) != k)
    throw GroupError("rotation_action: one pair list per angle required");
  const int n = m->ambient_dim();
  for (const auto& ps : pairs_per_angle)
    for (int p : ps)
      if (2 * p + 1 >= n) throw GroupError("rotation_action: coordinate pair out of range");

  auto pairs = std::make_shared<std::vector<std::vector<int>>>(std::move(pairs_per_angle));
  auto rot_of = [pairs, n, k](const GroupElement& g) -> Mat {
    Mat r = Mat::Identity(n, n);
    for (int i = 0; i < k; ++i) {
      const double c = std::cos(g.angles[i]), s = std::sin(g.angles[i]);
      for (int p : (*pairs)[static_cast<std::size_t>(i)]) {
        Mat block(2, 2);
        block << c, -s, s, c;
        Mat cur = r.block(2 * p, 0, 2, n);
        r.block(2 * p, 0, 2, n) = block * cur;
      }
    }
    return r;
  };

  SmoothAction a;
  a.group = std::move(group);
  a.manifold = std::move(m);
  a.name = "rotation";
  a.act = [rot_of](const Vec& x, const GroupElement& g) -> Vec { return rot_of(g) * x; };
  a.act_jacobian = [rot_of](const Vec&, const GroupElement& g) -> Mat { return rot_of(g); };
  a.inf_generator = [pairs, n, k](const Vec& x, const Vec& xi) -> Vec {
    Vec v = Vec::Zero(n);
    for (int i = 0; i < k; ++i)
      for (int p : (*pairs)[static_cast<std::size_t>(i)]) {
        v[2 * p] += -xi[i] * x[2 * p + 1];
        v[2 * p + 1] += xi[i] * x[2 * p];
      }
    return v;
  };
  return a;
}

SmoothAction so3_linear_action(GroupPtr group, geom::ManifoldPtr m) {
  if (group->kind() != GroupKind::SO3) throw GroupError("so3_linear_action expects so3");
  if (m->ambient_dim() != 3) throw GroupError("so3_linear_action expects ambient R^3");
  SmoothAction a;
  a.group = std::move(group);
  a.manifold = std::move(m);
  a.name = "so3_linear";
  a.act = [](const Vec& x, const GroupElement& g) -> Vec { return g.rot.transpose() * x; };
  a.act_jacobian = [](const Vec&, const GroupElement& g) -> Mat { return g.rot.transpose(); };
  // d/dt|0 exp(t xi)^T m = -hat(xi) m = m x xi.
  a.inf_generator = [](const Vec& x, const Vec& xi) -> Vec {
    Eigen::Vector3d m3(x[0], x[1], x[2]), e3(xi[0], xi[1], xi[2]);
    Eigen::Vector3d r = m3.cross(e3);
    Vec v(3);
    v << r[0], r[1], r[2];
    return v;
  };
  return a;
}

SmoothAction permutation_action(GroupPtr s3, geom::ManifoldPtr m) {
  if (s3->describe() != "S3" || m->ambient_dim() != 3)
    throw GroupError("permutation_action covers the builtin S3 on ambient R^3");
  // Right action (m . s)_i = m_{s(i)}, i.e. the transpose permutation matrix.
  std::vector<Mat> mats;
  for (const auto& perm : s3_perms()) {
    Mat p = Mat::Zero(3, 3);
    for (int i = 0; i < 3; ++i) p(i, perm[static_cast<std::size_t>(i)]) = 1.0;
    mats.push_back(p);
  }
  return matrix_action(std::move(s3), std::move(m), std::move(mats), "permutation");
}

SmoothAction expr_action(GroupPtr group, geom::ManifoldPtr m,
                         std::vector<expr::Expr> components, double fd_step) {
  if (static_cast<int>(components.size()) != m->ambient_dim())
    throw GroupError("expr_action: one component per ambient coordinate required");
  auto comps = std::make_shared<std::vector<expr::Expr>>(std::move(components));
  const int n = m->ambient_dim();
  GroupPtr grp = group;
  SmoothAction a;
  a.group = group;
  a.manifold = std::move(m);
  a.name = "expr";
  a.act = [comps, n, grp](const Vec& x, const GroupElement& g) -> Vec {
    Vec gc;
    if (grp->kind() == GroupKind::Torus) gc = g.angles;
    else if (grp->kind() == GroupKind::SO3) gc = grp->embed(g);
    else gc = Vec::Zero(0);
    expr::EvalContext ctx{{x.data(), static_cast<std::size_t>(x.size())},
                          {gc.data(), static_cast<std::size_t>(gc.size())},
                          0.0,
                          false};
    Vec y(n);
    for (int i = 0; i < n; ++i) y[i] = (*comps)[static_cast<std::size_t>(i)].eval(ctx);
    return y;
  };
  (void)fd_step;
  return a;
}

double validate_action(const SmoothAction& a, Rng& rng, int n_samples, double tol, bool hard) {
  double worst = 0.0;
  for (int s = 0; s < n_samples; ++s) {
    const Vec m = a.manifold->sample(rng, 2.0);
    const GroupElement g = a.group->sample(rng);
    const GroupElement h = a.group->sample(rng);
    const double r_unit = (a.act(m, a.group->identity()) - m).lpNorm<Eigen::Infinity>();
    const double r_comp =
        (a.act(a.act(m, g), h) - a.act(m, a.group->multiply(g, h))).lpNorm<Eigen::Infinity>();
    worst = std::max({worst, r_unit, r_comp});
  }
  if (hard && worst > tol)
    throw GroupError("action law violated: worst residual " + std::to_string(worst) +
                     " exceeds " + std::to_string(tol));
  return worst;
}

Vec haar_average(const CompactGroup& g, const std::function<Vec(const GroupElement&)>& f,
                 const Config& cfg) {
  const auto nodes = g.haar_nodes(cfg);
  Vec acc;
  for (const auto& [node, w] : nodes) {
    const Vec val = f(node);
    if (acc.size() == 0) acc = Vec::Zero(val.size());
    acc += w * val;
  }
  return acc;
}

TangentVector inf_action(const SmoothAction& a, const Vec& m, const Vec& xi, const Config& cfg) {
  if (a.group->lie_dim() == 0)
    return {m, Vec::Zero(a.manifold->ambient_dim())};  // finite: iota = 0
  Vec raw;
  if (a.inf_generator) {
    raw = a.inf_generator(m, xi);
  } else {
    const double h = cfg.fd_step;
    raw = (a.act(m, a.group->exp(xi, h)) - a.act(m, a.group->exp(xi, -h))) / (2.0 * h);
  }
  return geom::tangent_project(*a.manifold, m, raw, cfg);
}

TangentVector tangent_action(const SmoothAction& a, const TangentVector& tv,
                             const GroupElement& g, const Config& cfg) {
  const Vec target = a.act(tv.base, g);
  Vec image;
  if (a.act_jacobian) {
    image = a.act_jacobian(tv.base, g) * tv.v;
  } else {
    const double norm = tv.v.norm();
    if (norm == 0.0) {
      image = Vec::Zero(target.size());
    } else {
      const double h = cfg.fd_step;
      const Vec u = tv.v / norm;
      image = (a.act(tv.base + h * u, g) - a.act(tv.base - h * u, g)) * (norm / (2.0 * h));
    }
  }
  return geom::tangent_project(*a.manifold, target, image, cfg);
}

geom::SmoothMap action_map(const SmoothAction& a, const GroupElement& g) {
  geom::SmoothMap f;
  f.domain = a.manifold;
  f.codomain = a.manifold;
  f.name = a.name + "(. , g)";
  auto act = a.act;
  f.fn = [act, g](const Vec& x) { return act(x, g); };
  if (a.act_jacobian) {
    auto jac = a.act_jacobian;
    f.jac = [jac, g](const Vec& x) { return jac(x, g); };
  }
  return f;
}

std::vector<std::pair<double, double>> gauss_legendre(int n) {
  // Newton iteration on P_n with the usual cosine initial guesses.
  std::vector<std::pair<double, double>> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      pp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    out[static_cast<std::size_t>(i)] = {x, 2.0 / ((1.0 - x * x) * pp * pp)};
  }
  // Ascending nodes for a fixed deterministic order.
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace gflow::groups
