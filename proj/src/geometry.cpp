#include "gflow/geometry.hpp"

#include <cmath>

namespace gflow::geom {

namespace {

class EuclideanManifold final : public Manifold {
 public:
  explicit EuclideanManifold(int n) : n_(n) {}
  int ambient_dim() const override { return n_; }
  int constraint_dim() const override { return 0; }
  Vec constraint(const Vec&) const override { return Vec(0); }
  Mat constraint_jacobian(const Vec&) const override { return Mat(0, n_); }
  Vec sample(Rng& rng, double box) const override {
    Vec x(n_);
    for (int i = 0; i < n_; ++i) x[i] = rng.uniform(-box, box);
    return x;
  }
  std::string describe() const override { return "euclidean(" + std::to_string(n_) + ")"; }

 private:
  int n_;
};

class SphereManifold final : public Manifold {
 public:
  SphereManifold(int n, double r) : n_(n), r_(r) {}
  int ambient_dim() const override { return n_; }
  int constraint_dim() const override { return 1; }
  Vec constraint(const Vec& x) const override {
    Vec c(1);
    c[0] = x.squaredNorm() - r_ * r_;
    return c;
  }
  Mat constraint_jacobian(const Vec& x) const override {
    Mat j(1, n_);
    j.row(0) = 2.0 * x.transpose();
    return j;
  }
  Vec sample(Rng& rng, double) const override {
    Vec x(n_);
    double norm2;
    do {
      for (int i = 0; i < n_; ++i) x[i] = rng.normal();
      norm2 = x.squaredNorm();
    } while (norm2 < 1e-12);
    return x * (r_ / std::sqrt(norm2));
  }
  std::string describe() const override {
    return "sphere(" + std::to_string(n_ - 1) + ", r=" + std::to_string(r_) + ")";
  }

 private:
  int n_;
  double r_;
};

class TorusManifold final : public Manifold {
 public:
  explicit TorusManifold(int k) : k_(k) {}
  int ambient_dim() const override { return 2 * k_; }
  int constraint_dim() const override { return k_; }
  Vec constraint(const Vec& x) const override {
    Vec c(k_);
    for (int i = 0; i < k_; ++i)
      c[i] = x[2 * i] * x[2 * i] + x[2 * i + 1] * x[2 * i + 1] - 1.0;
    return c;
  }
  Mat constraint_jacobian(const Vec& x) const override {
    Mat j = Mat::Zero(k_, 2 * k_);
    for (int i = 0; i < k_; ++i) {
      j(i, 2 * i) = 2.0 * x[2 * i];
      j(i, 2 * i + 1) = 2.0 * x[2 * i + 1];
    }
    return j;
  }
  Vec sample(Rng& rng, double) const override {
    Vec x(2 * k_);
    for (int i = 0; i < k_; ++i) {
      const double a = rng.uniform(0.0, 2.0 * M_PI);
      x[2 * i] = std::cos(a);
      x[2 * i + 1] = std::sin(a);
    }
    return x;
  }
  std::string describe() const override { return "torus(" + std::to_string(k_) + ")"; }

 private:
  int k_;
};

// SO(3) embedded in R^9 row-major. Constraints: the 6 independent entries of
// R R^T - I. Orientation (det = +1) is preserved by sampling and retraction
// from the correct component, not by a constraint.
class RotationManifold final : public Manifold {
 public:
  int ambient_dim() const override { return 9; }
  int constraint_dim() const override { return 6; }
  Vec constraint(const Vec& x) const override {
    Eigen::Matrix3d r = unpack(x);
    Eigen::Matrix3d g = r * r.transpose() - Eigen::Matrix3d::Identity();
    Vec c(6);
    c << g(0, 0), g(0, 1), g(0, 2), g(1, 1), g(1, 2), g(2, 2);
    return c;
  }
  Mat constraint_jacobian(const Vec& x) const override {
    // d/dR (R R^T)_{ab} = delta_{a, row} R_{b, col} + delta_{b, row} R_{a, col}
    Mat j = Mat::Zero(6, 9);
    Eigen::Matrix3d r = unpack(x);
    const int idx[6][2] = {{0, 0}, {0, 1}, {0, 2}, {1, 1}, {1, 2}, {2, 2}};
    for (int q = 0; q < 6; ++q) {
      const int a = idx[q][0], b = idx[q][1];
      for (int col = 0; col < 3; ++col) {
        j(q, 3 * a + col) += r(b, col);
        j(q, 3 * b + col) += r(a, col);
      }
    }
    return j;
  }
  Vec sample(Rng& rng, double) const override {
    // Uniform via normalized quaternion from Gaussians.
    double q[4];
    double n2;
    do {
      for (double& qi : q) qi = rng.normal();
      n2 = q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3];
    } while (n2 < 1e-12);
    const double s = 1.0 / std::sqrt(n2);
    const double w = q[0] * s, xq = q[1] * s, y = q[2] * s, z = q[3] * s;
    Eigen::Matrix3d r;
    r << 1 - 2 * (y * y + z * z), 2 * (xq * y - w * z), 2 * (xq * z + w * y),
        2 * (xq * y + w * z), 1 - 2 * (xq * xq + z * z), 2 * (y * z - w * xq),
        2 * (xq * z - w * y), 2 * (y * z + w * xq), 1 - 2 * (xq * xq + y * y);
    Vec out(9);
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k) out[3 * i + k] = r(i, k);
    return out;
  }
  std::string describe() const override { return "so3_matrices"; }

  static Eigen::Matrix3d unpack(const Vec& x) {
    Eigen::Matrix3d r;
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k) r(i, k) = x[3 * i + k];
    return r;
  }
};

class ExprLevelSet final : public Manifold {
 public:
  ExprLevelSet(int n, std::vector<expr::Expr> cs, double h)
      : n_(n), cs_(std::move(cs)), h_(h) {}
  int ambient_dim() const override { return n_; }
  int constraint_dim() const override { return static_cast<int>(cs_.size()); }
  Vec constraint(const Vec& x) const override {
    expr::EvalContext ctx{{x.data(), static_cast<std::size_t>(x.size())}, {}, 0.0, false};
    Vec c(constraint_dim());
    for (int i = 0; i < constraint_dim(); ++i) c[i] = cs_[static_cast<std::size_t>(i)].eval(ctx);
    return c;
  }
  Mat constraint_jacobian(const Vec& x) const override {
    Mat j(constraint_dim(), n_);
    Vec xp = x, xm = x;
    for (int col = 0; col < n_; ++col) {
      xp[col] += h_;
      xm[col] -= h_;
      j.col(col) = (constraint(xp) - constraint(xm)) / (2.0 * h_);
      xp[col] = x[col];
      xm[col] = x[col];
    }
    return j;
  }
  Vec sample(Rng& rng, double box) const override {
    // Box sample, then Gauss-Newton onto the level set; retry on failure.
    for (int attempt = 0; attempt < 64; ++attempt) {
      Vec x(n_);
      for (int i = 0; i < n_; ++i) x[i] = rng.uniform(-box, box);
      try {
        return retract(*this, x, Vec::Zero(n_));
      } catch (const GeometryError&) {
      }
    }
    throw GeometryError("sampling failed on " + describe());
  }
  std::string describe() const override {
    std::string s = "level_set(" + std::to_string(n_);
    for (const auto& c : cs_) s += "; " + c.str();
    return s + ")";
  }

 private:
  int n_;
  std::vector<expr::Expr> cs_;
  double h_;
};

class ProductManifold final : public Manifold {
 public:
  ProductManifold(ManifoldPtr a, ManifoldPtr b) : a_(std::move(a)), b_(std::move(b)) {}
  int ambient_dim() const override { return a_->ambient_dim() + b_->ambient_dim(); }
  int constraint_dim() const override { return a_->constraint_dim() + b_->constraint_dim(); }
  Vec constraint(const Vec& x) const override {
    Vec c(constraint_dim());
    c.head(a_->constraint_dim()) = a_->constraint(x.head(a_->ambient_dim()));
    c.tail(b_->constraint_dim()) = b_->constraint(x.tail(b_->ambient_dim()));
    return c;
  }
  Mat constraint_jacobian(const Vec& x) const override {
    Mat j = Mat::Zero(constraint_dim(), ambient_dim());
    j.topLeftCorner(a_->constraint_dim(), a_->ambient_dim()) =
        a_->constraint_jacobian(x.head(a_->ambient_dim()));
    j.bottomRightCorner(b_->constraint_dim(), b_->ambient_dim()) =
        b_->constraint_jacobian(x.tail(b_->ambient_dim()));
    return j;
  }
  Vec sample(Rng& rng, double box) const override {
    Vec x(ambient_dim());
    x.head(a_->ambient_dim()) = a_->sample(rng, box);
    x.tail(b_->ambient_dim()) = b_->sample(rng, box);
    return x;
  }
  std::string describe() const override {
    return a_->describe() + " x " + b_->describe();
  }

  ManifoldPtr left() const { return a_; }
  ManifoldPtr right() const { return b_; }

 private:
  ManifoldPtr a_, b_;
};

class TangentBundleManifold final : public Manifold {
 public:
  explicit TangentBundleManifold(ManifoldPtr base) : base_(std::move(base)) {}
  int ambient_dim() const override { return 2 * base_->ambient_dim(); }
  int constraint_dim() const override { return 2 * base_->constraint_dim(); }
  Vec constraint(const Vec& x) const override {
    const int n = base_->ambient_dim();
    const Vec p = x.head(n), v = x.tail(n);
    Vec c(constraint_dim());
    c.head(base_->constraint_dim()) = base_->constraint(p);
    c.tail(base_->constraint_dim()) = base_->constraint_jacobian(p) * v;
    return c;
  }
  Mat constraint_jacobian(const Vec& x) const override {
    const int n = base_->ambient_dim();
    const int k = base_->constraint_dim();
    const Vec p = x.head(n), v = x.tail(n);
    Mat j = Mat::Zero(2 * k, 2 * n);
    const Mat dc = base_->constraint_jacobian(p);
    j.topLeftCorner(k, n) = dc;
    j.bottomRightCorner(k, n) = dc;
    // d/dp (Dc(p) v) by central differences.
    const double h = 1e-5;
    Vec pp = p, pm = p;
    for (int col = 0; col < n; ++col) {
      pp[col] += h;
      pm[col] -= h;
      j.block(k, col, k, 1) =
          (base_->constraint_jacobian(pp) * v - base_->constraint_jacobian(pm) * v) / (2.0 * h);
      pp[col] = p[col];
      pm[col] = p[col];
    }
    return j;
  }
  Vec sample(Rng& rng, double box) const override {
    const int n = base_->ambient_dim();
    const Vec p = base_->sample(rng, box);
    const TangentVector tv = sample_tangent(*base_, p, rng);
    Vec x(2 * n);
    x << p, tv.v;
    return x;
  }
  std::string describe() const override { return "T(" + base_->describe() + ")"; }

  ManifoldPtr base() const { return base_; }

 private:
  ManifoldPtr base_;
};

}  // namespace

ManifoldPtr euclidean(int n) { return std::make_shared<EuclideanManifold>(n); }
ManifoldPtr sphere(int n, double r) { return std::make_shared<SphereManifold>(n, r); }
ManifoldPtr torus(int k) { return std::make_shared<TorusManifold>(k); }
ManifoldPtr rotation_matrices() { return std::make_shared<RotationManifold>(); }
ManifoldPtr level_set(int n, std::vector<expr::Expr> cs, double h) {
  if (static_cast<int>(cs.size()) > n)
    throw GeometryError("level set has more constraints than ambient dimensions");
  return std::make_shared<ExprLevelSet>(n, std::move(cs), h);
}
ManifoldPtr product(ManifoldPtr a, ManifoldPtr b) {
  return std::make_shared<ProductManifold>(std::move(a), std::move(b));
}
ManifoldPtr tangent_bundle(ManifoldPtr base) {
  return std::make_shared<TangentBundleManifold>(std::move(base));
}

bool on_manifold(const Manifold& m, const Vec& x, double tol) {
  if (x.size() != m.ambient_dim()) return false;
  if (m.constraint_dim() == 0) return true;
  return m.constraint(x).lpNorm<Eigen::Infinity>() <= tol;
}

Mat tangent_projector(const Manifold& m, const Vec& p, const Config& cfg) {
  const int n = m.ambient_dim();
  const int k = m.constraint_dim();
  if (k == 0) return Mat::Identity(n, n);
  const Mat j = m.constraint_jacobian(p);
  Eigen::JacobiSVD<Mat> svd(j, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv[0] <= 0.0 || sv[k - 1] <= cfg.rank_tol * sv[0])
    throw GeometryError("constraint Jacobian rank-deficient at sample on " + m.describe());
  // P = I - V V^T with V spanning the row space of Dc.
  const Mat v = svd.matrixV();
  return Mat::Identity(n, n) - v * v.transpose();
}

TangentVector tangent_project(const Manifold& m, const Vec& p, const Vec& w,
                              const Config& cfg) {
  if (m.constraint_dim() == 0) return {p, w};
  return {p, tangent_projector(m, p, cfg) * w};
}

TangentVector sample_tangent(const Manifold& m, const Vec& p, Rng& rng, const Config& cfg) {
  Vec w(m.ambient_dim());
  for (int i = 0; i < w.size(); ++i) w[i] = rng.uniform(-1.0, 1.0);
  return tangent_project(m, p, w, cfg);
}

Vec retract(const Manifold& m, const Vec& p, const Vec& v, const Config& cfg) {
  Vec q = v.size() == 0 ? p : Vec(p + v);
  if (m.constraint_dim() == 0) return q;
  for (int iter = 0; iter < 25; ++iter) {
    const Vec c = m.constraint(q);
    if (c.lpNorm<Eigen::Infinity>() <= cfg.on_manifold_tol) return q;
    const Mat j = m.constraint_jacobian(q);
    // Gauss-Newton normal step: q <- q - J^T (J J^T)^{-1} c.
    Eigen::LDLT<Mat> ldlt(j * j.transpose());
    if (ldlt.info() != Eigen::Success)
      throw GeometryError("retraction normal system singular on " + m.describe());
    q -= j.transpose() * ldlt.solve(c);
    if (!q.allFinite()) throw GeometryError("retraction diverged on " + m.describe());
  }
  throw GeometryError("retraction did not converge on " + m.describe() +
                      " (step too large)");
}

SmoothMap expr_map(ManifoldPtr domain, ManifoldPtr codomain,
                   std::vector<expr::Expr> components, double fd_step, std::string name) {
  auto comps = std::make_shared<std::vector<expr::Expr>>(std::move(components));
  const int out_dim = codomain->ambient_dim();
  if (static_cast<int>(comps->size()) != out_dim)
    throw GeometryError("component count does not match codomain ambient dimension");
  SmoothMap f;
  f.domain = std::move(domain);
  f.codomain = std::move(codomain);
  f.fd_step = fd_step;
  f.name = std::move(name);
  f.fn = [comps, out_dim](const Vec& x) {
    expr::EvalContext ctx{{x.data(), static_cast<std::size_t>(x.size())}, {}, 0.0, false};
    Vec y(out_dim);
    for (int i = 0; i < out_dim; ++i) y[i] = (*comps)[static_cast<std::size_t>(i)].eval(ctx);
    return y;
  };
  return f;
}

Mat jacobian(const SmoothMap& f, const Vec& p) {
  if (f.jac) return f.jac(p);
  const double h = f.fd_step;
  Vec xp = p, xm = p;
  Mat j;
  for (int col = 0; col < p.size(); ++col) {
    xp[col] += h;
    xm[col] -= h;
    const Vec d = (f.fn(xp) - f.fn(xm)) / (2.0 * h);
    if (col == 0) j.resize(d.size(), p.size());
    j.col(col) = d;
    xp[col] = p[col];
    xm[col] = p[col];
  }
  return j;
}

TangentVector push_forward(const SmoothMap& f, const TangentVector& tv, const Config& cfg) {
  const Vec fp = f.fn(tv.base);
  Vec image;
  if (f.jac) {
    image = f.jac(tv.base) * tv.v;
  } else {
    const double norm = tv.v.norm();
    if (norm == 0.0) {
      image = Vec::Zero(fp.size());
    } else {
      const double h = f.fd_step;
      const Vec u = tv.v / norm;
      image = (f.fn(tv.base + h * u) - f.fn(tv.base - h * u)) * (norm / (2.0 * h));
    }
  }
  if (f.codomain && f.codomain->constraint_dim() > 0)
    return tangent_project(*f.codomain, fp, image, cfg);
  return {fp, image};
}

}  // namespace gflow::geom
