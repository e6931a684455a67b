#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "gflow/config.hpp"
#include "gflow/expr.hpp"
#include "gflow/rng.hpp"

namespace gflow::geom {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct GeometryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Embedded manifolds presented as level sets {c = 0} in R^n. Tangent spaces
// are ker Dc(p); retraction is Gauss-Newton projection back onto the level
// set. Euclidean space is the k = 0 case.
class Manifold {
 public:
  virtual ~Manifold() = default;

  virtual int ambient_dim() const = 0;
  virtual int constraint_dim() const = 0;
  int dim() const { return ambient_dim() - constraint_dim(); }

  virtual Vec constraint(const Vec& x) const = 0;
  virtual Mat constraint_jacobian(const Vec& x) const = 0;

  // Draws an on-manifold point. `box` bounds unconstrained coordinates.
  virtual Vec sample(Rng& rng, double box) const = 0;

  virtual std::string describe() const = 0;
};

using ManifoldPtr = std::shared_ptr<const Manifold>;

struct TangentVector {
  Vec base;
  Vec v;
};

ManifoldPtr euclidean(int n);
ManifoldPtr sphere(int ambient_n, double radius = 1.0);
ManifoldPtr torus(int k);  // k unit circles embedded in R^{2k}
ManifoldPtr rotation_matrices();  // SO(3) as 3x3 matrices in R^9, row-major
// Level set from constraint expressions c_i(x1..xn) = 0 with declared rank k.
ManifoldPtr level_set(int ambient_n, std::vector<expr::Expr> constraints,
                      double fd_step = 1e-5);
// Product manifold: ambient concatenation, constraints stacked.
ManifoldPtr product(ManifoldPtr left, ManifoldPtr right);
// Tangent bundle as doubled ambient (p, v) with c(p) = 0, Dc(p) v = 0.
ManifoldPtr tangent_bundle(ManifoldPtr base);

bool on_manifold(const Manifold& m, const Vec& x, double tol);

// Orthogonal projector onto ker Dc(p). Throws GeometryError if the numerical
// rank of Dc(p) falls below the declared constraint count.
Mat tangent_projector(const Manifold& m, const Vec& p, const Config& cfg = {});

TangentVector tangent_project(const Manifold& m, const Vec& p, const Vec& w,
                              const Config& cfg = {});

// Draws a tangent vector at p with entries O(1).
TangentVector sample_tangent(const Manifold& m, const Vec& p, Rng& rng,
                             const Config& cfg = {});

// Gauss-Newton projection of p + v onto {c = 0}; q = p + v + O(|v|^2).
// Throws GeometryError after 25 iterations without convergence.
Vec retract(const Manifold& m, const Vec& p, const Vec& v, const Config& cfg = {});

// Smooth map between manifolds; evaluator acts on ambient coordinates and is
// assumed to extend smoothly off the level set (true of all catalog maps).
struct SmoothMap {
  ManifoldPtr domain;
  ManifoldPtr codomain;
  std::function<Vec(const Vec&)> fn;
  std::function<Mat(const Vec&)> jac;  // optional analytic Jacobian
  double fd_step = 1e-5;
  std::string name;

  Vec operator()(const Vec& x) const { return fn(x); }
};

SmoothMap expr_map(ManifoldPtr domain, ManifoldPtr codomain,
                   std::vector<expr::Expr> components, double fd_step = 1e-5,
                   std::string name = {});

// Analytic Jacobian when provided, else central differences at fd_step.
Mat jacobian(const SmoothMap& f, const Vec& p);

// Directional derivative Df(p)[v], projected onto the codomain tangent space
// at f(p) when the codomain is constrained.
TangentVector push_forward(const SmoothMap& f, const TangentVector& tv,
                           const Config& cfg = {});

}  // namespace gflow::geom
