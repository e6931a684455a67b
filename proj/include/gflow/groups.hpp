#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "gflow/config.hpp"
#include "gflow/geometry.hpp"
#include "gflow/rng.hpp"

namespace gflow::groups {

using geom::Mat;
using geom::TangentVector;
using geom::Vec;

struct GroupError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class GroupKind { Finite, Torus, SO3 };

// One payload struct covers the catalog: finite index, torus angles (in
// [0, 2pi)), or a rotation matrix. Only the member matching the group kind is
// meaningful.
struct GroupElement {
  int index = 0;
  Vec angles;
  Eigen::Matrix3d rot = Eigen::Matrix3d::Identity();
};

class CompactGroup {
 public:
  virtual ~CompactGroup() = default;

  virtual GroupKind kind() const = 0;
  virtual int lie_dim() const = 0;
  virtual GroupElement identity() const = 0;
  virtual GroupElement multiply(const GroupElement& a, const GroupElement& b) const = 0;
  virtual GroupElement inverse(const GroupElement& a) const = 0;

  // exp(t xi); throws GroupError for finite groups (lie_dim 0).
  virtual GroupElement exp(const Vec& xi, double t) const = 0;
  // Ad_g xi in the fixed basis; throws for finite groups.
  virtual Vec ad(const GroupElement& g, const Vec& xi) const = 0;

  virtual double distance(const GroupElement& a, const GroupElement& b) const = 0;
  virtual GroupElement sample(Rng& rng) const = 0;

  // Haar quadrature nodes and weights summing to 1, in a fixed order.
  virtual std::vector<std::pair<GroupElement, double>> haar_nodes(const Config& cfg) const = 0;

  // Coordinates used when a group element is part of an embedded arrow space:
  // torus -> (cos, sin) pairs, SO3 -> 9 matrix entries, finite -> empty.
  virtual int embedded_dim() const = 0;
  virtual Vec embed(const GroupElement& g) const = 0;
  virtual GroupElement unembed(const Vec& coords) const = 0;
  // The embedded group manifold, or nullptr for finite groups.
  virtual geom::ManifoldPtr group_manifold() const = 0;

  virtual int order() const { return 0; }  // finite groups only
  virtual GroupElement element(int index) const;

  virtual std::string describe() const = 0;
};

using GroupPtr = std::shared_ptr<const CompactGroup>;

// Finite group from an explicit Cayley table. Validates associativity and
// inverse laws exhaustively at construction.
GroupPtr finite_group(std::vector<std::string> element_names,
                      std::vector<std::vector<int>> cayley, int identity_index,
                      std::string name);
GroupPtr torus_group(int k);
GroupPtr so3_group();

// Builtin catalog: "C2", "C3", "C4", "S3", "circle", "torus2", "so3".
GroupPtr builtin_group(const std::string& name);
std::vector<std::string> builtin_group_names();

// Right action a: M x G -> M. `act` evaluates on ambient coordinates; the
// optional members supply analytic derivatives where closed forms exist.
struct SmoothAction {
  GroupPtr group;
  geom::ManifoldPtr manifold;
  std::function<Vec(const Vec&, const GroupElement&)> act;
  std::function<Mat(const Vec&, const GroupElement&)> act_jacobian;  // d/dm, optional
  std::function<Vec(const Vec&, const Vec&)> inf_generator;          // iota(m, xi), optional
  std::string name;

  Vec operator()(const Vec& m, const GroupElement& g) const { return act(m, g); }
};

// Linear action of a finite group given one matrix per element.
SmoothAction matrix_action(GroupPtr group, geom::ManifoldPtr m, std::vector<Mat> mats,
                           std::string name = "matrix");
// Torus angles rotate coordinate pairs (2j, 2j+1); pairs_per_angle[i] lists
// the pairs angle i acts on (default: pair i).
SmoothAction rotation_action(GroupPtr group, geom::ManifoldPtr m,
                             std::vector<std::vector<int>> pairs_per_angle = {});
// SO(3) on R^3 (or S^2): v . g = g^T v.
SmoothAction so3_linear_action(GroupPtr group, geom::ManifoldPtr m);
// Coordinate permutation right action of the builtin S3 on R^3.
SmoothAction permutation_action(GroupPtr s3, geom::ManifoldPtr m);
// Action components as expressions in x1..xn and g1..gk (torus: angles,
// SO3: row-major matrix entries g1..g9).
SmoothAction expr_action(GroupPtr group, geom::ManifoldPtr m,
                         std::vector<expr::Expr> components, double fd_step = 1e-5);

// a(m, e) = m and a(a(m, g), h) = a(m, g h) at sampled (m, g, h).
// Returns the worst residual; throws GroupError above tol if `hard` is set.
double validate_action(const SmoothAction& a, Rng& rng, int n_samples, double tol,
                       bool hard = true);

// Haar integral of a vector-valued integrand, fixed-order summation.
Vec haar_average(const CompactGroup& g, const std::function<Vec(const GroupElement&)>& f,
                 const Config& cfg = {});

// iota(m, xi): derivative of the action at m in direction xi, tangent to M.
// Finite groups give the zero vector. Central differences unless the action
// carries a closed form.
TangentVector inf_action(const SmoothAction& a, const Vec& m, const Vec& xi,
                         const Config& cfg = {});

// Pushforward of a tangent vector by the diffeomorphism a(., g).
TangentVector tangent_action(const SmoothAction& a, const TangentVector& tv,
                             const GroupElement& g, const Config& cfg = {});

// The diffeomorphism a(., g) as a SmoothMap (for Jacobian-based checks).
geom::SmoothMap action_map(const SmoothAction& a, const GroupElement& g);

// Gauss-Legendre nodes/weights on [-1, 1] (Newton on Legendre polynomials).
std::vector<std::pair<double, double>> gauss_legendre(int n);

}  // namespace gflow::groups
