#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "gflow/config.hpp"
#include "gflow/groupoid.hpp"
#include "gflow/report.hpp"

namespace gflow::fields {

using geom::TangentVector;
using geom::Vec;
using gpd::GMapFn;
using gpd::GPoint;
using gpd::GroupoidPtr;
using groups::GroupElement;

struct FieldError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Vector field on an action groupoid M x| G in the (X, Y) presentation:
// X: M -> TM and Y: M x G -> g. The raw data need not satisfy the structure
// laws; validate / to_groupoid_field check them, average works on anything.
struct ActionField {
  GroupoidPtr groupoid;  // Action presentation
  std::function<Vec(const Vec&)> x;                        // ambient value, projected on use
  std::function<Vec(const Vec&, const GroupElement&)> y;   // null => Y == 0
  std::string name;

  bool has_y() const { return static_cast<bool>(y); }
};

// Arrow psi: M -> g between action fields (zero-length vectors for finite
// groups, where the only equivalence is trivial).
struct FieldEquivalence {
  GroupoidPtr groupoid;
  std::function<Vec(const Vec&)> psi;
  std::string name;
};

// Vector field on a groupoid: a section-morphism Gamma -> T Gamma.
struct GroupoidVectorField {
  GroupoidPtr groupoid;
  GroupoidPtr tangent;
  GMapFn x0;  // Gamma_0 -> T Gamma_0
  GMapFn x1;  // Gamma_1 -> T Gamma_1
  std::string name;
};

// X evaluated and projected onto T_m M.
TangentVector eval_x(const ActionField& f, const Vec& m, const Config& cfg = {});
// Y(m, g), the zero algebra vector when no Y is declared.
Vec eval_y(const ActionField& f, const Vec& m, const GroupElement& g);
Vec eval_psi(const FieldEquivalence& e, const Vec& m);

ActionField zero_action_field(GroupoidPtr g);
FieldEquivalence zero_equivalence(GroupoidPtr g);

// The two structure laws of the (X, Y) presentation, sampled:
//   X(m g) = X(m) g + iota(Y(m, g)) at m g,
//   Y(m, g h) = Ad_{h^-1} Y(m, g) + Y(m g, h).
VerificationReport validate_action_field(const ActionField& f, int n_samples, double tol,
                                         Rng& rng, const Config& cfg = {});

// Packages a valid (X, Y) pair as a groupoid vector field X1(m,g) =
// (X(m), Y(m,g)) in the TM x G x g presentation. Throws FieldError with the
// worst sample when the structure laws fail above tol.
GroupoidVectorField to_groupoid_field(const ActionField& f, int n_samples, double tol,
                                      Rng& rng, const Config& cfg = {});

// Zero section on both levels.
GroupoidVectorField zero_field(GroupoidPtr g, const Config& cfg = {});

// Section and morphism laws of a groupoid vector field over samples.
VerificationReport check_groupoid_field(const GroupoidVectorField& f, int n_samples,
                                        double tol, Rng& rng);

struct AveragingResult {
  ActionField averaged;     // Y == 0
  FieldEquivalence psi;     // certificate arrow: input -> averaged
};

// Haar averaging: X~(m) = integral of X(m g) g^-1, psi(m) = integral of
// Ad_g Y(m, g). Fixed node order; exact mean for finite groups.
AveragingResult average(const ActionField& f, const Config& cfg = {});

// max over samples (m, g) of |X(m g) - X(m) g|.
double invariance_residual(const ActionField& f, int n_samples, Rng& rng,
                           const Config& cfg = {});

// Residuals of X'(m) = X(m) + iota psi(m) and
// Y(m,g) + psi(m g) = Ad_{g^-1} psi(m) + Y'(m,g) over samples.
VerificationReport check_equivalence(const ActionField& f, const ActionField& fprime,
                                     const FieldEquivalence& psi, int n_samples, double tol,
                                     Rng& rng, const Config& cfg = {});

struct SupportLabel {
  Vec point;
  bool equivalent_to_zero = false;
  double residual = 0.0;        // least-squares residual |X~(m) - iota xi|
  double orbit_residual = 0.0;  // Ad-compatibility of pointwise solutions
};

// Sampled support indicator of an invariant field: at each sample solve
// X~(m) = iota(m, xi) in least squares (Tikhonov floor 1e-12, residual taken
// unregularized) and test Ad-compatibility along the sampled orbit.
std::vector<SupportLabel> support_indicator(const ActionField& f_tilde,
                                            const std::vector<Vec>& samples, double tol,
                                            Rng& rng, const Config& cfg = {});

// Pointwise least-squares solve X~(m) = iota(m, xi); returns xi and the
// unregularized residual.
std::pair<Vec, double> solve_iota(const ActionField& f_tilde, const Vec& m,
                                  const Config& cfg = {});

// Pointwise linear combination a F + b F' (same groupoid).
ActionField linear_combination(double a, const ActionField& f, double b,
                               const ActionField& fprime, std::string name = {});

}  // namespace gflow::fields
