#pragma once

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gflow/config.hpp"
#include "gflow/geometry.hpp"
#include "gflow/groups.hpp"
#include "gflow/report.hpp"
#include "gflow/rng.hpp"

namespace gflow::gpd {

using geom::Mat;
using geom::Vec;
using groups::GroupElement;

struct GroupoidError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A point of a groupoid space: continuous ambient coordinates on a chart
// manifold plus a discrete sheet label (finite-group factor, finite-groupoid
// element, chart index). Smooth structure lives entirely in `x`.
struct GPoint {
  Vec x;
  int label = 0;
};

struct GSpace {
  geom::ManifoldPtr chart;  // 0-dimensional for purely discrete spaces
  int labels = 1;
};

// Distance used by all residual checks: sheets must match exactly, continuous
// parts compare in the ambient sup norm.
double gdistance(const GPoint& a, const GPoint& b);

using GMapFn = std::function<GPoint(const GPoint&)>;
using GMulFn = std::function<GPoint(const GPoint&, const GPoint&)>;

enum class Presentation { Action, Finite, Tangent, Generic };

// Finite groupoid as explicit tables. comp[a][b] is the composite of
// a: x -> y followed by b: y -> z, or -1 when dst[a] != src[b].
struct FiniteTables {
  int n_objects = 0;
  std::vector<int> src, dst;
  std::vector<std::vector<int>> comp;
  std::vector<int> unit;  // per object
  std::vector<int> inv;   // per arrow, derived at construction

  int n_arrows() const { return static_cast<int>(src.size()); }
};

class LieGroupoid;
using GroupoidPtr = std::shared_ptr<const LieGroupoid>;

// Lie groupoid as data: spaces, structure maps, and samplers. mu is smoothly
// extended off the fibre product; composable pairs are generated by
// construction (pick an arrow, then lift its target), never by solving.
class LieGroupoid {
 public:
  GSpace objects;
  GSpace arrows;

  GMapFn src, tgt, unit, inv;
  GMulFn mul;

  Presentation presentation = Presentation::Generic;
  bool is_etale = false;
  bool is_proper = false;
  bool proper_asserted = false;  // declared by scenario rather than derived

  std::function<GPoint(Rng&)> sample_object;
  std::function<GPoint(Rng&)> sample_arrow;
  // An arrow whose source is the given object.
  std::function<GPoint(const GPoint&, Rng&)> lift_arrow;

  // Presentation payloads.
  std::shared_ptr<const groups::SmoothAction> action;  // Action
  std::shared_ptr<const FiniteTables> tables;          // Finite
  GroupoidPtr parent;                                  // Tangent

  std::string name;

  // Action-groupoid arrow codecs ((m, g) <-> GPoint).
  GPoint encode_arrow(const Vec& m, const GroupElement& g) const;
  std::pair<Vec, GroupElement> decode_arrow(const GPoint& arrow) const;

  // Tangent-of-action arrow codecs ((m, v, g, xi) <-> GPoint).
  GPoint encode_tangent_arrow(const Vec& m, const Vec& v, const GroupElement& g,
                              const Vec& xi) const;
  std::tuple<Vec, Vec, GroupElement, Vec> decode_tangent_arrow(const GPoint& arrow) const;
};

// The action groupoid M x G => M of a validated right action.
GroupoidPtr action_groupoid(std::shared_ptr<const groups::SmoothAction> action, Rng& rng,
                            const Config& cfg = {});

GroupoidPtr finite_groupoid(FiniteTables tables, std::string name);
// Pair groupoid on n points (arrows (i, j): i -> j).
GroupoidPtr pair_groupoid(int n);
// One object, arrows the given finite group (the delooping BG).
GroupoidPtr delooping(groups::GroupPtr finite);
GroupoidPtr disjoint_union(const GroupoidPtr& a, const GroupoidPtr& b);
// The Euclidean pair groupoid R^n x R^n => R^n.
GroupoidPtr euclidean_pair_groupoid(int n);

// Tangent groupoid: tangent bundles and derivatives everywhere. Action
// groupoids get the TM x G x g presentation; other presentations double the
// ambient coordinates and differentiate structure maps directionally.
GroupoidPtr tangent_groupoid(const GroupoidPtr& gamma, const Config& cfg = {});

// Axiom suite: unit/inverse/associativity/coherence residuals over samples.
VerificationReport check_groupoid(const LieGroupoid& g, int n_samples, double tol, Rng& rng);

struct GroupoidMorphism {
  GroupoidPtr source;
  GroupoidPtr target;
  GMapFn f0, f1;
  std::string name;
  // Set when the morphism is induced by an equivariant map of action
  // groupoids (same group, f1 = (f0, id)); enables the exact tangent lift.
  std::optional<geom::SmoothMap> equivariant_map;
};

// Intertwining residuals: f0 s = s f1, f0 t = t f1, f1 e = e f0, f1 mu = mu.
VerificationReport check_morphism(const GroupoidMorphism& f, int n_samples, double tol,
                                  Rng& rng);

// A morphism of action groupoids induced by an equivariant map (group fixed).
GroupoidMorphism equivariant_morphism(GroupoidPtr source, GroupoidPtr target,
                                      geom::SmoothMap f, std::string name = {});
GroupoidMorphism identity_morphism(GroupoidPtr g);
GroupoidMorphism compose_morphisms(const GroupoidMorphism& outer,
                                   const GroupoidMorphism& inner);
// Tangent of a morphism, between the already-built tangent groupoids.
GroupoidMorphism tangent_morphism(const GroupoidMorphism& f, GroupoidPtr tangent_source,
                                  GroupoidPtr tangent_target, const Config& cfg = {});
// The natural projection T Gamma -> Gamma (drop tangent vectors).
GroupoidMorphism groupoid_projection(const GroupoidPtr& tangent);

// 2-morphism between parallel morphisms f, g: a map Gamma_0 -> Delta_1.
struct GroupoidTwoMorphism {
  GroupoidPtr source;
  GroupoidPtr target;
  GMapFn phi;
};

// s phi = f0, t phi = g0, and naturality mu(f1(c), phi(t c)) = mu(phi(s c), g1(c)).
VerificationReport check_two_morphism(const GroupoidMorphism& f, const GroupoidMorphism& g,
                                      const GroupoidTwoMorphism& phi, int n_samples,
                                      double tol, Rng& rng);

// Finite morphism as index tables.
struct FiniteMorphism {
  GroupoidPtr source;
  GroupoidPtr target;
  std::vector<int> f0;  // object -> object
  std::vector<int> f1;  // arrow -> arrow
  std::string name;
};

// Validates that (f0, f1) is a groupoid morphism of the finite tables.
void validate_finite_morphism(const FiniteMorphism& f);
FiniteMorphism finite_identity(const GroupoidPtr& g);

struct DictionaryResult {
  long long two_morphism_count = 0;
  bool roundtrip_identity = true;  // unit pre/post-composition reproduces each phi
  std::vector<std::vector<int>> two_morphisms;  // each: object -> arrow index
};

// Exhaustive enumeration of 2-morphisms f => g between finite groupoids, plus
// the bijection sanity pass on the enumerated set.
DictionaryResult dictionary_check(const FiniteMorphism& f, const FiniteMorphism& g);

}  // namespace gflow::gpd
