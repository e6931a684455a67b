#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "gflow/config.hpp"
#include "gflow/expr.hpp"
#include "gflow/flows.hpp"
#include "gflow/geometry.hpp"
#include "gflow/report.hpp"

namespace gflow::etale {

using geom::Vec;

struct EtaleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One chart of an etale cover. The open domain is an inequality expression
// (> 0) in the chart coordinates; an empty expression means the whole chart.
struct Chart {
  std::string name;
  geom::ManifoldPtr space;
  expr::Expr domain;
};

// Etale map between charts, defined on an optional open subdomain of `from`.
struct Transition {
  std::string name;
  int from = -1;
  int to = -1;
  geom::SmoothMap map;
  expr::Expr domain;
};

struct ChartSystem {
  std::vector<Chart> charts;
  std::vector<Transition> transitions;
  // (inner, outer, composite) transition indices with composite = outer . inner.
  std::vector<std::array<int, 3>> compositions;

  int chart_index(const std::string& name) const;
  int transition_index(const std::string& name) const;
};

using ChartField = std::function<Vec(const Vec&)>;

struct EtaleFieldAssignment {
  std::vector<ChartField> per_chart;  // one field per chart
  std::string name;
};

bool in_domain(const expr::Expr& domain, const Vec& u);

// Rejection sampling inside the chart domain (and the transition domain when
// `transition` is given).
Vec sample_domain(const ChartSystem& sys, int chart, const Transition* transition, Rng& rng,
                  const Config& cfg = {});

// Pullback at a point: solve T_u f w = X_V(f(u)) on the tangent spaces.
// Throws EtaleError when the restricted Jacobian is singular (map not etale
// at u).
Vec pullback_at(const geom::SmoothMap& f, const ChartField& x_v, const Vec& u,
                const Config& cfg = {});

ChartField pullback(const geom::SmoothMap& f, ChartField x_v, const Config& cfg = {});

// Compatibility residual per transition (f^* X_to = X_from on the overlap),
// pullback functoriality on declared composable pairs, and constant fibre
// dimension across charts.
VerificationReport check_assignment(const ChartSystem& sys,
                                    const EtaleFieldAssignment& assignment, int n_samples,
                                    double tol_triangle, double tol_functorial, Rng& rng,
                                    const Config& cfg = {});

// Central-difference time derivative of chart trajectories against the chart
// field.
VerificationReport check_etale_integral(const ChartSystem& sys, int chart,
                                        const std::vector<flows::Trajectory>& trajectories,
                                        const ChartField& x_u, double tol,
                                        const Config& cfg = {});

}  // namespace gflow::etale
