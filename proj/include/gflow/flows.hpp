#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gflow/config.hpp"
#include "gflow/fields.hpp"
#include "gflow/geometry.hpp"
#include "gflow/report.hpp"

namespace gflow::flows {

using fields::ActionField;
using fields::FieldEquivalence;
using geom::Vec;
using groups::GroupElement;

struct FlowError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Fixed-step projected RK4; optional step halving refines only across a
// failing step (blow-up localization), recorded samples stay on the h grid.
struct Integrator {
  double h = 1e-3;
  bool step_halving = false;
  long max_steps = 40000000;
  double escape_radius = 1e8;
  int record_stride = 1;

  static Integrator from_config(const Config& cfg) {
    return {cfg.step, cfg.step_halving, cfg.max_steps, cfg.escape_radius, cfg.record_stride};
  }
};

enum class TrajStatus { Complete, Escaped, StepFailure };
const char* to_string(TrajStatus s);

struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> points;  // times[0] = 0 holds the initial point exactly
  TrajStatus status = TrajStatus::Complete;
  double end_time = 0.0;             // time reached
  double derivative_residual = 0.0;  // central-difference vs field, recorded samples
};

struct FlowResult {
  std::string field_name;
  std::vector<Vec> grid;
  std::vector<Trajectory> trajectories;
  double t_final = 0.0;
  Integrator integrator;
};

// Integral curve of a (raw, ambient) field on M through m0 over [0, T].
Trajectory integrate_curve(const geom::Manifold& m, const std::function<Vec(const Vec&)>& x,
                           const Vec& m0, double t_final, const Integrator& integ,
                           const Config& cfg = {});

// Trajectories of an action field from every grid point.
FlowResult flow(const ActionField& f, const std::vector<Vec>& grid, double t_final,
                const Integrator& integ, const Config& cfg = {});

// Residuals: initial condition, integral condition, discrete group law
// (re-integration from stored interior points at grid-aligned times), and
// equivariance over sampled group elements.
VerificationReport check_flow(const FlowResult& fr, const ActionField& f, int n_samples,
                              double tol, Rng& rng, const Config& cfg = {});

struct GaugeTrajectory {
  std::vector<double> times;
  std::vector<GroupElement> gauge;  // g(m, t), g(m, 0) = initial gauge exactly
  bool non_free = false;            // iota rank-deficient somewhere on the orbit
  double residual = 0.0;            // max |Psi(m,t) - Phi(m,t) g(m,t)|
  TrajStatus status = TrajStatus::Complete;
};

struct GaugeTransport {
  std::vector<GaugeTrajectory> trajectories;
  double max_residual = 0.0;
};

// Solves the gauge ODE g' = g psi(q), q' = X'(q), q(0) = m, g(0) = initial
// gauge (identity unless probing), then certifies Psi(m,t) = Phi(m,t) g(m,t)
// against the stored flows. phi and psi_flow must share grid and integrator.
GaugeTransport gauge_transport(const FlowResult& phi, const FlowResult& psi_flow,
                               const ActionField& f_target, const FieldEquivalence& psi,
                               const Config& cfg = {},
                               std::optional<GroupElement> initial_gauge = {});

// pi: M -> N proper (asserted) intertwining X_M and X_N: checks the
// intertwining precondition, then integrates both curves and verifies
// pi(gamma_M(t)) = gamma_N(t) and that gamma_M completes when gamma_N does.
VerificationReport proper_lift_check(const geom::SmoothMap& pi,
                                     const std::function<Vec(const Vec&)>& x_m,
                                     const std::function<Vec(const Vec&)>& x_n, const Vec& m0,
                                     double t_final, const Integrator& integ, int n_samples,
                                     double tol, Rng& rng, const Config& cfg = {});

}  // namespace gflow::flows
