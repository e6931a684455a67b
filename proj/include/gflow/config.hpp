#pragma once

#include <cstdint>

namespace gflow {

// Central numerical knobs. Every tolerance used by the library lives here so a
// scenario can override it in one place and a report can echo the whole set.
struct Config {
  double on_manifold_tol = 1e-9;   // |c(p)|_inf gate for "point is on manifold"
  double tangency_tol = 1e-8;      // |Dc(p) v|_inf gate for tangent vectors
  double rank_tol = 1e-8;          // sigma_min > rank_tol * sigma_max gate
  double fd_step = 1e-5;           // central-difference step for Jacobians
  double check_tol = 1e-7;         // default residual tolerance for law checks
  double action_tol = 1e-9;        // action law validation tolerance
  double tangent_check_tol = 1e-6; // tangent-groupoid axiom suite
  double naturality_tol = 1e-8;    // projection naturality
  double average_tol_exact = 1e-8;       // finite / torus rules
  double average_tol_quadrature = 1e-6;  // SO(3) rule
  double gauge_tol = 1e-5;
  double etale_assignment_tol = 1e-8;
  double etale_functoriality_tol = 1e-7;
  double etale_integral_tol = 1e-6;
  double flow_check_tol = 1e-5;

  // Haar quadrature orders.
  int haar_torus_nodes = 64;       // trapezoid nodes per torus angle
  int haar_so3_beta_nodes = 16;    // Gauss-Legendre nodes in beta
  int haar_so3_ab_nodes = 32;      // trapezoid nodes in alpha and gamma

  // Integrator defaults.
  double step = 1e-3;
  double t_final = 1.0;
  int record_stride = 1;
  long max_steps = 40000000;
  double escape_radius = 1e8;
  bool step_halving = false;

  // Sampling.
  int sample_count = 100;
  double sample_box = 2.0;         // Euclidean directions drawn from [-box, box]
  std::uint64_t seed = 0x9e3779b97f4a7c15ull;
};

}  // namespace gflow
