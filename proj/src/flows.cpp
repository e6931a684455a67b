#include "gflow/flows.hpp"

#include <algorithm>
#include <cmath>

namespace gflow::flows {

namespace {

using geom::Manifold;
using geom::TangentVector;

struct StepFail {};

// One projected RK4 step: every stage evaluates the field, projects onto the
// tangent space, and lands back on the manifold through the retraction.
Vec rk4_step(const Manifold& m, const std::function<Vec(const Vec&)>& x, const Vec& y,
             double h, const Config& cfg) {
  const auto stage = [&](const Vec& p) -> Vec {
    const Vec raw = x(p);
    if (!raw.allFinite()) throw StepFail{};
    return geom::tangent_project(m, p, raw, cfg).v;
  };
  const Vec k1 = stage(y);
  const Vec k2 = stage(geom::retract(m, y, 0.5 * h * k1, cfg));
  const Vec k3 = stage(geom::retract(m, y, 0.5 * h * k2, cfg));
  const Vec k4 = stage(geom::retract(m, y, h * k3, cfg));
  const Vec out = geom::retract(m, y, (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), cfg);
  if (!out.allFinite()) throw StepFail{};
  return out;
}

// Advance by h, halving across failures when enabled.
Vec advance(const Manifold& m, const std::function<Vec(const Vec&)>& x, const Vec& y,
            double h, bool halving, int depth, const Config& cfg) {
  try {
    return rk4_step(m, x, y, h, cfg);
  } catch (const StepFail&) {
    if (!halving || depth >= 24) throw;
  } catch (const geom::GeometryError&) {
    if (!halving || depth >= 24) throw StepFail{};
  }
  const Vec mid = advance(m, x, y, 0.5 * h, halving, depth + 1, cfg);
  return advance(m, x, mid, 0.5 * h, halving, depth + 1, cfg);
}

}  // namespace

const char* to_string(TrajStatus s) {
  switch (s) {
    case TrajStatus::Complete: return "complete";
    case TrajStatus::Escaped: return "escaped";
    case TrajStatus::StepFailure: return "step-failure";
  }
  return "?";
}

Trajectory integrate_curve(const Manifold& m, const std::function<Vec(const Vec&)>& x,
                           const Vec& m0, double t_final, const Integrator& integ,
                           const Config& cfg) {
  Trajectory traj;
  long n_steps = std::lround(t_final / integ.h);
  if (n_steps < 1) n_steps = 1;
  if (n_steps > integ.max_steps)
    throw FlowError("step budget exceeded: " + std::to_string(n_steps) + " > " +
                    std::to_string(integ.max_steps));
  const double h = t_final / static_cast<double>(n_steps);

  traj.times.push_back(0.0);
  traj.points.push_back(m0);  // stored, not integrated
  Vec y = m0;
  for (long j = 1; j <= n_steps; ++j) {
    try {
      y = advance(m, x, y, h, integ.step_halving, 0, cfg);
    } catch (const StepFail&) {
      traj.status = TrajStatus::StepFailure;
      traj.end_time = static_cast<double>(j - 1) * h;
      return traj;
    } catch (const geom::GeometryError&) {
      traj.status = TrajStatus::StepFailure;
      traj.end_time = static_cast<double>(j - 1) * h;
      return traj;
    }
    if (y.lpNorm<Eigen::Infinity>() > integ.escape_radius) {
      traj.status = TrajStatus::Escaped;
      traj.end_time = static_cast<double>(j) * h;
      return traj;
    }
    if (j % integ.record_stride == 0 || j == n_steps) {
      traj.times.push_back(static_cast<double>(j) * h);
      traj.points.push_back(y);
    }
  }
  traj.status = TrajStatus::Complete;
  traj.end_time = t_final;

  // Integral-condition residual over interior recorded samples.
  for (std::size_t j = 1; j + 1 < traj.points.size(); ++j) {
    const double dt = traj.times[j + 1] - traj.times[j - 1];
    const Vec dphi = (traj.points[j + 1] - traj.points[j - 1]) / dt;
    const Vec field = geom::tangent_project(m, traj.points[j], x(traj.points[j]), cfg).v;
    traj.derivative_residual =
        std::max(traj.derivative_residual, (dphi - field).lpNorm<Eigen::Infinity>());
  }
  return traj;
}

FlowResult flow(const ActionField& f, const std::vector<Vec>& grid, double t_final,
                const Integrator& integ, const Config& cfg) {
  FlowResult fr;
  fr.field_name = f.name;
  fr.grid = grid;
  fr.t_final = t_final;
  fr.integrator = integ;
  const auto& m = *f.groupoid->action->manifold;
  for (const Vec& m0 : grid)
    fr.trajectories.push_back(integrate_curve(m, f.x, m0, t_final, integ, cfg));
  return fr;
}

VerificationReport check_flow(const FlowResult& fr, const ActionField& f, int n_samples,
                              double tol, Rng& rng, const Config& cfg) {
  VerificationReport rep;
  rep.subject = "flow:" + fr.field_name;
  const auto& a = *f.groupoid->action;
  const auto& m = *a.manifold;

  double r_initial = 0.0, r_deriv = 0.0, r_group = 0.0, r_equiv = 0.0, r_manifold = 0.0;
  for (std::size_t i = 0; i < fr.trajectories.size(); ++i) {
    const auto& traj = fr.trajectories[i];
    r_initial = std::max(
        r_initial, (traj.points.front() - fr.grid[i]).lpNorm<Eigen::Infinity>());
    r_deriv = std::max(r_deriv, traj.derivative_residual);
    if (m.constraint_dim() > 0)
      for (const Vec& p : traj.points)
        r_manifold = std::max(r_manifold, m.constraint(p).lpNorm<Eigen::Infinity>());
  }

  // Group law at grid-aligned times: re-integrate from a stored interior
  // point and compare against the stored tail.
  std::vector<std::size_t> complete;
  for (std::size_t i = 0; i < fr.trajectories.size(); ++i)
    if (fr.trajectories[i].status == TrajStatus::Complete) complete.push_back(i);
  for (int s = 0; s < std::min(n_samples, 8) && !complete.empty(); ++s) {
    const auto& traj =
        fr.trajectories[complete[static_cast<std::size_t>(
            rng.uniform_int(static_cast<int>(complete.size())))]];
    const std::size_t nrec = traj.points.size();
    if (nrec < 3) continue;
    const std::size_t js = 1 + static_cast<std::size_t>(rng.uniform_int(static_cast<int>(nrec - 2)));
    const std::size_t jt = static_cast<std::size_t>(
        rng.uniform_int(static_cast<int>(nrec - js)));
    if (jt == 0) continue;
    const double t_tail = traj.times[js + jt] - traj.times[js];
    const Trajectory rerun =
        integrate_curve(m, f.x, traj.points[js], t_tail, fr.integrator, cfg);
    if (rerun.status == TrajStatus::Complete)
      r_group = std::max(r_group, (rerun.points.back() - traj.points[js + jt])
                                      .lpNorm<Eigen::Infinity>());
  }

  // Equivariance: Phi(m g, t) = Phi(m, t) g over sampled group elements.
  for (int s = 0; s < std::min(n_samples, 6) && !complete.empty(); ++s) {
    const std::size_t i = complete[static_cast<std::size_t>(
        rng.uniform_int(static_cast<int>(complete.size())))];
    const auto& traj = fr.trajectories[i];
    const GroupElement g = a.group->sample(rng);
    const Trajectory moved = integrate_curve(m, f.x, a.act(fr.grid[i], g), fr.t_final,
                                             fr.integrator, cfg);
    if (moved.status != TrajStatus::Complete) continue;
    const std::size_t nrec = std::min(moved.points.size(), traj.points.size());
    for (std::size_t j = 0; j < nrec; ++j)
      r_equiv = std::max(r_equiv, (moved.points[j] - a.act(traj.points[j], g))
                                      .lpNorm<Eigen::Infinity>());
  }

  rep.add("flow_initial_condition", r_initial, 1e-15);
  rep.add("flow_integral_condition", r_deriv, tol);
  rep.add("flow_on_manifold", r_manifold, cfg.on_manifold_tol * 10.0);
  rep.add("flow_group_law", r_group, tol);
  rep.add("flow_equivariance", r_equiv, tol);
  return rep;
}

namespace {

// Gauge coordinates: torus angles integrate in R^k (wrapped on storage),
// rotations integrate in R^{3x3} with polar re-orthonormalization.
Eigen::Matrix3d reorthonormalize(const Eigen::Matrix3d& r) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d out = svd.matrixU() * svd.matrixV().transpose();
  if (out.determinant() < 0.0) {
    Eigen::Matrix3d flip = Eigen::Matrix3d::Identity();
    flip(2, 2) = -1.0;
    out = svd.matrixU() * flip * svd.matrixV().transpose();
  }
  return out;
}

Eigen::Matrix3d hat3(const Vec& xi) {
  Eigen::Matrix3d m;
  m << 0, -xi[2], xi[1], xi[2], 0, -xi[0], -xi[1], xi[0], 0;
  return m;
}

}  // namespace

GaugeTransport gauge_transport(const FlowResult& phi, const FlowResult& psi_flow,
                               const ActionField& f_target, const FieldEquivalence& psi,
                               const Config& cfg, std::optional<GroupElement> initial_gauge) {
  const auto& a = *f_target.groupoid->action;
  const auto grp = a.group;
  const int lie = grp->lie_dim();
  if (lie == 0) throw FlowError("gauge transport requires lie_dim > 0");
  if (phi.grid.size() != psi_flow.grid.size())
    throw FlowError("gauge transport requires matching flow grids");
  const auto& m = *a.manifold;
  const Integrator integ = phi.integrator;
  const GroupElement g0 = initial_gauge.value_or(grp->identity());

  GaugeTransport out;
  for (std::size_t i = 0; i < phi.grid.size(); ++i) {
    const auto& tphi = phi.trajectories[i];
    const auto& tpsi = psi_flow.trajectories[i];
    GaugeTrajectory gt;
    if (tphi.status != TrajStatus::Complete || tpsi.status != TrajStatus::Complete) {
      gt.status = TrajStatus::StepFailure;
      out.trajectories.push_back(std::move(gt));
      continue;
    }

    const double t_final = phi.t_final;
    long n_steps = std::lround(t_final / integ.h);
    if (n_steps < 1) n_steps = 1;
    const double h = t_final / static_cast<double>(n_steps);

    Vec q = phi.grid[i];
    GroupElement g = g0;
    Vec angles = lie > 0 && grp->kind() == groups::GroupKind::Torus ? g.angles : Vec();
    gt.times.push_back(0.0);
    gt.gauge.push_back(g);

    const auto psi_at = [&](const Vec& point) -> Vec { return fields::eval_psi(psi, point); };
    const auto q_stage = [&](const Vec& p) -> Vec {
      return geom::tangent_project(m, p, f_target.x(p), cfg).v;
    };

    bool failed = false;
    for (long j = 1; j <= n_steps && !failed; ++j) {
      try {
        // Coupled RK4: q' = X'(q), g' = g psi(q).
        const Vec k1q = q_stage(q);
        const Vec q2 = geom::retract(m, q, 0.5 * h * k1q, cfg);
        const Vec k2q = q_stage(q2);
        const Vec q3 = geom::retract(m, q, 0.5 * h * k2q, cfg);
        const Vec k3q = q_stage(q3);
        const Vec q4 = geom::retract(m, q, h * k3q, cfg);
        const Vec k4q = q_stage(q4);

        if (grp->kind() == groups::GroupKind::Torus) {
          // Abelian: g' = psi(q), a plain quadrature step.
          const Vec k1 = psi_at(q), k2 = psi_at(q2), k3 = psi_at(q3), k4 = psi_at(q4);
          angles += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
          g = grp->exp(angles, 1.0);  // wraps
        } else {
          const Eigen::Matrix3d r = g.rot;
          const Eigen::Matrix3d k1 = r * hat3(psi_at(q));
          const Eigen::Matrix3d k2 = (r + 0.5 * h * k1) * hat3(psi_at(q2));
          const Eigen::Matrix3d k3 = (r + 0.5 * h * k2) * hat3(psi_at(q3));
          const Eigen::Matrix3d k4 = (r + h * k3) * hat3(psi_at(q4));
          g.rot = reorthonormalize(r + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
        }
        q = geom::retract(m, q, (h / 6.0) * (k1q + 2.0 * k2q + 2.0 * k3q + k4q), cfg);
      } catch (const geom::GeometryError&) {
        gt.status = TrajStatus::StepFailure;
        failed = true;
        break;
      }
      if (j % integ.record_stride == 0 || j == n_steps) {
        gt.times.push_back(static_cast<double>(j) * h);
        gt.gauge.push_back(g);
      }
    }

    // Certificate Psi(m,t) = Phi(m,t) g(m,t) and the free-orbit gate.
    if (!failed) {
      const std::size_t nrec = std::min({gt.gauge.size(), tphi.points.size(), tpsi.points.size()});
      for (std::size_t j = 0; j < nrec; ++j) {
        const Vec expected = a.act(tphi.points[j], gt.gauge[j]);
        gt.residual = std::max(
            gt.residual, (tpsi.points[j] - expected).lpNorm<Eigen::Infinity>());

        geom::Mat l(m.ambient_dim(), lie);
        for (int c = 0; c < lie; ++c) {
          Vec e = Vec::Zero(lie);
          e[c] = 1.0;
          l.col(c) = groups::inf_action(a, tpsi.points[j], e, cfg).v;
        }
        Eigen::JacobiSVD<geom::Mat> svd(l);
        const auto& sv = svd.singularValues();
        if (sv.size() == 0 || sv[sv.size() - 1] <= 1e-8 * std::max(1.0, sv[0]))
          gt.non_free = true;
      }
    }
    out.max_residual = std::max(out.max_residual, gt.residual);
    out.trajectories.push_back(std::move(gt));
  }
  return out;
}

VerificationReport proper_lift_check(const geom::SmoothMap& pi,
                                     const std::function<Vec(const Vec&)>& x_m,
                                     const std::function<Vec(const Vec&)>& x_n, const Vec& m0,
                                     double t_final, const Integrator& integ, int n_samples,
                                     double tol, Rng& rng, const Config& cfg) {
  VerificationReport rep;
  rep.subject = "proper_lift:" + pi.name;
  const auto& m = *pi.domain;
  const auto& n = *pi.codomain;

  // Precondition: T pi X_M = X_N pi at samples (intertwining).
  double r_intertwine = 0.0;
  for (int s = 0; s < n_samples; ++s) {
    const Vec p = m.sample(rng, cfg.sample_box);
    const TangentVector xm = geom::tangent_project(m, p, x_m(p), cfg);
    const Vec pushed = geom::push_forward(pi, xm, cfg).v;
    const Vec downstairs = geom::tangent_project(n, pi.fn(p), x_n(pi.fn(p)), cfg).v;
    r_intertwine = std::max(r_intertwine, (pushed - downstairs).lpNorm<Eigen::Infinity>());
  }
  rep.add("lift_intertwining", r_intertwine, tol);
  if (r_intertwine > tol) {
    rep.add_flag("lift_rejected_before_integration", false,
                 "intertwining precondition failed");
    return rep;
  }

  const Trajectory up = integrate_curve(m, x_m, m0, t_final, integ, cfg);
  const Trajectory down = integrate_curve(n, x_n, pi.fn(m0), t_final, integ, cfg);

  rep.add_flag("lift_completeness",
               !(down.status == TrajStatus::Complete && up.status != TrajStatus::Complete),
               std::string("downstairs ") + to_string(down.status) + ", upstairs " +
                   to_string(up.status));

  double r_proj = 0.0;
  const std::size_t nrec = std::min(up.points.size(), down.points.size());
  for (std::size_t j = 0; j < nrec; ++j)
    r_proj = std::max(r_proj, (pi.fn(up.points[j]) - down.points[j]).lpNorm<Eigen::Infinity>());
  rep.add("lift_projection", r_proj, tol);
  return rep;
}

}  // namespace gflow::flows
