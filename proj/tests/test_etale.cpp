#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gflow/etale.hpp"

using namespace gflow;
using etale::Chart;
using etale::ChartSystem;
using etale::EtaleFieldAssignment;
using etale::Transition;
using geom::Mat;
using geom::Vec;

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

geom::SmoothMap rotation_map(geom::ManifoldPtr chart, double angle) {
  geom::SmoothMap f;
  f.domain = chart;
  f.codomain = chart;
  f.name = "rot";
  const double c = std::cos(angle), s = std::sin(angle);
  f.fn = [c, s](const Vec& u) { return vec({c * u[0] - s * u[1], s * u[0] + c * u[1]}); };
  Mat j(2, 2);
  j << c, -s, s, c;
  f.jac = [j](const Vec&) { return j; };
  return f;
}

}  // namespace

TEST_CASE("pullback basics") {
  const Config cfg;
  SUBCASE("linear stretch halves the unit field") {
    auto line = geom::euclidean(1);
    geom::SmoothMap f;
    f.domain = line;
    f.codomain = line;
    f.name = "2u";
    f.fn = [](const Vec& u) { return Vec(2.0 * u); };
    const Vec w = etale::pullback_at(f, [](const Vec&) { return Vec(Vec::Ones(1)); },
                                     vec({0.3}), cfg);
    CHECK(w[0] == doctest::Approx(0.5).epsilon(1e-10));
  }
  SUBCASE("identity map preserves the field") {
    auto plane = geom::euclidean(2);
    geom::SmoothMap id;
    id.domain = plane;
    id.codomain = plane;
    id.fn = [](const Vec& u) { return u; };
    const auto field = [](const Vec& u) { return vec({u[1], -u[0]}); };
    const Vec u = vec({0.7, -0.4});
    CHECK((etale::pullback_at(id, field, u, cfg) - field(u)).lpNorm<Eigen::Infinity>() <=
          1e-9);
  }
  SUBCASE("angle doubling on the embedded circle halves the rotation field") {
    auto s1 = geom::sphere(2);
    geom::SmoothMap doubling;
    doubling.domain = s1;
    doubling.codomain = s1;
    doubling.name = "z^2";
    doubling.fn = [](const Vec& z) {
      return vec({z[0] * z[0] - z[1] * z[1], 2.0 * z[0] * z[1]});
    };
    const auto rot = [](const Vec& u) { return vec({-u[1], u[0]}); };
    Rng rng(3);
    for (int i = 0; i < 10; ++i) {
      const Vec u = s1->sample(rng, 1.0);
      const Vec pulled = etale::pullback_at(doubling, rot, u, cfg);
      CHECK((pulled - 0.5 * rot(u)).lpNorm<Eigen::Infinity>() <= 1e-9);
    }
  }
  SUBCASE("a singular map is not etale") {
    auto line = geom::euclidean(1);
    geom::SmoothMap sq;
    sq.domain = line;
    sq.codomain = line;
    sq.name = "u^2";
    sq.fn = [](const Vec& u) { return Vec(u.array().square()); };
    CHECK_THROWS_AS(
        etale::pullback_at(sq, [](const Vec&) { return Vec(Vec::Ones(1)); }, vec({0.0}), cfg),
        etale::EtaleError);
  }
}

TEST_CASE("assignment checks over a rotation chart system") {
  const Config cfg;
  Rng rng(5);
  auto disk = geom::euclidean(2);
  const expr::Expr dom = expr::parse("4 - x1^2 - x2^2");
  const double alpha = 0.9, beta = 0.55;

  ChartSystem sys;
  sys.charts = {{"U1", disk, dom}, {"U2", disk, dom}, {"U3", disk, dom}};
  sys.transitions.push_back({"f12", 0, 1, rotation_map(disk, alpha), {}});
  sys.transitions.push_back({"f23", 1, 2, rotation_map(disk, beta), {}});
  sys.transitions.push_back({"f13", 0, 2, rotation_map(disk, alpha + beta), {}});
  sys.compositions.push_back({0, 1, 2});

  // Build the compatible assignment by pulling the U3 field back.
  const etale::ChartField x3 = [](const Vec& w) { return vec({std::sin(w[1]), w[0] * w[1]}); };
  EtaleFieldAssignment good;
  good.name = "good";
  good.per_chart = {etale::pullback(sys.transitions[2].map, x3, cfg),
                    etale::pullback(sys.transitions[1].map, x3, cfg), x3};

  SUBCASE("compatible assignment passes at 1e-8") {
    const auto rep = etale::check_assignment(sys, good, 50, 1e-8, 1e-7, rng, cfg);
    for (const auto& c : rep.checks) {
      CAPTURE(c.name);
      CAPTURE(c.max_residual);
      CHECK(c.pass);
    }
  }
  SUBCASE("a doubled chart field fails with the field norm") {
    EtaleFieldAssignment bad = good;
    bad.name = "bad";
    const auto base = good.per_chart[0];
    bad.per_chart[0] = [base](const Vec& u) { return Vec(2.0 * base(u)); };
    const auto rep = etale::check_assignment(sys, bad, 50, 1e-8, 1e-7, rng, cfg);
    CHECK(!rep.pass());
    CHECK(rep.worst("triangle_f12") >= 0.05);
  }
  SUBCASE("single chart passes vacuously") {
    ChartSystem lone;
    lone.charts = {{"U", disk, dom}};
    EtaleFieldAssignment any;
    any.name = "any";
    any.per_chart = {x3};
    CHECK(etale::check_assignment(lone, any, 10, 1e-8, 1e-7, rng, cfg).pass());
  }
}

TEST_CASE("quotient charts of a free finite action carry the invariant field") {
  // The antipodal C2 action on the circle is free; the quotient is again a
  // circle with angle phi = 2 theta. An invariant field c(theta) d/dtheta with
  // c(theta + pi) = c(theta) descends to X(phi) = 2 c(phi / 2), and the
  // per-chart fields glue across the seam transition phi -> phi + 2 pi.
  const Config cfg;
  Rng rng(7);
  auto line = geom::euclidean(1);
  const auto upstairs = [](double theta) { return 1.0 + 0.25 * std::cos(2.0 * theta); };
  const auto downstairs = [&](const Vec& phi) {
    return Vec(Vec::Constant(1, 2.0 * upstairs(phi[0] / 2.0)));
  };

  // Well-definedness: both preimages theta and theta + pi give the same value.
  Rng tr(11);
  for (int i = 0; i < 20; ++i) {
    const double theta = tr.uniform(0.0, 2.0 * M_PI);
    CHECK(std::abs(upstairs(theta) - upstairs(theta + M_PI)) <= 1e-15);
  }

  ChartSystem sys;
  sys.charts = {{"A", line, expr::parse("x1 * (3.141592653589793 - x1)")},
                {"B", line, expr::parse("(x1 - 3.141592653589793) * (9.42477796076938 - x1)")}};
  geom::SmoothMap seam;
  seam.domain = line;
  seam.codomain = line;
  seam.name = "shift";
  seam.fn = [](const Vec& u) { return Vec(u.array() + 2.0 * M_PI); };
  // A covers (0, pi); B covers (pi, 3 pi); the shifted copy of A's low arc
  // glues into B's high arc.
  sys.transitions.push_back({"glue", 0, 1, seam, expr::parse("x1 * (3.141592653589793 - x1)")});

  EtaleFieldAssignment assignment;
  assignment.name = "descended";
  assignment.per_chart = {downstairs, downstairs};  // same formula in both angle charts
  // X(phi + 2 pi) = X(phi) because the upstairs field has period pi in theta.
  const auto rep = etale::check_assignment(sys, assignment, 60, 1e-8, 1e-7, rng, cfg);
  for (const auto& c : rep.checks) {
    CAPTURE(c.name);
    CHECK(c.pass);
  }
}

TEST_CASE("etale integral condition") {
  const Config cfg;
  flows::Integrator integ;
  auto line = geom::euclidean(1);
  ChartSystem sys;
  sys.charts = {{"theta", line, {}}};

  SUBCASE("constant trajectories of the zero field have zero residual") {
    const etale::ChartField zero = [](const Vec&) { return Vec(Vec::Zero(1)); };
    const auto traj = flows::integrate_curve(*line, zero, vec({0.4}), 1.0, integ, cfg);
    const auto rep = etale::check_etale_integral(sys, 0, {traj}, zero, 1e-12, cfg);
    CHECK(rep.pass());
    CHECK(rep.worst("etale_integral_condition") == 0.0);
  }
  SUBCASE("unit rotation in the angle chart") {
    const etale::ChartField unit = [](const Vec&) { return Vec(Vec::Ones(1)); };
    const auto traj = flows::integrate_curve(*line, unit, vec({0.1}), 1.0, integ, cfg);
    CHECK(std::abs(traj.points.back()[0] - 1.1) <= 1e-9);
    const auto rep = etale::check_etale_integral(sys, 0, {traj}, unit, 1e-6, cfg);
    CHECK(rep.pass());
  }
  SUBCASE("a mismatched field shows the speed difference") {
    const etale::ChartField unit = [](const Vec&) { return Vec(Vec::Ones(1)); };
    const etale::ChartField doubled = [](const Vec&) { return Vec(Vec::Constant(1, 2.0)); };
    const auto traj = flows::integrate_curve(*line, unit, vec({0.0}), 1.0, integ, cfg);
    const auto rep = etale::check_etale_integral(sys, 0, {traj}, doubled, 1e-6, cfg);
    CHECK(!rep.pass());
    CHECK(rep.worst("etale_integral_condition") == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("chart systems reject unknown names") {
  ChartSystem sys;
  sys.charts = {{"U", geom::euclidean(1), {}}};
  CHECK_THROWS_AS(sys.chart_index("V"), etale::EtaleError);
  CHECK_THROWS_AS(sys.transition_index("f"), etale::EtaleError);
}
