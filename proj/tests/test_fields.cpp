#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gflow/fields.hpp"

using namespace gflow;
using geom::Mat;
using geom::Vec;
using fields::ActionField;
using fields::FieldEquivalence;
using groups::GroupElement;

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

gpd::GroupoidPtr c2_line(Rng& rng, const Config& cfg) {
  auto action = std::make_shared<groups::SmoothAction>(groups::matrix_action(
      groups::builtin_group("C2"), geom::euclidean(1),
      {Mat::Identity(1, 1), -Mat::Identity(1, 1)}, "sign"));
  return gpd::action_groupoid(action, rng, cfg);
}

gpd::GroupoidPtr circle_plane(Rng& rng, const Config& cfg) {
  auto action = std::make_shared<groups::SmoothAction>(
      groups::rotation_action(groups::builtin_group("circle"), geom::euclidean(2)));
  return gpd::action_groupoid(action, rng, cfg);
}

gpd::GroupoidPtr so3_sphere(Rng& rng, const Config& cfg) {
  auto action = std::make_shared<groups::SmoothAction>(
      groups::so3_linear_action(groups::builtin_group("so3"), geom::sphere(3)));
  return gpd::action_groupoid(action, rng, cfg);
}

ActionField make_field(gpd::GroupoidPtr g, std::function<Vec(const Vec&)> x,
                       std::string name) {
  ActionField f;
  f.groupoid = std::move(g);
  f.x = std::move(x);
  f.name = std::move(name);
  return f;
}

}  // namespace

TEST_CASE("zero field satisfies every law exactly and is fixed by averaging") {
  Config cfg;
  Rng rng(3);
  const auto g = c2_line(rng, cfg);
  const auto zf = fields::zero_field(g, cfg);
  const auto rep = fields::check_groupoid_field(zf, 40, 1e-14, rng);
  for (const auto& c : rep.checks) {
    CAPTURE(c.name);
    CHECK(c.pass);
  }
  const auto avg = fields::average(fields::zero_action_field(g), cfg);
  for (double x : {-1.5, 0.0, 2.0})
    CHECK(avg.averaged.x(vec({x})).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("groupoid field laws reduce to the (X, Y) laws") {
  Config cfg;
  Rng rng(5);
  SUBCASE("equivariant finite field passes") {
    const auto g = c2_line(rng, cfg);
    const auto f = make_field(g, [](const Vec& m) { return Vec(m.array().cube()); }, "cubic");
    const auto gf = fields::to_groupoid_field(f, 60, 1e-8, rng, cfg);
    CHECK(fields::check_groupoid_field(gf, 60, 1e-8, rng).pass());
  }
  SUBCASE("radial field on the plane is rotation invariant") {
    const auto g = circle_plane(rng, cfg);
    const auto f = make_field(g, [](const Vec& m) { return m; }, "radial");
    const auto gf = fields::to_groupoid_field(f, 60, 1e-8, rng, cfg);
    CHECK(fields::check_groupoid_field(gf, 60, 1e-7, rng).pass());
  }
  SUBCASE("non-equivariant field is rejected with the worst sample") {
    const auto g = c2_line(rng, cfg);
    const auto f = make_field(g, [](const Vec& m) { return Vec(m.array().square()); },
                              "square");
    CHECK_THROWS_AS(fields::to_groupoid_field(f, 60, 1e-8, rng, cfg), fields::FieldError);
  }
}

TEST_CASE("averaging the sign action") {
  Config cfg;
  Rng rng(7);
  const auto g = c2_line(rng, cfg);

  SUBCASE("even field averages to zero exactly") {
    const auto f = make_field(g, [](const Vec& m) { return Vec(m.array().square()); },
                              "square");
    const auto avg = fields::average(f, cfg);
    for (double x : {-2.0, -0.3, 0.5, 1.7})
      CHECK(std::abs(avg.averaged.x(vec({x}))[0]) <= 1e-12);
  }
  SUBCASE("odd field is already invariant; averaging is the identity") {
    const auto f = make_field(g, [](const Vec& m) { return Vec(m.array().cube()); }, "cubic");
    const auto avg = fields::average(f, cfg);
    for (double x : {-2.0, -0.3, 0.5, 1.7})
      CHECK(avg.averaged.x(vec({x}))[0] == doctest::Approx(x * x * x).epsilon(1e-14));
    CHECK(fields::invariance_residual(avg.averaged, 40, rng, cfg) <= 1e-12);
    CHECK(fields::check_equivalence(f, avg.averaged, avg.psi, 40, 1e-12, rng, cfg).pass());
  }
}

TEST_CASE("averaging a coboundary-twisted circle field recovers the radial part") {
  Config cfg;
  Rng rng(9);
  const auto g = circle_plane(rng, cfg);
  const auto& action = *g->action;

  // X = X~ - iota(psi0) with X~ = radial and psi0(m) = x1;
  // Y(m, theta) = psi0(m) - psi0(m . theta). A lawful non-invariant pair.
  ActionField f;
  f.groupoid = g;
  f.name = "twisted";
  f.x = [](const Vec& m) -> Vec {
    return vec({m[0] + m[0] * m[1], m[1] - m[0] * m[0]});
  };
  f.y = [&action](const Vec& m, const GroupElement& ge) -> Vec {
    const Vec mg = action.act(m, ge);
    return vec({m[0] - mg[0]});
  };
  CHECK(fields::validate_action_field(f, 60, 1e-9, rng, cfg).pass());

  const auto avg = fields::average(f, cfg);
  // Closed form: the orbit average of psi0 vanishes, so the averaged field is
  // exactly the radial part and psi(m) = x1.
  Rng rng2(11);
  for (int i = 0; i < 20; ++i) {
    const Vec m = vec({rng2.uniform(-2, 2), rng2.uniform(-2, 2)});
    CHECK((avg.averaged.x(m) - m).lpNorm<Eigen::Infinity>() <= 1e-12);
    CHECK(avg.psi.psi(m)[0] == doctest::Approx(m[0]).epsilon(1e-12));
  }
  CHECK(fields::invariance_residual(avg.averaged, 40, rng, cfg) <= 1e-12);
  CHECK(fields::check_equivalence(f, avg.averaged, avg.psi, 40, 1e-10, rng, cfg).pass());
}

TEST_CASE("no invariant field survives on the sphere under so3") {
  Config cfg;
  Rng rng(13);
  const auto g = so3_sphere(rng, cfg);
  const auto f = make_field(
      g, [](const Vec& m) { return vec({m[1] * m[2], 0.3 - m[0], m[0] * m[0]}); }, "generic");
  const auto avg = fields::average(f, cfg);

  Config fine = cfg;
  fine.haar_so3_beta_nodes *= 2;
  fine.haar_so3_ab_nodes *= 2;
  const auto avg_fine = fields::average(f, fine);

  Rng rng2(17);
  for (int i = 0; i < 6; ++i) {
    const Vec m = g->action->manifold->sample(rng2, 1.0);
    CHECK(fields::eval_x(avg.averaged, m, cfg).v.lpNorm<Eigen::Infinity>() <= 1e-6);
    CHECK((avg.averaged.x(m) - avg_fine.averaged.x(m)).lpNorm<Eigen::Infinity>() <= 1e-9);
  }
}

TEST_CASE("averaging is idempotent and linear") {
  Config cfg;
  Rng rng(19);
  SUBCASE("exact rules") {
    const auto g = circle_plane(rng, cfg);
    const auto f = make_field(
        g, [](const Vec& m) { return vec({m[0] * m[0], m[1] + 0.5}); }, "poly");
    const auto once = fields::average(f, cfg);
    const auto twice = fields::average(once.averaged, cfg);
    const auto f2 = make_field(g, [](const Vec& m) { return vec({m[1], -m[0] * m[1]}); },
                               "poly2");
    const auto combo = fields::average(fields::linear_combination(2.0, f, -0.5, f2), cfg);
    const auto avg2 = fields::average(f2, cfg);
    Rng rng2(23);
    for (int i = 0; i < 12; ++i) {
      const Vec m = vec({rng2.uniform(-2, 2), rng2.uniform(-2, 2)});
      CHECK((twice.averaged.x(m) - once.averaged.x(m)).lpNorm<Eigen::Infinity>() <= 1e-10);
      CHECK((combo.averaged.x(m) -
             (2.0 * once.averaged.x(m) - 0.5 * avg2.averaged.x(m)))
                .lpNorm<Eigen::Infinity>() <= 1e-10);
    }
  }
  SUBCASE("so3 rule at reduced orders") {
    Config small = cfg;
    small.haar_so3_beta_nodes = 8;
    small.haar_so3_ab_nodes = 16;
    const auto g = so3_sphere(rng, small);
    const auto f = make_field(
        g, [](const Vec& m) { return vec({m[1], m[2], m[0]}); }, "swap");
    const auto once = fields::average(f, small);
    const auto twice = fields::average(once.averaged, small);
    Rng rng2(29);
    for (int i = 0; i < 3; ++i) {
      const Vec m = g->action->manifold->sample(rng2, 1.0);
      CHECK((twice.averaged.x(m) - once.averaged.x(m)).lpNorm<Eigen::Infinity>() <= 1e-7);
    }
  }
}

TEST_CASE("equivalence certificates") {
  Config cfg;
  Rng rng(31);
  const auto g = circle_plane(rng, cfg);
  const auto radial = make_field(g, [](const Vec& m) { return m; }, "radial");
  const auto rotation =
      make_field(g, [](const Vec& m) { return vec({-m[1], m[0]}); }, "rotation");
  const auto zero = fields::zero_action_field(g);

  SUBCASE("identity equivalence") {
    CHECK(fields::check_equivalence(radial, radial, fields::zero_equivalence(g), 40, 1e-14,
                                    rng, cfg)
              .pass());
  }
  SUBCASE("the rotation field is iota(1)") {
    FieldEquivalence one;
    one.groupoid = g;
    one.name = "one";
    one.psi = [](const Vec&) { return vec({1.0}); };
    CHECK(fields::check_equivalence(zero, rotation, one, 40, 1e-12, rng, cfg).pass());
  }
  SUBCASE("wrong multiple fails with the field norm") {
    FieldEquivalence two;
    two.groupoid = g;
    two.name = "two";
    two.psi = [](const Vec&) { return vec({2.0}); };
    const auto rep = fields::check_equivalence(zero, rotation, two, 60, 1e-9, rng, cfg);
    CHECK(!rep.pass());
    CHECK(rep.worst("equivalence_field") >= 0.5);  // ~ |(-y, x)| at samples
  }
}

TEST_CASE("finite-group rigidity: only the trivial equivalence between equal fields") {
  Config cfg;
  Rng rng(37);
  const auto g = c2_line(rng, cfg);
  const auto cubic = make_field(g, [](const Vec& m) { return Vec(m.array().cube()); }, "f");
  const auto doubled = make_field(
      g, [](const Vec& m) { return Vec(2.0 * m.array().cube()); }, "2f");
  const auto trivial = fields::zero_equivalence(g);
  CHECK(fields::check_equivalence(cubic, cubic, trivial, 40, 1e-14, rng, cfg).pass());
  CHECK(!fields::check_equivalence(cubic, doubled, trivial, 40, 1e-9, rng, cfg).pass());
}

TEST_CASE("support indicator") {
  Config cfg;
  Rng rng(41);
  const auto g = circle_plane(rng, cfg);
  std::vector<Vec> samples;
  Rng srng(43);
  samples.push_back(vec({0.0, 0.0}));
  for (int i = 0; i < 30; ++i)
    samples.push_back(vec({srng.uniform(-2, 2), srng.uniform(-2, 2)}));

  SUBCASE("zero field is equivalent to zero everywhere") {
    const auto labels =
        fields::support_indicator(fields::zero_action_field(g), samples, 1e-8, rng, cfg);
    for (const auto& lab : labels) CHECK(lab.equivalent_to_zero);
  }
  SUBCASE("the rotation field lies in the image of iota everywhere") {
    const auto rotation =
        make_field(g, [](const Vec& m) { return vec({-m[1], m[0]}); }, "rotation");
    const auto labels = fields::support_indicator(rotation, samples, 1e-7, rng, cfg);
    for (const auto& lab : labels) {
      CAPTURE(lab.point.transpose());
      CHECK(lab.equivalent_to_zero);
    }
  }
  SUBCASE("the radial field is supported away from the origin") {
    const auto radial = make_field(g, [](const Vec& m) { return m; }, "radial");
    const auto labels = fields::support_indicator(radial, samples, 1e-6, rng, cfg);
    for (const auto& lab : labels) {
      if (lab.point.norm() <= 1e-7) CHECK(lab.equivalent_to_zero);
      else CHECK(!lab.equivalent_to_zero);
    }
  }
}

TEST_CASE("support with a trivial algebra reduces to the norm test") {
  Config cfg;
  Rng rng(53);
  const auto g = c2_line(rng, cfg);
  const auto cubic = make_field(g, [](const Vec& m) { return Vec(m.array().cube()); }, "f");
  std::vector<Vec> samples = {vec({0.0}), vec({1e-4}), vec({0.5}), vec({-1.2})};
  const auto labels = fields::support_indicator(cubic, samples, 1e-6, rng, cfg);
  CHECK(labels[0].equivalent_to_zero);
  CHECK(labels[1].equivalent_to_zero);  // |x^3| = 1e-12 below tol
  CHECK(!labels[2].equivalent_to_zero);
  CHECK(!labels[3].equivalent_to_zero);
}

TEST_CASE("averaging preserves compact support") {
  Config cfg;
  Rng rng(47);
  const auto g = c2_line(rng, cfg);
  // Support inside [-2, 2]; the saturation of that ball under the sign action
  // is itself.
  const auto f = make_field(
      g,
      [](const Vec& m) {
        return Vec(Vec::Constant(1, expr::bump(m[0] / 2.0) * (m[0] * m[0] * m[0] + m[0] * m[0])));
      },
      "bumped");
  const auto avg = fields::average(f, cfg);
  for (double x : {2.0, 2.5, -3.0, 4.0, -2.0})
    CHECK(std::abs(avg.averaged.x(vec({x}))[0]) <= 1e-15);
  // Inside the ball the odd part survives.
  CHECK(std::abs(avg.averaged.x(vec({1.0}))[0]) > 1e-3);
}
