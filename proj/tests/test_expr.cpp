#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cctype>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "gflow/expr.hpp"
#include "gflow/rng.hpp"
#include "shunting_yard.hpp"

using namespace gflow;

namespace {

double lib_eval(const std::string& src, const std::vector<double>& x, double t = 0.0,
                bool has_t = false) {
  const expr::Expr e = expr::parse(src);
  expr::EvalContext ctx{{x.data(), x.size()}, {}, t, has_t};
  return e.eval(ctx);
}

}  // namespace

TEST_CASE("literal and variable atoms") {
  CHECK(lib_eval("42", {}) == 42.0);
  CHECK(lib_eval("x1", {7.5}) == 7.5);
  CHECK(lib_eval("x2", {1.0, -3.0}) == -3.0);
  CHECK(lib_eval("t", {}, 2.5, true) == 2.5);
  const expr::Expr e = expr::parse("x1");
  CHECK(e.root()->kind == expr::Node::Kind::Var);
  CHECK(e.root()->var_index == 1);
}

TEST_CASE("unary minus binds below power") {
  // -x2^2 parses as -(x2^2)
  const expr::Expr e = expr::parse("-x2^2");
  REQUIRE(e.root()->kind == expr::Node::Kind::Neg);
  CHECK(e.root()->args[0]->kind == expr::Node::Kind::Binary);
  CHECK(lib_eval("-x2^2", {0.0, 3.0}) == -9.0);
  CHECK(lib_eval("(-x2)^2", {0.0, 3.0}) == 9.0);
}

TEST_CASE("call node with nested arithmetic") {
  const expr::Expr e = expr::parse("bump((x1-1)/2)");
  REQUIRE(e.root()->kind == expr::Node::Kind::Call);
  CHECK(e.root()->func == expr::Func::Bump);
  CHECK(e.root()->args.size() == 1);
}

TEST_CASE("basic arithmetic examples") {
  CHECK(lib_eval("2+3*4", {}) == 14.0);
  CHECK(lib_eval("sin(0)", {}) == 0.0);
  CHECK(lib_eval("bump(0)", {}) == 1.0);
  CHECK(lib_eval("bump(1)", {}) == 0.0);
}

TEST_CASE("precedence corpus against the shunting-yard oracle") {
  const std::vector<std::string> corpus = {
      "1+2*3",
      "(1+2)*3",
      "2^3^2",
      "-2^2",
      "2^-1",
      "((((5))))",
      "1-2-3",
      "1-2*3-4",
      "12/4/3",
      "2*3^2",
      "-x1+x2",
      "-(x1+x2)",
      "x1*x2+x3",
      "x1*(x2+x3)",
      "x1/x2*x3",
      "x1^2+x2^2",
      "sin(x1)*cos(x2)",
      "exp(-x1^2)",
      "sqrt(x1^2+x2^2)",
      "tanh(x1)-tanh(-x1)",
      "abs(-x1)",
      "1/(1+exp(-x1))",
      "x1^0.5",
      "3.5e-2*x1",
      "2*-3",
      "x1--x2",
      "bump(x1/2)",
      "log(exp(x1))",
      "sin(cos(tan(0.3)))",
      "x1^2*x2^-1",
      "(x1+x2)^(x3-1)",
      "1+2^2*3",
      "-sin(-x1)",
      "0.5*(x1+x3)*(x2-1)",
  };
  const std::vector<double> xv = {1.3, 2.1, 0.7};
  const std::map<std::string, double> vars = {{"x1", 1.3}, {"x2", 2.1}, {"x3", 0.7}};
  CHECK(corpus.size() >= 30);
  for (const auto& src : corpus) {
    CAPTURE(src);
    CHECK(lib_eval(src, xv) == doctest::Approx(shunting::oracle_eval(src, vars)).epsilon(1e-12));
  }
}

TEST_CASE("pretty-print reparses to an identical tree") {
  const std::vector<std::string> corpus = {
      "1+2*3", "2^3^2", "-x2^2", "bump((x1-1)/2)", "min(x1,x2,3)", "max(1,-2)",
      "x1*(x2+x3)/4", "sin(x1)^2+cos(x1)^2", "-(-x1)",
  };
  std::function<bool(const expr::Node&, const expr::Node&)> same =
      [&](const expr::Node& a, const expr::Node& b) -> bool {
    if (a.kind != b.kind || a.args.size() != b.args.size()) return false;
    switch (a.kind) {
      case expr::Node::Kind::Number:
        if (a.number != b.number) return false;
        break;
      case expr::Node::Kind::Var:
        if (a.var_kind != b.var_kind || a.var_index != b.var_index) return false;
        break;
      case expr::Node::Kind::Binary:
        if (a.op != b.op) return false;
        break;
      case expr::Node::Kind::Call:
        if (a.func != b.func) return false;
        break;
      case expr::Node::Kind::Neg:
        break;
    }
    for (std::size_t i = 0; i < a.args.size(); ++i)
      if (!same(*a.args[i], *b.args[i])) return false;
    return true;
  };
  for (const auto& src : corpus) {
    CAPTURE(src);
    const expr::Expr e = expr::parse(src);
    const expr::Expr round = expr::parse(e.str());
    CHECK(same(*e.root(), *round.root()));
  }
}

TEST_CASE("generated trees survive print/reparse with identical values") {
  gflow::Rng rng(97);
  const std::vector<double> xv = {0.7, -1.2, 0.4};

  std::function<expr::NodePtr(int)> gen = [&](int depth) -> expr::NodePtr {
    auto node = std::make_shared<expr::Node>();
    const int pick = depth <= 0 ? rng.uniform_int(2) : rng.uniform_int(6);
    switch (pick) {
      case 0:
        // Literals are non-negative in the grammar; negation is a Neg node.
        node->kind = expr::Node::Kind::Number;
        node->number = rng.uniform(0.0, 3.0);
        break;
      case 1:
        node->kind = expr::Node::Kind::Var;
        node->var_kind = expr::VarKind::X;
        node->var_index = 1 + rng.uniform_int(3);
        break;
      case 2:
        node->kind = expr::Node::Kind::Neg;
        node->args.push_back(gen(depth - 1));
        break;
      case 3: {
        node->kind = expr::Node::Kind::Binary;
        const expr::Op ops[] = {expr::Op::Add, expr::Op::Sub, expr::Op::Mul};
        node->op = ops[rng.uniform_int(3)];
        node->args.push_back(gen(depth - 1));
        node->args.push_back(gen(depth - 1));
        break;
      }
      case 4: {
        node->kind = expr::Node::Kind::Call;
        const expr::Func fns[] = {expr::Func::Sin, expr::Func::Cos, expr::Func::Tanh,
                                  expr::Func::Exp, expr::Func::Bump};
        node->func = fns[rng.uniform_int(5)];
        node->args.push_back(gen(depth - 1));
        break;
      }
      default: {
        node->kind = expr::Node::Kind::Call;
        node->func = rng.uniform_int(2) == 0 ? expr::Func::Min : expr::Func::Max;
        node->args.push_back(gen(depth - 1));
        node->args.push_back(gen(depth - 1));
        break;
      }
    }
    return node;
  };

  for (int trial = 0; trial < 50; ++trial) {
    const expr::Expr original(gen(4));
    const expr::Expr round = expr::parse(original.str());
    expr::EvalContext ctx{{xv.data(), xv.size()}, {}, 0.0, false};
    CAPTURE(original.str());
    CHECK(round.str() == original.str());
    CHECK(round.eval(ctx) == original.eval(ctx));
  }
}

TEST_CASE("bump is the declared cutoff and flat across the boundary") {
  CHECK(expr::bump(0.0) == 1.0);
  CHECK(expr::bump(1.0) == 0.0);
  CHECK(expr::bump(-1.0) == 0.0);
  CHECK(expr::bump(2.0) == 0.0);
  // interior formula
  const double s = 0.5;
  CHECK(expr::bump(s) == doctest::Approx(std::exp(1.0 - 1.0 / (1.0 - s * s))).epsilon(1e-15));

  // One-sided finite-difference derivative estimates up to order 2 agree
  // across s = +-1 within 1e-6 at h = 1e-4.
  const double h = 1e-4;
  for (const double c : {1.0, -1.0}) {
    const auto f = [c](double d) { return expr::bump(c + d); };
    const double d1_out = (f(2 * h) - f(h)) / h;
    const double d1_in = (f(-h) - f(-2 * h)) / h;
    CHECK(std::abs(d1_out - d1_in) <= 1e-6);
    const double d2_out = (f(3 * h) - 2 * f(2 * h) + f(h)) / (h * h);
    const double d2_in = (f(-h) - 2 * f(-2 * h) + f(-3 * h)) / (h * h);
    CHECK(std::abs(d2_out - d2_in) <= 1e-6);
  }
}

TEST_CASE("syntax errors carry byte offsets") {
  try {
    expr::parse("1 + * 2");
    FAIL("expected ExprError");
  } catch (const expr::ExprError& e) {
    CHECK(e.offset == 4);
  }
  try {
    expr::parse("2 + 3 )");
    FAIL("expected ExprError");
  } catch (const expr::ExprError& e) {
    CHECK(e.offset == 6);  // trailing garbage
  }
  CHECK_THROWS_AS(expr::parse("foo(1)"), expr::ExprError);   // unknown function
  CHECK_THROWS_AS(expr::parse("x1 + y"), expr::ExprError);   // unknown variable
  CHECK_THROWS_AS(expr::parse("min(1)"), expr::ExprError);   // arity
  CHECK_THROWS_AS(expr::parse(""), expr::ExprError);
  CHECK_THROWS_AS(expr::parse("(1+2"), expr::ExprError);
}

TEST_CASE("domain errors name the offending subexpression") {
  try {
    lib_eval("log(x1-2)", {1.0});
    FAIL("expected EvalError");
  } catch (const expr::EvalError& e) {
    CHECK(e.subexpr.find("log") != std::string::npos);
  }
  CHECK_THROWS_AS(lib_eval("1/(x1-1)", {1.0}), expr::EvalError);
  CHECK_THROWS_AS(lib_eval("(-2)^0.5", {}), expr::EvalError);
  CHECK_THROWS_AS(lib_eval("x2", {1.0}), expr::EvalError);  // unbound
}

TEST_CASE("validate rejects out-of-range variables") {
  const expr::Expr e = expr::parse("x3 + g2");
  CHECK_THROWS_AS(e.validate(2, 2, false), expr::ExprError);
  CHECK_THROWS_AS(e.validate(3, 1, false), expr::ExprError);
  CHECK_NOTHROW(e.validate(3, 2, false));
  CHECK_THROWS_AS(expr::parse("t").validate(1, 0, false), expr::ExprError);
}
