#pragma once

#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gflow::expr {

// Scalar expressions used in scenario files: field components, constraints,
// actions, chart domains. Immutable after parse; eval is pure.

enum class VarKind { X, G, T };

struct ExprError : std::runtime_error {
  ExprError(std::string msg, std::size_t offset)
      : std::runtime_error(std::move(msg)), offset(offset) {}
  std::size_t offset;  // byte offset into the source text
};

struct EvalError : std::runtime_error {
  EvalError(std::string msg, std::string subexpr)
      : std::runtime_error(msg + " in '" + subexpr + "'"), subexpr(std::move(subexpr)) {}
  std::string subexpr;  // pretty-printed offending subexpression
};

class Node;
using NodePtr = std::shared_ptr<const Node>;

enum class Op { Add, Sub, Mul, Div, Pow };

enum class Func { Sin, Cos, Tan, Exp, Log, Sqrt, Tanh, Abs, Bump, Min, Max };

class Node {
 public:
  enum class Kind { Number, Var, Neg, Binary, Call };

  Kind kind;
  double number = 0.0;
  VarKind var_kind = VarKind::X;
  int var_index = 0;  // 1-based for X/G
  Op op = Op::Add;
  Func func = Func::Sin;
  std::vector<NodePtr> args;  // Neg: 1, Binary: 2, Call: arity
};

// Bindings for evaluation. x/g are 1-based in the grammar, 0-based here.
struct EvalContext {
  std::span<const double> x;
  std::span<const double> g;
  double t = 0.0;
  bool has_t = false;
};

class Expr {
 public:
  Expr() = default;
  explicit Expr(NodePtr root) : root_(std::move(root)) {}

  bool empty() const { return root_ == nullptr; }
  double eval(const EvalContext& ctx) const;
  std::string str() const;

  // Highest variable index referenced, 0 if none; whether t appears.
  int max_x_index() const;
  int max_g_index() const;
  bool uses_t() const;

  // Throws ExprError if a referenced variable is out of the declared range.
  void validate(int x_dim, int g_dim, bool allow_t) const;

  const NodePtr& root() const { return root_; }

 private:
  NodePtr root_;
};

// Recursive descent over:
//   expr   := term (("+"|"-") term)*
//   term   := factor (("*"|"/") factor)*
//   factor := "-" factor | power
//   power  := atom ("^" factor)?
//   atom   := number | ident | ident "(" expr ("," expr)* ")" | "(" expr ")"
// Rejects trailing garbage; errors carry byte offsets.
Expr parse(const std::string& source);

// bump(s) = exp(1 - 1/(1 - s^2)) for |s| < 1, else 0.
double bump(double s);

}  // namespace gflow::expr
