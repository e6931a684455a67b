#include "gflow/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <map>
#include <sstream>

namespace gflow::expr {

double bump(double s) {
  if (std::abs(s) >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - s * s));
}

namespace {

struct FuncInfo {
  Func func;
  int min_arity;
  int max_arity;  // -1 = unbounded
};

const std::map<std::string, FuncInfo>& func_table() {
  static const std::map<std::string, FuncInfo> table = {
      {"sin", {Func::Sin, 1, 1}},   {"cos", {Func::Cos, 1, 1}},
      {"tan", {Func::Tan, 1, 1}},   {"exp", {Func::Exp, 1, 1}},
      {"log", {Func::Log, 1, 1}},   {"sqrt", {Func::Sqrt, 1, 1}},
      {"tanh", {Func::Tanh, 1, 1}}, {"abs", {Func::Abs, 1, 1}},
      {"bump", {Func::Bump, 1, 1}}, {"min", {Func::Min, 2, -1}},
      {"max", {Func::Max, 2, -1}},
  };
  return table;
}

const char* func_name(Func f) {
  switch (f) {
    case Func::Sin: return "sin";
    case Func::Cos: return "cos";
    case Func::Tan: return "tan";
    case Func::Exp: return "exp";
    case Func::Log: return "log";
    case Func::Sqrt: return "sqrt";
    case Func::Tanh: return "tanh";
    case Func::Abs: return "abs";
    case Func::Bump: return "bump";
    case Func::Min: return "min";
    case Func::Max: return "max";
  }
  return "?";
}

class Parser {
 public:
  explicit Parser(const std::string& src) : src_(src) {}

  NodePtr run() {
    NodePtr e = parse_expr();
    skip_ws();
    if (pos_ != src_.size())
      throw ExprError("trailing input, expected end of expression", pos_);
    return e;
  }

 private:
  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool peek_char(char c) {
    skip_ws();
    return pos_ < src_.size() && src_[pos_] == c;
  }

  bool accept(char c) {
    if (peek_char(c)) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c, const char* what) {
    if (!accept(c)) throw ExprError(std::string("expected ") + what, pos_);
  }

  NodePtr parse_expr() {
    NodePtr lhs = parse_term();
    for (;;) {
      if (accept('+')) lhs = binary(Op::Add, lhs, parse_term());
      else if (accept('-')) lhs = binary(Op::Sub, lhs, parse_term());
      else return lhs;
    }
  }

  NodePtr parse_term() {
    NodePtr lhs = parse_factor();
    for (;;) {
      if (accept('*')) lhs = binary(Op::Mul, lhs, parse_factor());
      else if (accept('/')) lhs = binary(Op::Div, lhs, parse_factor());
      else return lhs;
    }
  }

  NodePtr parse_factor() {
    if (accept('-')) {
      auto n = std::make_shared<Node>();
      n->kind = Node::Kind::Neg;
      n->args.push_back(parse_factor());
      return n;
    }
    return parse_power();
  }

  NodePtr parse_power() {
    NodePtr base = parse_atom();
    if (accept('^')) return binary(Op::Pow, base, parse_factor());  // right-assoc
    return base;
  }

  NodePtr parse_atom() {
    skip_ws();
    if (pos_ >= src_.size())
      throw ExprError("unexpected end of input, expected number, name or '('", pos_);
    const char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
    if (c == '(') {
      ++pos_;
      NodePtr e = parse_expr();
      expect(')', "')'");
      return e;
    }
    throw ExprError(std::string("unexpected character '") + c + "'", pos_);
  }

  NodePtr parse_number() {
    const char* begin = src_.c_str() + pos_;
    char* end = nullptr;
    const double value = std::strtod(begin, &end);
    if (end == begin) throw ExprError("malformed number", pos_);
    pos_ += static_cast<std::size_t>(end - begin);
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::Number;
    n->number = value;
    return n;
  }

  NodePtr parse_ident() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
      ++pos_;
    const std::string name = src_.substr(start, pos_ - start);

    if (peek_char('(')) {  // function call
      auto it = func_table().find(name);
      if (it == func_table().end())
        throw ExprError("unknown function '" + name + "'", start);
      ++pos_;
      auto n = std::make_shared<Node>();
      n->kind = Node::Kind::Call;
      n->func = it->second.func;
      n->args.push_back(parse_expr());
      while (accept(',')) n->args.push_back(parse_expr());
      expect(')', "')' or ','");
      const int arity = static_cast<int>(n->args.size());
      if (arity < it->second.min_arity ||
          (it->second.max_arity >= 0 && arity > it->second.max_arity))
        throw ExprError("wrong argument count for '" + name + "'", start);
      return n;
    }

    auto var = std::make_shared<Node>();
    var->kind = Node::Kind::Var;
    if (name == "t") {
      var->var_kind = VarKind::T;
      return var;
    }
    if ((name[0] == 'x' || name[0] == 'g') && name.size() > 1) {
      bool digits = true;
      for (std::size_t i = 1; i < name.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(name[i]))) digits = false;
      if (digits) {
        var->var_kind = name[0] == 'x' ? VarKind::X : VarKind::G;
        var->var_index = std::atoi(name.c_str() + 1);
        if (var->var_index < 1)
          throw ExprError("variable index must be >= 1 in '" + name + "'", start);
        return var;
      }
    }
    throw ExprError("unknown variable name '" + name + "'", start);
  }

  static NodePtr binary(Op op, NodePtr a, NodePtr b) {
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::Binary;
    n->op = op;
    n->args = {std::move(a), std::move(b)};
    return n;
  }

  const std::string& src_;
  std::size_t pos_ = 0;
};

std::string print_node(const Node& n);

std::string print_child(const Node& n) { return "(" + print_node(n) + ")"; }

std::string print_node(const Node& n) {
  switch (n.kind) {
    case Node::Kind::Number: {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", n.number);
      return buf;
    }
    case Node::Kind::Var:
      if (n.var_kind == VarKind::T) return "t";
      return (n.var_kind == VarKind::X ? "x" : "g") + std::to_string(n.var_index);
    case Node::Kind::Neg:
      return "-" + print_child(*n.args[0]);
    case Node::Kind::Binary: {
      const char* sym = n.op == Op::Add   ? "+"
                        : n.op == Op::Sub ? "-"
                        : n.op == Op::Mul ? "*"
                        : n.op == Op::Div ? "/"
                                          : "^";
      return print_child(*n.args[0]) + sym + print_child(*n.args[1]);
    }
    case Node::Kind::Call: {
      std::string s = std::string(func_name(n.func)) + "(";
      for (std::size_t i = 0; i < n.args.size(); ++i) {
        if (i) s += ",";
        s += print_node(*n.args[i]);
      }
      return s + ")";
    }
  }
  return "?";
}

double eval_node(const Node& n, const EvalContext& ctx);

double eval_call(const Node& n, const EvalContext& ctx) {
  switch (n.func) {
    case Func::Sin: return std::sin(eval_node(*n.args[0], ctx));
    case Func::Cos: return std::cos(eval_node(*n.args[0], ctx));
    case Func::Tan: return std::tan(eval_node(*n.args[0], ctx));
    case Func::Exp: return std::exp(eval_node(*n.args[0], ctx));
    case Func::Log: {
      const double a = eval_node(*n.args[0], ctx);
      if (a <= 0.0) throw EvalError("log of non-positive value", print_node(n));
      return std::log(a);
    }
    case Func::Sqrt: {
      const double a = eval_node(*n.args[0], ctx);
      if (a < 0.0) throw EvalError("sqrt of negative value", print_node(n));
      return std::sqrt(a);
    }
    case Func::Tanh: return std::tanh(eval_node(*n.args[0], ctx));
    case Func::Abs: return std::abs(eval_node(*n.args[0], ctx));
    case Func::Bump: return bump(eval_node(*n.args[0], ctx));
    case Func::Min: {
      double m = eval_node(*n.args[0], ctx);
      for (std::size_t i = 1; i < n.args.size(); ++i) m = std::min(m, eval_node(*n.args[i], ctx));
      return m;
    }
    case Func::Max: {
      double m = eval_node(*n.args[0], ctx);
      for (std::size_t i = 1; i < n.args.size(); ++i) m = std::max(m, eval_node(*n.args[i], ctx));
      return m;
    }
  }
  return 0.0;
}

double eval_node(const Node& n, const EvalContext& ctx) {
  switch (n.kind) {
    case Node::Kind::Number:
      return n.number;
    case Node::Kind::Var: {
      if (n.var_kind == VarKind::T) {
        if (!ctx.has_t) throw EvalError("unbound variable", "t");
        return ctx.t;
      }
      const auto& slots = n.var_kind == VarKind::X ? ctx.x : ctx.g;
      const int i = n.var_index - 1;
      if (i < 0 || i >= static_cast<int>(slots.size()))
        throw EvalError("unbound variable", print_node(n));
      return slots[static_cast<std::size_t>(i)];
    }
    case Node::Kind::Neg:
      return -eval_node(*n.args[0], ctx);
    case Node::Kind::Binary: {
      const double a = eval_node(*n.args[0], ctx);
      const double b = eval_node(*n.args[1], ctx);
      switch (n.op) {
        case Op::Add: return a + b;
        case Op::Sub: return a - b;
        case Op::Mul: return a * b;
        case Op::Div:
          if (b == 0.0) throw EvalError("division by zero", print_node(n));
          return a / b;
        case Op::Pow: {
          // Non-integer exponent on a negative base is a domain error, not NaN.
          if (a < 0.0 && b != std::floor(b))
            throw EvalError("non-integer power of negative base", print_node(n));
          if (a == 0.0 && b < 0.0) throw EvalError("zero raised to negative power", print_node(n));
          return std::pow(a, b);
        }
      }
      return 0.0;
    }
    case Node::Kind::Call:
      return eval_call(n, ctx);
  }
  return 0.0;
}

void scan(const Node& n, int& max_x, int& max_g, bool& has_t) {
  if (n.kind == Node::Kind::Var) {
    if (n.var_kind == VarKind::X) max_x = std::max(max_x, n.var_index);
    else if (n.var_kind == VarKind::G) max_g = std::max(max_g, n.var_index);
    else has_t = true;
  }
  for (const auto& a : n.args) scan(*a, max_x, max_g, has_t);
}

}  // namespace

double Expr::eval(const EvalContext& ctx) const {
  if (!root_) throw EvalError("empty expression", "");
  return eval_node(*root_, ctx);
}

std::string Expr::str() const { return root_ ? print_node(*root_) : ""; }

int Expr::max_x_index() const {
  int mx = 0, mg = 0;
  bool t = false;
  if (root_) scan(*root_, mx, mg, t);
  return mx;
}

int Expr::max_g_index() const {
  int mx = 0, mg = 0;
  bool t = false;
  if (root_) scan(*root_, mx, mg, t);
  return mg;
}

bool Expr::uses_t() const {
  int mx = 0, mg = 0;
  bool t = false;
  if (root_) scan(*root_, mx, mg, t);
  return t;
}

void Expr::validate(int x_dim, int g_dim, bool allow_t) const {
  if (max_x_index() > x_dim)
    throw ExprError("variable x" + std::to_string(max_x_index()) +
                        " exceeds declared dimension " + std::to_string(x_dim),
                    0);
  if (max_g_index() > g_dim)
    throw ExprError("variable g" + std::to_string(max_g_index()) +
                        " exceeds group coordinate count " + std::to_string(g_dim),
                    0);
  if (uses_t() && !allow_t) throw ExprError("variable t not allowed here", 0);
}

Expr parse(const std::string& source) { return Expr(Parser(source).run()); }

}  // namespace gflow::expr
