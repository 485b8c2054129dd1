#include "defhom/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <vector>

#include <fmt/format.h>

#include "defhom/errors.hpp"

namespace defhom {

namespace {

using Op = Expr::Op;

Expr make(Op op, Expr a = {}, Expr b = {}) {
  auto n = std::make_shared<Expr::Node>();
  n->op = op;
  n->a = std::move(a);
  n->b = std::move(b);
  return Expr(std::move(n));
}

Expr make_pow(Expr a, int k) {
  if (k == 0) return Expr::number(1.0);
  if (k == 1) return a;
  if (a.is_number()) return Expr::number(std::pow(a.number_value(), k));
  auto n = std::make_shared<Expr::Node>();
  n->op = Op::Pow;
  n->exponent = k;
  n->a = std::move(a);
  return Expr(std::move(n));
}

Expr make_neg(Expr a) {
  if (a.is_number()) return Expr::number(-a.number_value());
  if (a.op() == Op::Neg) return a.node().a;
  return make(Op::Neg, std::move(a));
}

Expr make_add(Expr a, Expr b) {
  if (a.is_number() && b.is_number()) return Expr::number(a.number_value() + b.number_value());
  if (a.is_number(0.0)) return b;
  if (b.is_number(0.0)) return a;
  return make(Op::Add, std::move(a), std::move(b));
}

Expr make_sub(Expr a, Expr b) {
  if (a.is_number() && b.is_number()) return Expr::number(a.number_value() - b.number_value());
  if (b.is_number(0.0)) return a;
  if (a.is_number(0.0)) return make_neg(std::move(b));
  return make(Op::Sub, std::move(a), std::move(b));
}

Expr make_mul(Expr a, Expr b) {
  if (a.is_number() && b.is_number()) return Expr::number(a.number_value() * b.number_value());
  if (a.is_number(0.0) || b.is_number(0.0)) return Expr::number(0.0);
  if (a.is_number(1.0)) return b;
  if (b.is_number(1.0)) return a;
  if (a.is_number(-1.0)) return make_neg(std::move(b));
  if (b.is_number(-1.0)) return make_neg(std::move(a));
  return make(Op::Mul, std::move(a), std::move(b));
}

Expr make_div(Expr a, Expr b) {
  if (a.is_number(0.0)) return Expr::number(0.0);
  if (b.is_number(1.0)) return a;
  if (a.is_number() && b.is_number() && b.number_value() != 0.0) {
    return Expr::number(a.number_value() / b.number_value());
  }
  return make(Op::Div, std::move(a), std::move(b));
}

Expr make_step(Expr arg) {
  if (arg.depends_on_u()) throw ModelError("step() argument must not depend on u");
  Expr slope = arg.diff(0);
  if (!slope.is_number() || slope.is_number(0.0)) {
    throw ModelError("step() argument must be affine in x with nonzero slope");
  }
  return make(Op::Step, std::move(arg), std::move(slope));
}

// ---------------------------------------------------------------------------

class Parser {
 public:
  Parser(std::string_view text, std::size_t n) : s_(text), n_(n) {}

  Expr parse() {
    skip();
    if (pos_ >= s_.size()) fail("empty expression", operand_set());
    Expr e = expression();
    skip();
    if (pos_ < s_.size()) fail(fmt::format("unexpected '{}'", s_[pos_]), {"+", "-", "*", "/", "^", "end of input"});
    return e;
  }

 private:
  std::string_view s_;
  std::size_t n_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& what, std::vector<std::string> expected) const {
    std::string exp;
    for (std::size_t i = 0; i < expected.size(); ++i) {
      if (i) exp += ", ";
      exp += expected[i];
    }
    throw ParseError(fmt::format("parse error at offset {}: {} (expected one of: {})", pos_, what, exp),
                     pos_, std::move(expected));
  }

  std::vector<std::string> operand_set() const {
    return {"number", "x", fmt::format("u1..u{}", n_), "pi", "function", "(", "-"};
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Expr expression() {
    Expr lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = make(Op::Add, lhs, term());
      } else if (accept('-')) {
        lhs = make(Op::Sub, lhs, term());
      } else {
        return lhs;
      }
    }
  }

  Expr term() {
    Expr lhs = unary();
    for (;;) {
      if (accept('*')) {
        lhs = make(Op::Mul, lhs, unary());
      } else if (accept('/')) {
        lhs = make(Op::Div, lhs, unary());
      } else {
        return lhs;
      }
    }
  }

  Expr unary() {
    if (accept('-')) return make(Op::Neg, unary());
    return power();
  }

  Expr power() {
    Expr base = primary();
    while (accept('^')) {
      skip();
      bool paren = accept('(');
      skip();
      bool neg = accept('-');
      skip();
      std::size_t start = pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      if (start == pos_) {
        pos_ = start;
        fail("exponent must be an integer literal", {"integer", "-"});
      }
      if (pos_ - start > 6) {
        pos_ = start;
        fail("exponent too large", {"integer"});
      }
      int k = std::atoi(std::string(s_.substr(start, pos_ - start)).c_str());
      if (paren && !accept(')')) fail("missing ')'", {")"});
      auto node = std::make_shared<Expr::Node>();
      node->op = Op::Pow;
      node->exponent = neg ? -k : k;
      node->a = base;
      base = Expr(std::move(node));
    }
    return base;
  }

  Expr number_literal() {
    std::size_t start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (pos_ < s_.size() && s_[pos_] == '.') {
      ++pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    if (pos_ == start + 1 && s_[start] == '.') {
      pos_ = start;
      fail("malformed number", {"digit"});
    }
    if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
      std::size_t save = pos_;
      ++pos_;
      if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) ++pos_;
      std::size_t ds = pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      if (ds == pos_) {
        pos_ = save;
        fail("malformed exponent in number", {"digit"});
      }
    }
    std::string lit(s_.substr(start, pos_ - start));
    double v = std::strtod(lit.c_str(), nullptr);
    if (!std::isfinite(v)) {
      pos_ = start;
      fail("number out of range", {"finite number"});
    }
    return Expr::number(v);
  }

  Expr primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input", operand_set());
    char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number_literal();
    if (c == '(') {
      ++pos_;
      Expr e = expression();
      if (!accept(')')) fail("missing ')'", {")", "+", "-", "*", "/", "^"});
      return e;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
        ++pos_;
      }
      std::string id(s_.substr(start, pos_ - start));
      if (id == "x") return Expr::variable(0);
      if (id == "pi") return Expr::number(std::numbers::pi);
      if (id.size() > 1 && id[0] == 'u' &&
          id.find_first_not_of("0123456789", 1) == std::string::npos && id[1] != '0') {
        std::size_t k = std::stoul(id.substr(1));
        if (k >= 1 && k <= n_) return Expr::variable(k);
        pos_ = start;
        fail(fmt::format("variable '{}' out of range for dimension {}", id, n_), operand_set());
      }
      Op fn;
      if (id == "sin") {
        fn = Op::Sin;
      } else if (id == "cos") {
        fn = Op::Cos;
      } else if (id == "exp") {
        fn = Op::Exp;
      } else if (id == "tanh") {
        fn = Op::Tanh;
      } else if (id == "step") {
        fn = Op::Step;
      } else {
        pos_ = start;
        fail(fmt::format("unknown identifier '{}'", id), operand_set());
      }
      if (!accept('(')) fail(fmt::format("'(' after '{}'", id), {"("});
      Expr arg = expression();
      if (!accept(')')) fail("missing ')'", {")", "+", "-", "*", "/", "^"});
      if (fn == Op::Step) {
        try {
          return make_step(std::move(arg));
        } catch (const ModelError& e) {
          pos_ = start;
          fail(e.what(), {"x-affine argument"});
        }
      }
      return make(fn, std::move(arg));
    }
    fail(fmt::format("unexpected '{}'", c), operand_set());
  }
};

double eval_node(const Expr& e, double x, std::span<const double> u, Side side) {
  const auto& n = e.node();
  switch (n.op) {
    case Op::Num: return n.value;
    case Op::Var: return n.var == 0 ? x : u[n.var - 1];
    case Op::Neg: return -eval_node(n.a, x, u, side);
    case Op::Add: return eval_node(n.a, x, u, side) + eval_node(n.b, x, u, side);
    case Op::Sub: return eval_node(n.a, x, u, side) - eval_node(n.b, x, u, side);
    case Op::Mul: return eval_node(n.a, x, u, side) * eval_node(n.b, x, u, side);
    case Op::Div: return eval_node(n.a, x, u, side) / eval_node(n.b, x, u, side);
    case Op::Pow: {
      double b = eval_node(n.a, x, u, side);
      int k = n.exponent;
      double r = 1.0;
      for (int i = 0; i < std::abs(k); ++i) r *= b;
      return k < 0 ? 1.0 / r : r;
    }
    case Op::Sin: return std::sin(eval_node(n.a, x, u, side));
    case Op::Cos: return std::cos(eval_node(n.a, x, u, side));
    case Op::Exp: return std::exp(eval_node(n.a, x, u, side));
    case Op::Tanh: return std::tanh(eval_node(n.a, x, u, side));
    case Op::Step: {
      double s = eval_node(n.a, x, u, side);
      if (s > 0.0) return 1.0;
      if (s < 0.0) return 0.0;
      // At the jump: the argument increases through zero when the slope is
      // positive, so the right limit is 1 and the left limit 0.
      bool rising = n.b.number_value() > 0.0;
      return (side == Side::Right) == rising ? 1.0 : 0.0;
    }
  }
  return 0.0;
}

std::string print_node(const Expr& e) {
  const auto& n = e.node();
  switch (n.op) {
    case Op::Num: return fmt::format("{:.17g}", n.value);
    case Op::Var: return n.var == 0 ? std::string("x") : fmt::format("u{}", n.var);
    case Op::Neg: return fmt::format("(-{})", print_node(n.a));
    case Op::Add: return fmt::format("({} + {})", print_node(n.a), print_node(n.b));
    case Op::Sub: return fmt::format("({} - {})", print_node(n.a), print_node(n.b));
    case Op::Mul: return fmt::format("({} * {})", print_node(n.a), print_node(n.b));
    case Op::Div: return fmt::format("({} / {})", print_node(n.a), print_node(n.b));
    case Op::Pow: return fmt::format("({}^{})", print_node(n.a), n.exponent);
    case Op::Sin: return fmt::format("sin({})", print_node(n.a));
    case Op::Cos: return fmt::format("cos({})", print_node(n.a));
    case Op::Exp: return fmt::format("exp({})", print_node(n.a));
    case Op::Tanh: return fmt::format("tanh({})", print_node(n.a));
    case Op::Step: return fmt::format("step({})", print_node(n.a));
  }
  return "0";
}

}  // namespace

Expr::Expr() = default;

Expr Expr::number(double v) {
  auto n = std::make_shared<Node>();
  n->op = Op::Num;
  n->value = v;
  return Expr(std::move(n));
}

Expr Expr::variable(std::size_t index) {
  auto n = std::make_shared<Node>();
  n->op = Op::Var;
  n->var = index;
  return Expr(std::move(n));
}

Expr::Op Expr::op() const { return root_ ? root_->op : Op::Num; }

bool Expr::is_number() const { return op() == Op::Num; }

bool Expr::is_number(double v) const { return is_number() && number_value() == v; }

double Expr::number_value() const { return root_ ? root_->value : 0.0; }

double Expr::eval(double x, std::span<const double> u, Side side) const {
  if (!root_) return 0.0;
  return eval_node(*this, x, u, side);
}

bool Expr::depends_on(std::size_t var) const {
  if (!root_) return false;
  const auto& n = *root_;
  switch (n.op) {
    case Op::Num: return false;
    case Op::Var: return n.var == var;
    case Op::Step: return n.a.depends_on(var);
    default: return n.a.depends_on(var) || n.b.depends_on(var);
  }
}

bool Expr::depends_on_u() const {
  if (!root_) return false;
  const auto& n = *root_;
  switch (n.op) {
    case Op::Num: return false;
    case Op::Var: return n.var != 0;
    case Op::Step: return n.a.depends_on_u();
    default: return n.a.depends_on_u() || n.b.depends_on_u();
  }
}

Expr Expr::diff(std::size_t var) const {
  if (!root_) return Expr::number(0.0);
  const auto& n = *root_;
  const Expr& a = n.a;
  const Expr& b = n.b;
  switch (n.op) {
    case Op::Num: return number(0.0);
    case Op::Var: return number(n.var == var ? 1.0 : 0.0);
    case Op::Neg: return make_neg(a.diff(var));
    case Op::Add: return make_add(a.diff(var), b.diff(var));
    case Op::Sub: return make_sub(a.diff(var), b.diff(var));
    case Op::Mul: return make_add(make_mul(a.diff(var), b), make_mul(a, b.diff(var)));
    case Op::Div: {
      Expr da = a.diff(var);
      Expr db = b.diff(var);
      return make_sub(make_div(da, b), make_div(make_mul(a, db), make_pow(b, 2)));
    }
    case Op::Pow: {
      int k = n.exponent;
      return make_mul(make_mul(number(static_cast<double>(k)), make_pow(a, k - 1)), a.diff(var));
    }
    case Op::Sin: return make_mul(make(Op::Cos, a), a.diff(var));
    case Op::Cos: return make_mul(make_neg(make(Op::Sin, a)), a.diff(var));
    case Op::Exp: return make_mul(*this, a.diff(var));
    case Op::Tanh:
      return make_mul(make_sub(number(1.0), make_pow(*this, 2)), a.diff(var));
    case Op::Step: return number(0.0);
  }
  return number(0.0);
}

std::string Expr::to_string() const {
  if (!root_) return "0";
  return print_node(*this);
}

Expr parse_expression(std::string_view text, std::size_t n) { return Parser(text, n).parse(); }

}  // namespace defhom
