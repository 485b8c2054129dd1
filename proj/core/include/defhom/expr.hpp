#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>

namespace defhom {

/// Which one-sided limit step() takes when its argument is exactly zero.
enum class Side { Left, Right };

/// Immutable expression tree over x, u1..un.
///
/// Grammar (tightest first): `^k` with a signed integer literal k, unary
/// minus, `* /`, `+ -`; binary operators associate to the left. Builtins:
/// sin, cos, exp, tanh, step. The constant `pi` is recognised. step() must
/// have an argument that is affine in x and free of u.
class Expr {
 public:
  enum class Op { Num, Var, Neg, Add, Sub, Mul, Div, Pow, Sin, Cos, Exp, Tanh, Step };

  struct Node;

  Expr();  // the literal 0
  explicit Expr(std::shared_ptr<const Node> root) : root_(std::move(root)) {}

  static Expr number(double v);
  /// Variable 0 is x, variable k >= 1 is u_k.
  static Expr variable(std::size_t index);

  Op op() const;
  bool is_number() const;
  bool is_number(double v) const;
  double number_value() const;

  /// Evaluate at (x, u). `side` resolves step() exactly at its jump.
  double eval(double x, std::span<const double> u, Side side = Side::Right) const;

  /// Symbolic partial derivative with light simplification (constant folding,
  /// neutral elements). step() differentiates to 0.
  Expr diff(std::size_t var) const;

  bool depends_on(std::size_t var) const;
  bool depends_on_u() const;

  /// Fully parenthesised text that parses back to an equivalent tree.
  std::string to_string() const;

  const Node& node() const { return *root_; }

 private:
  std::shared_ptr<const Node> root_;
};

struct Expr::Node {
  Op op = Op::Num;
  double value = 0.0;   // Num
  std::size_t var = 0;  // Var
  int exponent = 0;     // Pow
  Expr a;
  Expr b;  // second operand; for Step the x-derivative of the argument
};

/// Parse `text` over variables x, u1..u_n. Throws ParseError carrying the byte
/// offset of the offending token and the set of tokens that would have been
/// accepted there.
Expr parse_expression(std::string_view text, std::size_t n);

}  // namespace defhom
