#pragma once

// Arithmetic expressions over the torus coordinates x1..x4, y1..y4:
//   expr   := term (('+' | '-') term)*
//   term   := factor (('*' | '/') factor)*
//   factor := number | var | func '(' expr ')' | '(' expr ')' | '-' factor
// with func in {sin, cos, exp, log}.

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hqlab {

enum class ExprOp { Number, Variable, Neg, Add, Sub, Mul, Div, Sin, Cos, Exp, Log };

struct ExprNode;
using ExprPtr = std::shared_ptr<const ExprNode>;

struct ExprNode {
  ExprOp op = ExprOp::Number;
  double value = 0.0;  // Number
  int axis = 0;        // Variable: 2(i-1) for x_i, 2(i-1)+1 for y_i
  ExprPtr lhs;         // unary operand or left child
  ExprPtr rhs;
};

class ExprParseError : public std::invalid_argument {
 public:
  enum class Kind { Syntax, UnknownIdentifier, Arity };
  ExprParseError(Kind kind, std::size_t offset, std::vector<std::string> expected, const std::string& detail);
  Kind kind() const noexcept { return kind_; }
  std::size_t offset() const noexcept { return offset_; }
  const std::vector<std::string>& expected() const noexcept { return expected_; }

 private:
  Kind kind_;
  std::size_t offset_;
  std::vector<std::string> expected_;
};

class Expression {
 public:
  explicit Expression(ExprPtr root);

  const ExprPtr& root() const noexcept { return root_; }
  /// x holds real coordinates (x1, y1, x2, y2, ...); throws ArgumentError
  /// when a variable lies beyond x.size().
  double eval(std::span<const double> x) const;
  /// Canonical text with minimal parentheses; parses back to an equal tree.
  std::string format() const;
  /// Partial derivative along a real axis, lightly simplified.
  Expression derivative(int axis) const;
  /// Largest axis referenced, or -1 for a constant expression.
  int max_axis() const;
  bool is_constant() const { return max_axis() < 0; }

  friend bool operator==(const Expression& a, const Expression& b);

 private:
  ExprPtr root_;
};

Expression parse_expr(std::string_view src);

/// Structural equality (numbers compared exactly).
bool same_tree(const ExprPtr& a, const ExprPtr& b);

ExprPtr make_number(double v);
ExprPtr make_variable(int axis);
ExprPtr make_unary(ExprOp op, ExprPtr operand);
ExprPtr make_binary(ExprOp op, ExprPtr lhs, ExprPtr rhs);

}  // namespace hqlab
