#include "hqlab/expr.hpp"

#include <charconv>
#include <cctype>
#include <cmath>

#include "hqlab/errors.hpp"

namespace hqlab {

ExprParseError::ExprParseError(Kind kind, std::size_t offset, std::vector<std::string> expected,
                               const std::string& detail)
    : std::invalid_argument([&] {
        std::string msg = detail + " at offset " + std::to_string(offset);
        if (!expected.empty()) {
          msg += "; expected one of:";
          for (const auto& e : expected) msg += " " + e;
        }
        return msg;
      }()),
      kind_(kind),
      offset_(offset),
      expected_(std::move(expected)) {}

ExprPtr make_number(double v) {
  auto n = std::make_shared<ExprNode>();
  n->op = ExprOp::Number;
  n->value = v;
  return n;
}

ExprPtr make_variable(int axis) {
  auto n = std::make_shared<ExprNode>();
  n->op = ExprOp::Variable;
  n->axis = axis;
  return n;
}

ExprPtr make_unary(ExprOp op, ExprPtr operand) {
  auto n = std::make_shared<ExprNode>();
  n->op = op;
  n->lhs = std::move(operand);
  return n;
}

ExprPtr make_binary(ExprOp op, ExprPtr lhs, ExprPtr rhs) {
  auto n = std::make_shared<ExprNode>();
  n->op = op;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  return n;
}

namespace {

const std::vector<std::string>& operand_start() {
  static const std::vector<std::string> v{"number", "variable", "function", "'('", "'-'"};
  return v;
}

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  ExprPtr parse() {
    if (skip_ws(), pos_ == src_.size()) fail(operand_start(), "empty expression");
    ExprPtr e = expr();
    skip_ws();
    if (pos_ != src_.size()) fail({"'+'", "'-'", "'*'", "'/'", "end of input"}, "unexpected character");
    return e;
  }

 private:
  [[noreturn]] void fail(std::vector<std::string> expected, const std::string& what) const {
    throw ExprParseError(ExprParseError::Kind::Syntax, pos_, std::move(expected), what);
  }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  ExprPtr expr() {
    ExprPtr lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = make_binary(ExprOp::Add, lhs, term());
      } else if (accept('-')) {
        lhs = make_binary(ExprOp::Sub, lhs, term());
      } else {
        return lhs;
      }
    }
  }

  ExprPtr term() {
    ExprPtr lhs = factor();
    for (;;) {
      if (accept('*')) {
        lhs = make_binary(ExprOp::Mul, lhs, factor());
      } else if (accept('/')) {
        lhs = make_binary(ExprOp::Div, lhs, factor());
      } else {
        return lhs;
      }
    }
  }

  ExprPtr factor() {
    skip_ws();
    if (pos_ == src_.size()) fail(operand_start(), "unexpected end of input");
    const char c = src_[pos_];
    if (c == '-') {
      ++pos_;
      return make_unary(ExprOp::Neg, factor());
    }
    if (c == '(') {
      ++pos_;
      ExprPtr e = expr();
      if (!accept(')')) fail({"')'"}, "unbalanced parenthesis");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
    fail(operand_start(), "unexpected character");
  }

  ExprPtr number() {
    const std::size_t start = pos_;
    std::size_t p = pos_;
    const auto digits = [&] {
      const std::size_t s = p;
      while (p < src_.size() && std::isdigit(static_cast<unsigned char>(src_[p]))) ++p;
      return p - s;
    };
    std::size_t mantissa = digits();
    if (p < src_.size() && src_[p] == '.') {
      ++p;
      mantissa += digits();
    }
    if (mantissa == 0) {
      pos_ = p;
      fail({"digit"}, "malformed number");
    }
    if (p < src_.size() && (src_[p] == 'e' || src_[p] == 'E')) {
      ++p;
      if (p < src_.size() && (src_[p] == '+' || src_[p] == '-')) ++p;
      if (digits() == 0) {
        pos_ = p;
        fail({"digit"}, "malformed exponent");
      }
    }
    double v = 0.0;
    const auto res = std::from_chars(src_.data() + start, src_.data() + p, v);
    if (res.ec != std::errc() || res.ptr != src_.data() + p || !std::isfinite(v)) {
      pos_ = start;
      fail({"finite number"}, "number out of range");
    }
    pos_ = p;
    return make_number(v);
  }

  ExprPtr identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && std::isalnum(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    const std::string_view name = src_.substr(start, pos_ - start);
    if (name.size() == 2 && (name[0] == 'x' || name[0] == 'y') && name[1] >= '1' && name[1] <= '4')
      return make_variable(2 * (name[1] - '1') + (name[0] == 'y' ? 1 : 0));

    ExprOp op;
    if (name == "sin") op = ExprOp::Sin;
    else if (name == "cos") op = ExprOp::Cos;
    else if (name == "exp") op = ExprOp::Exp;
    else if (name == "log") op = ExprOp::Log;
    else
      throw ExprParseError(ExprParseError::Kind::UnknownIdentifier, start,
                           {"x1..x4", "y1..y4", "sin", "cos", "exp", "log"},
                           "unknown identifier '" + std::string(name) + "'");

    if (!accept('(')) fail({"'('"}, "function name must be followed by '('");
    const std::size_t args_at = pos_;
    std::vector<ExprPtr> args;
    skip_ws();
    if (!accept(')')) {
      args.push_back(expr());
      while (accept(',')) args.push_back(expr());
      if (!accept(')')) fail({"')'", "','"}, "unterminated argument list");
    }
    if (args.size() != 1)
      throw ExprParseError(ExprParseError::Kind::Arity, args_at, {},
                           std::string(name) + " takes 1 argument, got " + std::to_string(args.size()));
    return make_unary(op, args[0]);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

double eval_node(const ExprNode& n, std::span<const double> x) {
  switch (n.op) {
    case ExprOp::Number: return n.value;
    case ExprOp::Variable:
      if (static_cast<std::size_t>(n.axis) >= x.size())
        throw ArgumentError("expression uses a coordinate beyond the grid dimension");
      return x[static_cast<std::size_t>(n.axis)];
    case ExprOp::Neg: return -eval_node(*n.lhs, x);
    case ExprOp::Add: return eval_node(*n.lhs, x) + eval_node(*n.rhs, x);
    case ExprOp::Sub: return eval_node(*n.lhs, x) - eval_node(*n.rhs, x);
    case ExprOp::Mul: return eval_node(*n.lhs, x) * eval_node(*n.rhs, x);
    case ExprOp::Div: return eval_node(*n.lhs, x) / eval_node(*n.rhs, x);
    case ExprOp::Sin: return std::sin(eval_node(*n.lhs, x));
    case ExprOp::Cos: return std::cos(eval_node(*n.lhs, x));
    case ExprOp::Exp: return std::exp(eval_node(*n.lhs, x));
    case ExprOp::Log: return std::log(eval_node(*n.lhs, x));
  }
  return 0.0;
}

int precedence(ExprOp op) {
  switch (op) {
    case ExprOp::Add:
    case ExprOp::Sub: return 1;
    case ExprOp::Mul:
    case ExprOp::Div: return 2;
    case ExprOp::Neg: return 3;
    default: return 4;
  }
}

const char* function_name(ExprOp op) {
  switch (op) {
    case ExprOp::Sin: return "sin";
    case ExprOp::Cos: return "cos";
    case ExprOp::Exp: return "exp";
    case ExprOp::Log: return "log";
    default: return "";
  }
}

void format_node(const ExprNode& n, std::string& out) {
  const auto child = [&](const ExprNode& c, bool parens) {
    if (parens) out += '(';
    format_node(c, out);
    if (parens) out += ')';
  };
  switch (n.op) {
    case ExprOp::Number: {
      char buf[32];
      const auto res = std::to_chars(buf, buf + sizeof buf, n.value);
      if (n.value < 0.0 || std::signbit(n.value)) out += '(';
      out.append(buf, res.ptr);
      if (n.value < 0.0 || std::signbit(n.value)) out += ')';
      return;
    }
    case ExprOp::Variable:
      out += (n.axis % 2 == 0) ? 'x' : 'y';
      out += static_cast<char>('1' + n.axis / 2);
      return;
    case ExprOp::Neg:
      out += '-';
      child(*n.lhs, precedence(n.lhs->op) < 3);
      return;
    case ExprOp::Sin:
    case ExprOp::Cos:
    case ExprOp::Exp:
    case ExprOp::Log:
      out += function_name(n.op);
      child(*n.lhs, true);
      return;
    default: {
      const int p = precedence(n.op);
      child(*n.lhs, precedence(n.lhs->op) < p);
      switch (n.op) {
        case ExprOp::Add: out += " + "; break;
        case ExprOp::Sub: out += " - "; break;
        case ExprOp::Mul: out += " * "; break;
        default: out += " / "; break;
      }
      child(*n.rhs, precedence(n.rhs->op) <= p);
      return;
    }
  }
}

bool is_number(const ExprPtr& e, double v) { return e->op == ExprOp::Number && e->value == v; }

ExprPtr simplify_add(ExprPtr a, ExprPtr b) {
  if (is_number(a, 0.0)) return b;
  if (is_number(b, 0.0)) return a;
  return make_binary(ExprOp::Add, std::move(a), std::move(b));
}

ExprPtr simplify_sub(ExprPtr a, ExprPtr b) {
  if (is_number(b, 0.0)) return a;
  if (is_number(a, 0.0)) return make_unary(ExprOp::Neg, std::move(b));
  return make_binary(ExprOp::Sub, std::move(a), std::move(b));
}

ExprPtr simplify_mul(ExprPtr a, ExprPtr b) {
  if (is_number(a, 0.0) || is_number(b, 0.0)) return make_number(0.0);
  if (is_number(a, 1.0)) return b;
  if (is_number(b, 1.0)) return a;
  return make_binary(ExprOp::Mul, std::move(a), std::move(b));
}

ExprPtr simplify_div(ExprPtr a, ExprPtr b) {
  if (is_number(a, 0.0)) return make_number(0.0);
  if (is_number(b, 1.0)) return a;
  return make_binary(ExprOp::Div, std::move(a), std::move(b));
}

ExprPtr simplify_neg(ExprPtr a) {
  if (is_number(a, 0.0)) return a;
  return make_unary(ExprOp::Neg, std::move(a));
}

ExprPtr diff(const ExprPtr& e, int axis) {
  switch (e->op) {
    case ExprOp::Number: return make_number(0.0);
    case ExprOp::Variable: return make_number(e->axis == axis ? 1.0 : 0.0);
    case ExprOp::Neg: return simplify_neg(diff(e->lhs, axis));
    case ExprOp::Add: return simplify_add(diff(e->lhs, axis), diff(e->rhs, axis));
    case ExprOp::Sub: return simplify_sub(diff(e->lhs, axis), diff(e->rhs, axis));
    case ExprOp::Mul:
      return simplify_add(simplify_mul(diff(e->lhs, axis), e->rhs), simplify_mul(e->lhs, diff(e->rhs, axis)));
    case ExprOp::Div: {
      // (a'b - ab') / b^2
      ExprPtr num = simplify_sub(simplify_mul(diff(e->lhs, axis), e->rhs), simplify_mul(e->lhs, diff(e->rhs, axis)));
      return simplify_div(num, make_binary(ExprOp::Mul, e->rhs, e->rhs));
    }
    case ExprOp::Sin: return simplify_mul(make_unary(ExprOp::Cos, e->lhs), diff(e->lhs, axis));
    case ExprOp::Cos:
      return simplify_mul(simplify_neg(make_unary(ExprOp::Sin, e->lhs)), diff(e->lhs, axis));
    case ExprOp::Exp: return simplify_mul(e, diff(e->lhs, axis));
    case ExprOp::Log: return simplify_div(diff(e->lhs, axis), e->lhs);
  }
  return make_number(0.0);
}

int max_axis_of(const ExprNode& n) {
  int m = n.op == ExprOp::Variable ? n.axis : -1;
  if (n.lhs) m = std::max(m, max_axis_of(*n.lhs));
  if (n.rhs) m = std::max(m, max_axis_of(*n.rhs));
  return m;
}

}  // namespace

bool same_tree(const ExprPtr& a, const ExprPtr& b) {
  if (!a || !b) return !a && !b;
  if (a->op != b->op) return false;
  if (a->op == ExprOp::Number) return a->value == b->value && std::signbit(a->value) == std::signbit(b->value);
  if (a->op == ExprOp::Variable) return a->axis == b->axis;
  return same_tree(a->lhs, b->lhs) && same_tree(a->rhs, b->rhs);
}

Expression::Expression(ExprPtr root) : root_(std::move(root)) {
  if (!root_) throw ArgumentError("expression: empty tree");
}

double Expression::eval(std::span<const double> x) const { return eval_node(*root_, x); }

std::string Expression::format() const {
  std::string out;
  format_node(*root_, out);
  return out;
}

Expression Expression::derivative(int axis) const { return Expression(diff(root_, axis)); }

int Expression::max_axis() const { return max_axis_of(*root_); }

bool operator==(const Expression& a, const Expression& b) { return same_tree(a.root_, b.root_); }

Expression parse_expr(std::string_view src) { return Expression(Parser(src).parse()); }

}  // namespace hqlab
