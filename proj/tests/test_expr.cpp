#include <doctest.h>

#include <array>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <string>
#include <string_view>

#include "hqlab/errors.hpp"
#include "hqlab/expr.hpp"
#include "support.hpp"

using namespace hqlab;

namespace {

// Independent evaluator working straight from the text, used as the oracle
// for Expression::eval on formatted random trees.
class ReferenceInterpreter {
 public:
  ReferenceInterpreter(std::string_view src, std::span<const double> x) : s_(src), x_(x) {}

  double run() {
    const double v = sum();
    ws();
    REQUIRE(p_ == s_.size());
    return v;
  }

 private:
  void ws() {
    while (p_ < s_.size() && s_[p_] == ' ') ++p_;
  }
  bool eat(char c) {
    ws();
    if (p_ < s_.size() && s_[p_] == c) {
      ++p_;
      return true;
    }
    return false;
  }
  double sum() {
    double v = product();
    for (;;) {
      if (eat('+')) v = v + product();
      else if (eat('-')) v = v - product();
      else return v;
    }
  }
  double product() {
    double v = unary();
    for (;;) {
      if (eat('*')) v = v * unary();
      else if (eat('/')) v = v / unary();
      else return v;
    }
  }
  double unary() {
    ws();
    if (eat('-')) return -unary();
    if (eat('(')) {
      const double v = sum();
      REQUIRE(eat(')'));
      return v;
    }
    const char c = s_[p_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const std::string rest(s_.substr(p_));
      char* end = nullptr;
      const double v = std::strtod(rest.c_str(), &end);
      p_ += static_cast<std::size_t>(end - rest.c_str());
      return v;
    }
    std::size_t q = p_;
    while (q < s_.size() && std::isalnum(static_cast<unsigned char>(s_[q]))) ++q;
    const std::string name(s_.substr(p_, q - p_));
    p_ = q;
    if (name.size() == 2 && (name[0] == 'x' || name[0] == 'y'))
      return x_[static_cast<std::size_t>(2 * (name[1] - '1') + (name[0] == 'y'))];
    REQUIRE(eat('('));
    const double a = sum();
    REQUIRE(eat(')'));
    if (name == "sin") return std::sin(a);
    if (name == "cos") return std::cos(a);
    if (name == "exp") return std::exp(a);
    REQUIRE(name == "log");
    return std::log(a);
  }

  std::string_view s_;
  std::span<const double> x_;
  std::size_t p_ = 0;
};

ExprPtr random_tree(hqtest::Rng& rng, int depth) {
  if (depth == 0 || rng.uniform() < 0.25) {
    if (rng.uniform() < 0.5) return make_variable(rng.integer(0, 7));
    double v = rng.uniform(0.0, 3.0);
    switch (rng.integer(0, 3)) {
      case 0: v = std::round(v * 10.0) / 10.0; break;
      case 1: v = rng.log_uniform(1e-8, 1e8); break;
      case 2: v = -v; break;
      default: break;
    }
    return make_number(v);
  }
  const int k = rng.integer(0, 8);
  static constexpr std::array<ExprOp, 9> ops = {ExprOp::Neg, ExprOp::Add, ExprOp::Sub, ExprOp::Mul, ExprOp::Div,
                                                ExprOp::Sin, ExprOp::Cos, ExprOp::Exp, ExprOp::Log};
  const ExprOp op = ops[static_cast<std::size_t>(k)];
  if (op == ExprOp::Add || op == ExprOp::Sub || op == ExprOp::Mul || op == ExprOp::Div)
    return make_binary(op, random_tree(rng, depth - 1), random_tree(rng, depth - 1));
  return make_unary(op, random_tree(rng, depth - 1));
}

bool close(double a, double b, double tol) {
  if (std::isnan(a) || std::isnan(b)) return std::isnan(a) && std::isnan(b);
  if (std::isinf(a) || std::isinf(b)) return a == b;
  return std::abs(a - b) <= tol * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

}  // namespace

TEST_CASE("parse examples") {
  const auto c = parse_expr("1.0");
  CHECK(c.is_constant());
  CHECK(c.root()->op == ExprOp::Number);
  CHECK(c.eval({}) == 1.0);

  const auto e = parse_expr("1 + 0.3*cos(x1)*cos(y2)");
  std::array<double, 4> x{0.0, 0.7, -1.2, 0.0};
  CHECK(e.eval(x) == doctest::Approx(1.3).epsilon(1e-15));
  CHECK(e.max_axis() == 3);

  CHECK(parse_expr("2 - 3 - 4").eval({}) == -5.0);
  CHECK(parse_expr("8 / 4 / 2").eval({}) == 1.0);
  CHECK(parse_expr("2 + 3 * 4").eval({}) == 14.0);
  CHECK(parse_expr("-2 * 3").eval({}) == -6.0);
  CHECK(parse_expr("--2").eval({}) == 2.0);
  CHECK(parse_expr("1.5e2 + .5 + 2E-1").eval({}) == doctest::Approx(150.7));
  CHECK(parse_expr("exp(log(2))").eval({}) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("parse errors") {
  auto error_of = [](std::string_view src) {
    try {
      parse_expr(src);
    } catch (const ExprParseError& e) {
      return e;
    }
    FAIL("no error for: " << src);
    throw std::logic_error("unreachable");
  };
  const auto open = error_of("sin(");
  CHECK(open.kind() == ExprParseError::Kind::Syntax);
  CHECK(open.offset() == 4);
  CHECK_FALSE(open.expected().empty());

  CHECK(error_of("").offset() == 0);
  CHECK(error_of("1 +").offset() == 3);
  CHECK(error_of("(1").offset() == 2);
  CHECK(error_of("1 2").offset() == 2);
  CHECK(error_of("1e").offset() == 2);
  const auto unknown = error_of("1 + z3");
  CHECK(unknown.kind() == ExprParseError::Kind::UnknownIdentifier);
  CHECK(unknown.offset() == 4);
  CHECK(error_of("x5").kind() == ExprParseError::Kind::UnknownIdentifier);
  CHECK(error_of("tan(1)").kind() == ExprParseError::Kind::UnknownIdentifier);
  const auto arity = error_of("sin(1, 2)");
  CHECK(arity.kind() == ExprParseError::Kind::Arity);
  CHECK(arity.offset() == 4);
  CHECK(error_of("cos()").kind() == ExprParseError::Kind::Arity);
  CHECK(error_of("sin 1").kind() == ExprParseError::Kind::Syntax);
}

TEST_CASE("evaluation beyond the coordinate vector is rejected") {
  const auto e = parse_expr("x3");
  std::array<double, 2> x{1.0, 2.0};
  CHECK_THROWS_AS(e.eval(x), ArgumentError);
}

TEST_CASE("formatting round-trips") {
  for (const char* src : {"1 + 0.3*cos(x1)*cos(y2)", "-(1 - 2)", "2 - (3 - 4)", "2 / (3 * 4)", "(1 + 2) * 3",
                          "-x1 * -y1", "exp(-x1 / 3) - log(2 + y4)", "1e-300 * 1e300", "0.1 + 0.2"}) {
    const auto e = parse_expr(src);
    const auto again = parse_expr(e.format());
    CHECK(e == again);
    CHECK(again.format() == e.format());
  }
  CHECK(parse_expr("(1 + 2) * 3").format() == "(1 + 2) * 3");
  CHECK(parse_expr("1 + 2 * 3").format() == "1 + 2 * 3");
  CHECK(parse_expr("2 - (3 - 4)").format() == "2 - (3 - 4)");
  CHECK(parse_expr("(2 - 3) - 4").format() == "2 - 3 - 4");
}

TEST_CASE("random trees: format round-trips and evaluation matches the reference") {
  hqtest::Rng rng(71);
  std::array<double, 8> x{};
  for (int trial = 0; trial < 10000; ++trial) {
    const Expression e(random_tree(rng, rng.integer(1, 6)));
    const std::string text = e.format();
    // Negative literals print as "(-v)" and read back as negations, so the
    // fixed point is the parsed tree.
    const auto parsed = parse_expr(text);
    CHECK(parse_expr(parsed.format()) == parsed);
    for (auto& xi : x) xi = rng.uniform(-3.0, 3.0);
    const double got = e.eval(x);
    const double ref = ReferenceInterpreter(text, x).run();
    CHECK_MESSAGE(close(got, ref, 1e-14), text);
    CHECK_MESSAGE(close(parsed.eval(x), ref, 1e-14), text);
  }
}

TEST_CASE("derivatives match finite differences") {
  hqtest::Rng rng(72);
  const char* sources[] = {"0.2*sin(x1)*cos(y2)", "exp(x1 * y1) / (2 + cos(x2))", "log(3 + sin(x1 - y2)) * x1",
                           "-(x1 * x1 * x1) + 1", "1 / (2 + x1 * x1)"};
  for (const char* src : sources) {
    const auto e = parse_expr(src);
    for (int axis = 0; axis < 4; ++axis) {
      const auto d = e.derivative(axis);
      for (int k = 0; k < 10; ++k) {
        std::array<double, 4> x{};
        for (auto& xi : x) xi = rng.uniform(-1.0, 1.0);
        auto xp = x, xm = x;
        const double h = 1e-6;
        xp[static_cast<std::size_t>(axis)] += h;
        xm[static_cast<std::size_t>(axis)] -= h;
        const double fd = (e.eval(xp) - e.eval(xm)) / (2.0 * h);
        CHECK(std::abs(d.eval(x) - fd) <= 1e-7 * std::max(1.0, std::abs(fd)));
      }
    }
  }
  CHECK(parse_expr("x1").derivative(0).format() == "1");
  CHECK(parse_expr("x1").derivative(1).format() == "0");
  CHECK(parse_expr("3 + y1").derivative(0).is_constant());
}
