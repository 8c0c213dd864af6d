#include <doctest.h>

#include <cmath>

#include "dpflow/errors.hpp"
#include "dpflow/expr.hpp"

using dpflow::Expression;

namespace {
double ev(const std::string& s, std::vector<double> vars = {}, std::vector<std::string> names = {}) {
  return Expression::parse(s, names).eval(vars);
}
}  // namespace

TEST_CASE("precedence and associativity") {
  CHECK(ev("1 + 2 * 3") == 7.0);
  CHECK(ev("(1 + 2) * 3") == 9.0);
  CHECK(ev("-2^2") == -4.0);
  CHECK(ev("2^3^2") == 512.0);
  CHECK(ev("8 / 4 / 2") == 1.0);
  CHECK(ev("2 - 3 - 4") == -5.0);
  CHECK(ev("1e-3 * 2E2") == doctest::Approx(0.2));
}

TEST_CASE("functions, constants, variables and parameters") {
  CHECK(ev("exp(log(3))") == doctest::Approx(3.0));
  CHECK(ev("pow(2, 10)") == 1024.0);
  CHECK(ev("sin(pi / 2) + cos(0)") == doctest::Approx(2.0));
  CHECK(ev("sqrt(16) + e") == doctest::Approx(4.0 + std::exp(1.0)));
  const Expression f = Expression::parse("-x + tanh(g * y)", {"x", "y"}, {{"g", 2.0}});
  const std::vector<double> at{0.5, 0.25};
  CHECK(f.eval(at) == doctest::Approx(-0.5 + std::tanh(0.5)));
}

TEST_CASE("malformed input") {
  CHECK_THROWS_AS(Expression::parse("1 +", {}), dpflow::ArgumentError);
  CHECK_THROWS_AS(Expression::parse("foo(1)", {}), dpflow::ArgumentError);
  CHECK_THROWS_AS(Expression::parse("z", {"x"}), dpflow::ArgumentError);
  CHECK_THROWS_AS(Expression::parse("(1 + 2", {}), dpflow::ArgumentError);
  CHECK_THROWS_AS(Expression::parse("1 2", {}), dpflow::ArgumentError);
}
