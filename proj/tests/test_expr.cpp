#include <cmath>
#include <numbers>

#include "doctest.h"
#include "oscikg/expr.hpp"

using oscikg::Expr;
using oscikg::ExprError;

TEST_CASE("expr: arithmetic and precedence") {
  CHECK(Expr("1 + 2 * 3").eval(0, 0, 0) == 7.0);
  CHECK(Expr("2^3^2").eval(0, 0, 0) == doctest::Approx(512.0));
  CHECK(Expr("-x^2").eval(3, 0, 0) == -9.0);
  CHECK(Expr("(1+x)**2").eval(2, 0, 0) == 9.0);
  CHECK(Expr("x/y").eval(1, 4, 0) == 0.25);
  CHECK(Expr("exp(-x^2/2)").eval(1, 0, 0) == doctest::Approx(std::exp(-0.5)));
  CHECK(Expr("sin(pi/2) + cos(0) + sqrt(4) + log(1) + abs(-3)").eval(0, 0, 0) == doctest::Approx(7.0));
  CHECK(Expr("1e-3*t").eval(0, 0, 2) == doctest::Approx(2e-3));
  CHECK(Expr("pi").eval(0, 0, 0) == std::numbers::pi);
}

TEST_CASE("expr: example forcing at a point") {
  // -(1 + 0.1 cos(w t)) x^2 at x = 2, t = 0
  Expr f("-(1 + 0.1*cos(100*t))*x^2");
  CHECK(f.eval(2, 0, 0) == doctest::Approx(-4.4).epsilon(1e-15));
}

TEST_CASE("expr: dependency flags and zero detection") {
  CHECK(Expr("x^2/(1+t^2)").depends_on_t());
  CHECK(Expr("x^2/(1+t^2)").depends_on_space());
  CHECK_FALSE(Expr("cos(3)").depends_on_t());
  CHECK_FALSE(Expr("t*2").depends_on_space());
  CHECK(Expr("0").is_zero());
  CHECK(Expr().is_zero());
  CHECK_FALSE(Expr("x-x").depends_on_t());
}

TEST_CASE("expr: canonical form ignores spelling") {
  CHECK(Expr("x^2").canonical() == Expr(" x ** 2 ").canonical());
  CHECK(Expr("-(0.1)*x^2").canonical() == Expr("-0.1*x^2").canonical());
  CHECK(Expr("x^2").canonical() != Expr("x^3").canonical());
  CHECK(Expr("2*x").scaled(2.0).eval(1.5, 0, 0) == 6.0);
  CHECK(Expr::constant(2.5).eval(9, 9, 9) == 2.5);
}

TEST_CASE("expr: vectorised evaluation matches scalar") {
  Expr e("exp(-(x-3)^2/2) + y*t");
  std::vector<double> xs{-1, 0, 1, 2.5}, ys{0.5, 1, 1.5, 2}, out(4);
  e.eval_many(xs, ys, 0.7, out);
  for (std::size_t i = 0; i < xs.size(); ++i) CHECK(out[i] == e.eval(xs[i], ys[i], 0.7));
  std::vector<double> out1(4);
  Expr("x*x").eval_many(xs, {}, 0.0, out1);
  CHECK(out1[3] == 6.25);
}

TEST_CASE("expr: malformed input is rejected") {
  CHECK_THROWS_AS(Expr("1 +"), ExprError);
  CHECK_THROWS_AS(Expr("sin(x"), ExprError);
  CHECK_THROWS_AS(Expr("foo(x)"), ExprError);
  CHECK_THROWS_AS(Expr("z"), ExprError);
  CHECK_THROWS_AS(Expr("2 $ 3"), ExprError);
  CHECK_THROWS_AS(Expr(""), ExprError);
}
