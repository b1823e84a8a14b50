#include "pucci/expression.hpp"

#include <doctest.h>

#include <random>

using namespace pucci;

namespace {

double eval1(const std::string& text, double x) { return Expression::parse(text, 1)(Point<1>(x)); }

double eval2(const std::string& text, double x1, double x2) { return Expression::parse(text, 2)(Point<2>(x1, x2)); }

}  // namespace

TEST_CASE("precedence and associativity") {
  CHECK(eval1("1 + 2 * 3", 0.0) == 7.0);
  CHECK(eval1("(1 + 2) * 3", 0.0) == 9.0);
  CHECK(eval1("-2^2", 0.0) == -4.0);
  CHECK(eval1("2^3^2", 0.0) == 512.0);
  CHECK(eval1("2^-1", 0.0) == 0.5);
  CHECK(eval1("8 / 4 / 2", 0.0) == 1.0);
  CHECK(eval1("1 - 2 - 3", 0.0) == -4.0);
  CHECK(eval1("2 * pi", 0.0) == doctest::Approx(2.0 * kPi));
  CHECK(eval1("1.5e-1 * 2", 0.0) == doctest::Approx(0.3));
}

TEST_CASE("coordinates, norms and balls") {
  CHECK(eval1("x", -0.5) == -0.5);
  CHECK(eval1("x1 + |x|", -0.5) == 0.0);
  CHECK(eval1("r^0.5", 0.25) == doctest::Approx(0.5));
  CHECK(eval2("x1 * x2", 2.0, 3.0) == 6.0);
  CHECK(eval2("r", 3.0, 4.0) == doctest::Approx(5.0));
  CHECK(eval2("ball(0.5, 0, 0.25)", 0.6, 0.1) == 1.0);
  CHECK(eval2("ball(0.5, 0, 0.25)", 0.5, 0.25) == 0.0);  // open ball
  CHECK(eval1("1 - ball(0, 1)", 0.3) == 0.0);
  CHECK(eval1("(1 - x^2)^2 * ball(0, 1)", 0.5) == doctest::Approx(0.5625));
}

TEST_CASE("kinks are origin-centred ball radii") {
  const auto e = Expression::parse("ball(0, 0, 0.7) + 2 * ball(0.3, 0, 0.1) - ball(0, 0, 1.2)", 2);
  std::vector<double> k = e.kinks();
  std::sort(k.begin(), k.end());
  REQUIRE(k.size() == 2);
  CHECK(k[0] == 0.7);
  CHECK(k[1] == 1.2);
}

TEST_CASE("syntax errors report a position") {
  for (const char* bad : {"1 +", "(x", "x3", "x2", "foo(1)", "|x", "x ^ x", "ball(x, 1)", "1 2"}) {
    CAPTURE(bad);
    try {
      Expression::parse(bad, 1);
      FAIL("expected a parse error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Configuration);
      CHECK(std::string(e.what()).find("position") != std::string::npos);
    }
  }
  CHECK_THROWS_AS(Expression::parse("x", 3), Error);
}

TEST_CASE("range encloses sampled values") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (const char* text : {"x1 * x2 - r^2", "|x1 - 0.2| / (1 + x2^2)", "(1 - r^2)^3 + ball(0, 0, 0.5)", "-x1^3 + 2 * x2"}) {
    const auto e = Expression::parse(text, 2);
    for (int trial = 0; trial < 50; ++trial) {
      double a = U(rng), b = U(rng), c = U(rng), d = U(rng);
      const Point<2> lo(std::min(a, b), std::min(c, d)), hi(std::max(a, b), std::max(c, d));
      const auto [rlo, rhi] = e.range<2>(lo, hi);
      std::uniform_real_distribution<double> X(lo[0], hi[0]), Y(lo[1], hi[1]);
      for (int k = 0; k < 20; ++k) {
        const double v = e(Point<2>(X(rng), Y(rng)));
        CHECK(v >= rlo);
        CHECK(v <= rhi);
      }
    }
  }
}

TEST_CASE("expression fields") {
  const auto e = Expression::parse("1 - x^2", 1);
  const auto f = expression_field<1>(e, 2.0, 0.5);
  CHECK(f(Point<1>(0.5)) == doctest::Approx(0.75));
  CHECK(f(Point<1>(3.0)) == 0.5);
  CHECK(f.sup_bound >= 3.0);  // |1 - x^2| reaches 3 at |x| = 2
  CHECK(std::find(f.kinks.begin(), f.kinks.end(), 2.0) != f.kinks.end());
  CHECK_THROWS_AS(expression_field<1>(e, kInf, 0.0), Error);
  CHECK_THROWS_AS(expression_field<1>(Expression::parse("1 / x", 1), 1.0, 0.0), Error);
}
