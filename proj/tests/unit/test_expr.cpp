#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "powersim/errors.hpp"
#include "powersim/expr.hpp"
#include "powersim/rng.hpp"

using namespace powersim;

namespace {

DataTable make_table(std::vector<std::pair<std::string, std::vector<double>>>
                         columns) {
  DataTable t;
  for (auto& [name, values] : columns) t.add_column(name, std::move(values));
  return t;
}

}  // namespace

TEST_CASE("documented examples evaluate correctly") {
  CHECK(parse_expression("2*(x1 + x2)").evaluate({{"x1", 1}, {"x2", 2}}) ==
        doctest::Approx(6.0));
  CHECK(parse_expression("-x1").evaluate({{"x1", 3}}) == doctest::Approx(-3.0));
  CHECK(parse_expression("0.1*I(g==1)").evaluate({{"g", 1}}) ==
        doctest::Approx(0.1));
  CHECK(parse_expression("0.1*I(g==1)").evaluate({{"g", 0}}) ==
        doctest::Approx(0.0));
  CHECK(parse_expression("0.55*a + 0.31*b + 0.2*b*c")
            .evaluate({{"a", 0}, {"b", 0}, {"c", 7}}) == doctest::Approx(0.0));
}

TEST_CASE("syntax errors carry positions") {
  CHECK_THROWS_AS(parse_expression("0.3*x1 + 0.3*x2 ++"), ParseError);
  CHECK_THROWS_AS(parse_expression(""), ParseError);
  CHECK_THROWS_AS(parse_expression("  "), ParseError);
  CHECK_THROWS_AS(parse_expression("2*(x1"), ParseError);
  CHECK_THROWS_AS(parse_expression("sin(x)"), ParseError);  // unknown function
  CHECK_THROWS_AS(parse_expression("1..2"), ParseError);
  try {
    parse_expression("x1 + @");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.position() == 5);
  }
}

TEST_CASE("precedence: power over unary minus over product over sum") {
  CHECK(parse_expression("-2^2").evaluate({}) == doctest::Approx(-4.0));
  CHECK(parse_expression("2^-1").evaluate({}) == doctest::Approx(0.5));
  CHECK(parse_expression("2^3^2").evaluate({}) == doctest::Approx(512.0));
  CHECK(parse_expression("1 + 2*3").evaluate({}) == doctest::Approx(7.0));
  CHECK(parse_expression("(1 + 2)*3").evaluate({}) == doctest::Approx(9.0));
  CHECK(parse_expression("6/3/2").evaluate({}) == doctest::Approx(1.0));
  CHECK(parse_expression("1 - 2 - 3").evaluate({}) == doctest::Approx(-4.0));
}

TEST_CASE("functions and domain errors") {
  CHECK(parse_expression("log(exp(2))").evaluate({}) == doctest::Approx(2.0));
  CHECK(parse_expression("sqrt(abs(-9))").evaluate({}) == doctest::Approx(3.0));
  CHECK_THROWS_AS(parse_expression("log(x)").evaluate({{"x", 0.0}}), Error);
  CHECK_THROWS_AS(parse_expression("log(x)").evaluate({{"x", -1.0}}), Error);
  CHECK_THROWS_AS(parse_expression("sqrt(x)").evaluate({{"x", -1.0}}), Error);
}

TEST_CASE("unbound variables are errors, never silent zeros") {
  const Expr e = parse_expression("x1 + x2");
  CHECK_THROWS_WITH_AS(e.evaluate({{"x1", 1.0}}),
                       "expr: unbound variable 'x2'", Error);
}

TEST_CASE("indicator with != and negative code") {
  const Expr e = parse_expression("I(g != -2)");
  CHECK(e.evaluate({{"g", -2}}) == 0.0);
  CHECK(e.evaluate({{"g", 3}}) == 1.0);
}

TEST_CASE("evaluate_batch matches evaluate row by row") {
  const Expr e = parse_expression("2*a + b*b - I(c==1)");
  const DataTable t = make_table({{"a", {1, 2, 3}},
                                  {"b", {0.5, -1, 2}},
                                  {"c", {1, 0, 1}}});
  const std::vector<double> batch = e.evaluate_batch(t);
  REQUIRE(batch.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    const double single = e.evaluate(
        {{"a", t.at(i, 0)}, {"b", t.at(i, 1)}, {"c", t.at(i, 2)}});
    CHECK(batch[i] == doctest::Approx(single).epsilon(1e-15));
  }
}

TEST_CASE("evaluate_batch examples") {
  CHECK(parse_expression("1.5").evaluate_batch(make_table({{"x", {0, 0, 0, 0}}}))
        == std::vector<double>{1.5, 1.5, 1.5, 1.5});
  CHECK(parse_expression("x1").evaluate_batch(make_table({{"x1", {-1, 0, 2}}}))
        == std::vector<double>{-1, 0, 2});
  CHECK(parse_expression("x1*x2").evaluate_batch(
            make_table({{"x1", {1, 3}}, {"x2", {2, 4}}})) ==
        std::vector<double>{2, 12});
}

TEST_CASE("evaluate_batch attaches the row index to errors") {
  const Expr e = parse_expression("log(x)");
  const DataTable t = make_table({{"x", {1.0, 2.0, -1.0}}});
  try {
    e.evaluate_batch(t);
    FAIL("expected Error");
  } catch (const Error& err) {
    CHECK(std::string(err.what()).find("row 2") != std::string::npos);
  }
}

TEST_CASE("continuity under small perturbations") {
  const Expr e = parse_expression("2*a + exp(b/4) - a*b");
  RandomStream rng(5);
  for (int i = 0; i < 50; ++i) {
    const double a = rng.normal();
    const double b = rng.normal();
    const double base = e.evaluate({{"a", a}, {"b", b}});
    const double shifted = e.evaluate({{"a", a + 1e-9}, {"b", b}});
    CHECK(std::fabs(shifted - base) <= 1e-6);
  }
}

namespace {

// Random well-formed expression text over variables a, b.
std::string random_expr(RandomStream& rng, int depth) {
  const auto pick = rng.uniform_index(depth <= 0 ? 3 : 8);
  switch (pick) {
    case 0:
      return std::to_string(1 + static_cast<int>(rng.uniform_index(9)));
    case 1:
      return "a";
    case 2:
      return "b";
    case 3:
      return "(" + random_expr(rng, depth - 1) + " + " +
             random_expr(rng, depth - 1) + ")";
    case 4:
      return "(" + random_expr(rng, depth - 1) + " - " +
             random_expr(rng, depth - 1) + ")";
    case 5:
      return "(" + random_expr(rng, depth - 1) + " * " +
             random_expr(rng, depth - 1) + ")";
    case 6:
      return "-" + random_expr(rng, depth - 1);
    case 7:
      return "abs(" + random_expr(rng, depth - 1) + ")";
  }
  return "1";
}

}  // namespace

TEST_CASE("print-parse round trip preserves structure and value") {
  RandomStream rng(17);
  for (int i = 0; i < 300; ++i) {
    const Expr e = parse_expression(random_expr(rng, 4));
    const std::string printed = e.to_string();
    const Expr reparsed = parse_expression(printed);
    CHECK(reparsed.to_string() == printed);  // structural fixed point
    const double a = rng.normal();
    const double b = rng.normal();
    const double v1 = e.evaluate({{"a", a}, {"b", b}});
    const double v2 = reparsed.evaluate({{"a", a}, {"b", b}});
    CHECK(v1 == doctest::Approx(v2).epsilon(1e-15));
  }
}

TEST_CASE("term_count counts top-level additive terms") {
  CHECK(parse_expression("0.3*x1 + 0.3*x2").term_count() == 2);
  CHECK(parse_expression("1 + 2*x - x*y").term_count() == 3);
  CHECK(parse_expression("2*(x1 + x2)").term_count() == 1);
  CHECK(parse_expression("0").term_count() == 1);
}

TEST_CASE("variables are collected sorted and unique") {
  const Expr e = parse_expression("x2 + x1*x2 + I(g==1)");
  CHECK(e.variables() == std::vector<std::string>{"g", "x1", "x2"});
}
