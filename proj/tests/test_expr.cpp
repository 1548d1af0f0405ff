// Expression language: parsing, evaluation, differentiation, simplification.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "bohmlab/expr.hpp"

#include <cmath>

using namespace bohmlab;

namespace {
double ev(const std::string& text, const Bindings& b = {},
          const std::set<std::string>& params = {}) {
    return parse_expr(text, params).eval(b);
}
} // namespace

TEST_CASE("numeric literals and arithmetic") {
    CHECK(ev("1 + 2*3") == doctest::Approx(7.0));
    CHECK(ev("(1 + 2)*3") == doctest::Approx(9.0));
    CHECK(ev("7/2") == doctest::Approx(3.5));
    CHECK(ev("2^10") == doctest::Approx(1024.0));
    CHECK(ev("1e-3 + 2.5E2") == doctest::Approx(250.001));
    CHECK(ev("-3 - -4") == doctest::Approx(1.0));
}

TEST_CASE("power is right-associative and binds above unary minus") {
    CHECK(ev("2^3^2") == doctest::Approx(512.0));
    CHECK(ev("-2^2") == doctest::Approx(-4.0));
    CHECK(ev("(-2)^2") == doctest::Approx(4.0));
    CHECK(ev("2^-1") == doctest::Approx(0.5));
}

TEST_CASE("builtin variables and constants") {
    CHECK(ev("pi") == doctest::Approx(M_PI));
    CHECK(ev("x^2 + t", {{"x", 3.0}, {"t", 0.5}}) == doctest::Approx(9.5));
    CHECK(ev("hbar*m", {{"hbar", 2.0}, {"m", 3.0}}) == doctest::Approx(6.0));
}

TEST_CASE("declared parameters are accepted, unknown names rejected") {
    CHECK(ev("alpha*x", {{"alpha", 2.0}, {"x", 4.0}}, {"alpha"}) == doctest::Approx(8.0));
    CHECK_THROWS_AS(parse_expr("alpha*x"), ParseError);
}

TEST_CASE("parse errors carry a position") {
    try {
        parse_expr("1 + * 2");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.position == 4);
    }
    CHECK_THROWS_AS(parse_expr("(1 + 2"), ParseError);
    CHECK_THROWS_AS(parse_expr("sin()"), ParseError);
    CHECK_THROWS_AS(parse_expr("1 2"), ParseError);
    CHECK_THROWS_AS(parse_expr(""), ParseError);
}

TEST_CASE("functions evaluate correctly") {
    CHECK(ev("sin(pi/2)") == doctest::Approx(1.0));
    CHECK(ev("cos(0)") == doctest::Approx(1.0));
    CHECK(ev("tan(pi/4)") == doctest::Approx(1.0));
    CHECK(ev("arctan(1)") == doctest::Approx(M_PI / 4));
    CHECK(ev("exp(log(5))") == doctest::Approx(5.0));
    CHECK(ev("sqrt(16)") == doctest::Approx(4.0));
    CHECK(ev("sinh(1)") == doctest::Approx(std::sinh(1.0)));
    CHECK(ev("cosh(1)") == doctest::Approx(std::cosh(1.0)));
    CHECK(ev("abs(-2.5)") == doctest::Approx(2.5));
}

TEST_CASE("evaluation domain errors") {
    CHECK_THROWS_AS(ev("1/0"), DomainError);
    CHECK_THROWS_AS(ev("sqrt(-1)"), DomainError);
    CHECK_THROWS_AS(ev("log(0)"), DomainError);
    CHECK_THROWS_AS(ev("log(-2)"), DomainError);
    CHECK_THROWS_AS(ev("0^(-1)"), DomainError);
    CHECK_THROWS_AS(ev("(-2)^0.5"), DomainError);
    CHECK(ev("(-2)^3") == doctest::Approx(-8.0));
}

TEST_CASE("unbound variable raises") {
    Expr e = parse_expr("x + t");
    CHECK_THROWS_AS(e.eval({{"x", 1.0}}), ExprError);
}

TEST_CASE("differentiation of core rules") {
    auto d = [](const std::string& s, const std::string& v, double x) {
        Bindings b{{"x", x}, {"t", 0.3}};
        return parse_expr(s).diff(v).eval(b);
    };
    CHECK(d("x^3", "x", 2.0) == doctest::Approx(12.0));
    CHECK(d("sin(x)", "x", 0.7) == doctest::Approx(std::cos(0.7)));
    CHECK(d("exp(2*x)", "x", 0.4) == doctest::Approx(2 * std::exp(0.8)));
    CHECK(d("log(x)", "x", 3.0) == doctest::Approx(1.0 / 3.0));
    CHECK(d("x*t", "t", 5.0) == doctest::Approx(5.0));
    CHECK(d("sqrt(x)", "x", 4.0) == doctest::Approx(0.25));
    CHECK(d("tan(x)", "x", 0.3) == doctest::Approx(1.0 / std::pow(std::cos(0.3), 2)));
    CHECK(d("arctan(x)", "x", 2.0) == doctest::Approx(0.2));
    CHECK(d("sinh(x)", "x", 0.5) == doctest::Approx(std::cosh(0.5)));
    CHECK(d("cosh(x)", "x", 0.5) == doctest::Approx(std::sinh(0.5)));
    CHECK(d("x^x", "x", 2.0) == doctest::Approx(4.0 * (std::log(2.0) + 1.0)));
}

TEST_CASE("differentiation against central differences on a composite") {
    Expr e = parse_expr("exp(-x^2/2)*sin(3*x + t) / (1 + x^2)");
    Expr de = e.diff("x");
    for (double x : {-1.3, -0.2, 0.7, 2.1}) {
        const double h = 1e-6;
        const double fd = (e.eval({{"x", x + h}, {"t", 0.4}}) -
                           e.eval({{"x", x - h}, {"t", 0.4}})) / (2 * h);
        CHECK(de.eval({{"x", x}, {"t", 0.4}}) == doctest::Approx(fd).epsilon(1e-7));
    }
}

TEST_CASE("airy nodes differentiate through the ODE") {
    // d/dy Ai = Ai', d/dy Ai' = y Ai.
    Expr a = airy_ai(Expr::var("x"));
    Expr ap = a.diff("x");
    Expr app = ap.diff("x");
    const double y = 1.3;
    CHECK(ap.eval({{"x", y}}) == doctest::Approx(-0.12033386559018358).epsilon(1e-10));
    CHECK(app.eval({{"x", y}}) == doctest::Approx(y * a.eval({{"x", y}})).epsilon(1e-12));

    // Chain rule through a composite argument.
    Expr comp = airy_ai(parse_expr("x^2 - t"));
    const double fd_h = 1e-6;
    Bindings at{{"x", 0.9}, {"t", 0.2}};
    Bindings hi{{"x", 0.9 + fd_h}, {"t", 0.2}}, lo{{"x", 0.9 - fd_h}, {"t", 0.2}};
    CHECK(comp.diff("x").eval(at) ==
          doctest::Approx((comp.eval(hi) - comp.eval(lo)) / (2 * fd_h)).epsilon(1e-7));
}

TEST_CASE("simplification removes trivial structure") {
    std::vector<std::string> notes;
    Expr e = parse_expr("0*x + 1*t + x^1 + 0 + (2+3)");
    Expr s = e.simplified(&notes);
    CHECK(s.str() == "t+x+5");
    CHECK(!notes.empty());

    CHECK(parse_expr("x - x + 0*t").simplified().is_zero());
    CHECK(parse_expr("x/x").simplified().str() == "1");
    CHECK(parse_expr("2^3").simplified().number_value() == doctest::Approx(8.0));
    CHECK(parse_expr("-(-x)").simplified().str() == "x");
}

TEST_CASE("simplification preserves value on random points") {
    Expr e = parse_expr("(x + 0)*(1*t) + sin(x)*0 + x^2*x^3 / x");
    Expr s = e.simplified();
    for (double x : {0.5, 1.7, -2.2}) {
        Bindings b{{"x", x}, {"t", 0.9}};
        CHECK(s.eval(b) == doctest::Approx(e.eval(b)).epsilon(1e-12));
    }
}

TEST_CASE("printer round-trips through the parser") {
    for (const std::string& text :
         {"x^2 + 3*x - 1", "sin(x)*exp(-t)", "(x + t)^(1/3)", "-x^2",
          "2^x^2", "abs(x - 1)/(x + 2)", "sqrt(1 + x^2)"}) {
        Expr e = parse_expr(text);
        Expr back = parse_expr(e.str());
        for (double x : {0.3, 1.1}) {
            Bindings b{{"x", x}, {"t", 0.7}};
            CHECK(back.eval(b) == doctest::Approx(e.eval(b)).epsilon(1e-12));
        }
        Expr d = e.diff("x");
        Expr dback = parse_expr(d.str());
        Bindings b{{"x", 0.6}, {"t", 0.7}};
        CHECK(dback.eval(b) == doctest::Approx(d.eval(b)).epsilon(1e-12));
    }
}

TEST_CASE("substitution and free variables") {
    Expr e = parse_expr("a*x^2 + b", {"a", "b"});
    CHECK(e.free_vars() == std::set<std::string>{"a", "b", "x"});
    Expr bound = e.substituted("a", Expr(2.0)).substituted("b", parse_expr("t"));
    CHECK(bound.free_vars() == std::set<std::string>{"t", "x"});
    CHECK(bound.eval({{"x", 3.0}, {"t", 1.0}}) == doctest::Approx(19.0));
}

TEST_CASE("compiled expressions match tree evaluation") {
    Expr e = parse_expr("k*sin(x - w*t)*exp(-x^2/4)", {"k", "w"});
    CompiledExpr c(e, {{"k", 2.0}, {"w", 0.5}});
    for (double x : {-3.0, -0.5, 0.0, 1.8}) {
        for (double t : {0.1, 1.4}) {
            Bindings b{{"x", x}, {"t", t}, {"k", 2.0}, {"w", 0.5}};
            CHECK(c(x, t) == doctest::Approx(e.eval(b)).epsilon(1e-14));
        }
    }
}

TEST_CASE("compiled expression requires all parameters frozen") {
    Expr e = parse_expr("k*x", {"k"});
    CHECK_THROWS_AS(CompiledExpr(e, {}), ExprError);
}
