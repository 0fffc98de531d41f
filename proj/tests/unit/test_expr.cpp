#include <cctype>
#include <cmath>
#include <random>
#include <string>

#include "doctest.h"
#include "expr_corpus.hpp"
#include "nslab/cli/expr.hpp"

using namespace nslab::cli;

namespace {

const std::vector<std::string> kVars = system_variables(1);

double ev(const std::string& text, std::map<std::string, double> b = {}) {
    return eval_expr(parse_expr(text, kVars), b);
}

std::size_t error_offset(const std::string& text, const std::vector<std::string>& vars = kVars) {
    try {
        parse_expr(text, vars);
    } catch (const ParseError& e) {
        return e.offset();
    }
    FAIL("no parse error for '" << text << "'");
    return 0;
}

// Start of the number or identifier that ends just before `at`.
std::size_t token_start(const std::string& s, std::size_t at) {
    auto word = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_'; };
    std::size_t i = at;
    while (i > 0) {
        const char c = s[i - 1];
        const bool exp_sign = (c == '+' || c == '-') && i >= 2 && (s[i - 2] == 'e' || s[i - 2] == 'E') && i >= 3 &&
                              (std::isdigit(static_cast<unsigned char>(s[i - 3])) || s[i - 3] == '.');
        if (!word(c) && !exp_sign) break;
        --i;
    }
    return i;
}

}  // namespace

TEST_CASE("evaluation examples") {
    CHECK(ev("0.3 + u^3", {{"u", -0.5}}) == doctest::Approx(0.175).epsilon(1e-15));
    CHECK(ev("2*x1 + sin(0)", {{"x1", 3.0}}) == 6.0);
    CHECK(ev("-0.5 - u", {{"u", -1.0}}) == 0.5);
    CHECK(ev("x^2", {{"x", -3.0}}) == 9.0);
    CHECK_THROWS_AS(ev("1/ y", {{"y", 0.0}}), NonFiniteError);
    CHECK(ev("u^3", {{"u", -0.5}}) == -0.125);
    CHECK(ev("2^-2") == 0.25);
    CHECK(ev("2^0.5") == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
    CHECK(ev("abs(-3) + exp(0) + cos(0) + tanh(0)") == 5.0);
}

TEST_CASE("precedence and associativity") {
    CHECK(ev("-2^2") == -4.0);
    CHECK(ev("2^3^2") == 512.0);
    CHECK(ev("2-3-4") == -5.0);
    CHECK(ev("8/4/2") == 1.0);
    CHECK(ev("1 + 2*3") == 7.0);
    CHECK(ev("(1 + 2)*3") == 9.0);
    CHECK(ev("--3") == 3.0);
    CHECK(ev("2*-3") == -6.0);
    CHECK(ev("1.5e2 + 2E-1") == doctest::Approx(150.2).epsilon(1e-15));
}

TEST_CASE("parse errors carry offsets") {
    try {
        parse_expr("u +", kVars);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.offset() == 3);
        CHECK(e.expected() == "operand");
    }
    CHECK(error_offset("z + 1") == 0);
    CHECK(error_offset("(u + 1") == 6);
    CHECK(error_offset("u 1") == 2);
    CHECK(error_offset("u + 1)") == 5);
    CHECK(error_offset("sign(u)") == 0);
    CHECK(error_offset("sin u") == 4);
    CHECK(error_offset("1e") == 2);
    CHECK(error_offset("") == 0);
    CHECK(error_offset("x2", system_variables(1)) == 0);
    CHECK_NOTHROW(parse_expr("x1 + x2", system_variables(2)));
    CHECK(error_offset("x + 1", system_variables(2)) == 0);
}

TEST_CASE("unbound variables") {
    const Expr e = parse_expr("x + y", kVars);
    CHECK_THROWS_AS(eval_expr(e, {{"x", 1.0}}), EvalError);
    CHECK(eval_expr(e, {{"x", 1.0}, {"y", 2.0}}) == 3.0);
    std::vector<double> too_short{1.0};
    CHECK_THROWS_AS(e(too_short), EvalError);
}

TEST_CASE("printing") {
    const Expr e = parse_expr("0.3 + u^3", kVars);
    CHECK(print_expr(e) == "(0.29999999999999999 + (u^3))");
    CHECK(print_expr(parse_expr("-x", kVars)) == "(-x)");
}

TEST_CASE("property: round trip on a generated corpus") {
    nslab::test::ExprGenerator gen(31337);
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> B(-0.9, 0.9);
    for (int i = 0; i < 200; ++i) {
        const std::string text = gen.expr(4);
        CAPTURE(text);
        const Expr a = parse_expr(text, kVars);
        const std::string printed = print_expr(a);
        const Expr b = parse_expr(printed, kVars);
        CHECK(same_tree(a.root(), b.root()));
        CHECK(print_expr(b) == printed);
        const double slots[] = {B(rng), B(rng), B(rng)};
        double va = 0.0, vb = 0.0;
        bool fa = false, fb = false;
        try {
            va = a(slots);
        } catch (const NonFiniteError&) {
            fa = true;
        }
        try {
            vb = b(slots);
        } catch (const NonFiniteError&) {
            fb = true;
        }
        CHECK(fa == fb);
        if (!fa) CHECK(va == vb);
    }
}

TEST_CASE("property: mutated expressions report the first error") {
    nslab::test::ExprGenerator gen(2718);
    std::mt19937_64 rng(3);
    const char* junk[] = {"$", "@", ")", "*", "^", ",", "#"};
    for (int i = 0; i < 200; ++i) {
        const std::string good = gen.expr(3);
        const std::size_t at = std::uniform_int_distribution<std::size_t>(0, good.size())(rng);
        const std::string ins = junk[i % 7];
        std::string bad = good;
        bad.insert(at, ins);
        CAPTURE(bad);
        std::size_t off = 0;
        bool threw = false;
        try {
            parse_expr(bad, kVars);
        } catch (const ParseError& e) {
            threw = true;
            off = e.offset();
        }
        // '*' or '^' can land where it still forms a valid expression.
        if (!threw) {
            CHECK((ins == "*" || ins == "^"));
            continue;
        }
        // A valid expression has only valid prefixes, so nothing fails before the
        // token the insertion lands in.
        const std::size_t tok = token_start(bad, at);
        CHECK(off >= tok);
        if (ins != "*" && ins != "^" && ins != ")") CHECK(off <= at);
    }
    for (int i = 0; i < 100; ++i) {
        const std::string good = gen.expr(3);
        const std::string cut = good + " " + "+-*/"[i % 4];
        CHECK(error_offset(cut) == cut.size());
    }
}
