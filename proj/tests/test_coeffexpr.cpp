#include <doctest.h>

#include <cmath>

#include "expr_fuzz.hpp"
#include "spider/coeffexpr.hpp"
#include "spider/error.hpp"

using namespace spider;
using namespace spider::expr;

TEST_CASE("parse builds the expected tree") {
    auto e = parse("0.5 + 0.1*tanh(l)");
    auto want = binary(Op::add, number(0.5), binary(Op::mul, number(0.1), call(Fn::tanh, {variable('l')})));
    CHECK(equal(e, want));
}

TEST_CASE("precedence and associativity") {
    CHECK(evaluate(parse("2^3^2"), 0, 0, 0) == 512.0);
    CHECK(evaluate(parse("-2^2"), 0, 0, 0) == -4.0);
    CHECK(evaluate(parse("2^-1"), 0, 0, 0) == 0.5);
    CHECK(evaluate(parse("8 - 3 - 2"), 0, 0, 0) == 3.0);
    CHECK(evaluate(parse("8 / 4 / 2"), 0, 0, 0) == 1.0);
    CHECK(evaluate(parse("1 + 2*3"), 0, 0, 0) == 7.0);
    CHECK(evaluate(parse("-3*-2"), 0, 0, 0) == 6.0);
    CHECK(evaluate(parse("2*3^2"), 0, 0, 0) == 18.0);
    CHECK(evaluate(parse("1 \xE2\x88\x92 3"), 0, 0, 0) == -2.0);
    CHECK(evaluate(parse("1.5e1 + .5"), 0, 0, 0) == 15.5);
}

TEST_CASE("evaluate examples") {
    CHECK(evaluate(parse("t + x*l"), 1, 2, 3) == 7.0);
    CHECK(evaluate(parse("clamp(l, 0, 1)"), 0, 0, 5) == 1.0);
    CHECK(evaluate(parse("exp(-l)"), 0, 0, 0) == 1.0);
    CHECK(evaluate(parse("min(x, 2) + max(t, 3) + abs(-l) + sqrt(4) + cos(0) + sin(0)"), 1, 5, 2) == 10.0);
}

TEST_CASE("evaluation errors") {
    CHECK_THROWS_AS(evaluate(parse("1/x"), 0, 0, 0), EvalError);
    CHECK_THROWS_AS(evaluate(parse("sqrt(x - 1)"), 0, 0, 0), EvalError);
    CHECK_THROWS_AS(evaluate(parse("exp(1000)"), 0, 0, 0), EvalError);
    CHECK_THROWS_AS(evaluate(parse("(0-1)^0.5"), 0, 0, 0), EvalError);
    Program p(parse("1/x"));
    CHECK_THROWS_AS(p(0, 0, 0), EvalError);
    CHECK(p(0, 4, 0) == 0.25);
}

TEST_CASE("syntax errors carry offset and expected set") {
    try {
        parse("1 +");
        FAIL("no error");
    } catch (const ParseError& e) {
        CHECK(e.offset() == 3);
        CHECK(std::find(e.expected().begin(), e.expected().end(), "number") != e.expected().end());
    }
    auto offset_of = [](const std::string& s) -> std::size_t {
        try {
            parse(s);
        } catch (const ParseError& e) {
            return e.offset();
        }
        return no_offset;
    };
    CHECK(offset_of("2 * foo(x)") == 4);
    CHECK(offset_of("min(1)") == 0);
    CHECK(offset_of("(1 + 2") == 6);
    CHECK(offset_of("1 2") == 2);
    CHECK(offset_of("sin 1") == 4);
}

TEST_CASE("compiled program agrees with tree evaluation") {
    fuzz::AstGen gen(77);
    int compared = 0;
    for (int k = 0; k < 2000; ++k) {
        auto e = gen.gen(5);
        Program p(e);
        for (double x : {0.3, 1.7}) {
            double a = 0, b = 0;
            bool ea = false, eb = false;
            try {
                a = evaluate(e, 0.4, x, 2.5);
            } catch (const EvalError&) {
                ea = true;
            }
            try {
                b = p(0.4, x, 2.5);
            } catch (const EvalError&) {
                eb = true;
            }
            CHECK(ea == eb);
            if (!ea && !eb) {
                CHECK(a == b);
                ++compared;
            }
        }
    }
    CHECK(compared > 1000);
}

TEST_CASE("fuzz round trip") {
    fuzz::AstGen gen(2024);
    for (int k = 0; k < 10000; ++k) {
        auto e = gen.gen(6);
        const std::string text = to_string(e);
        auto back = parse(text);
        if (!equal(e, back)) FAIL("round trip failed for " << text);
    }
}

TEST_CASE("malformed corpus yields positioned errors") {
    for (const auto& src : fuzz::malformed_corpus()) {
        try {
            parse(src);
            FAIL("accepted: " << src.substr(0, 40));
        } catch (const ParseError& e) {
            CHECK(e.offset() <= src.size());
        }
    }
}

TEST_CASE("alpha spec") {
    AlphaSpec a({"1+l", "1", "1"}, AlphaMode::renormalize);
    auto v0 = a(0, 0);
    for (double w : v0) CHECK(w == doctest::Approx(1.0 / 3));
    auto v1 = a(0, 1);
    CHECK(v1[0] == 0.5);
    CHECK(v1[1] == 0.25);
    CHECK(v1[2] == 0.25);
    CHECK_THROWS_AS(AlphaSpec({"x", "1"}, AlphaMode::exact), ConfigError);
    AlphaSpec neg({"1 - l", "1"}, AlphaMode::renormalize);
    CHECK_THROWS_AS(neg(0, 2), EvalError);
    auto f = a.field();
    CHECK(f(0, 1) == v1);
}

TEST_CASE("renormalized alpha sums to one") {
    AlphaSpec a({"1 + 0.5*sin(3*t) + l^2", "2 + tanh(l)", "0.1 + exp(-l)"}, AlphaMode::renormalize);
    PathStream s(1, 1);
    for (int k = 0; k < 1000; ++k) {
        auto v = a(s.uniform(2 * k), 10 * s.uniform(2 * k + 1));
        double sum = 0;
        for (double w : v) sum += w;
        CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
}

TEST_CASE("build coefficient set") {
    auto j = json::parse(R"({
        "edges": 2, "drift": "0", "sigma": ["1", "1"],
        "alpha": {"mode": "exact", "weights": ["0.5", "0.5"]},
        "bounds": {"a_lower": 0.4, "sigma_lower": 0.5, "b_bound": 1, "sigma_bound": 1, "alpha_lip": 1}})");
    auto c = build_coefficient_set(j);
    CHECK(c.edges == 2);
    CHECK(c.report->pass);
    CHECK(c.alpha(0.3, 2.0) == std::vector<double>{0.5, 0.5});

    auto j3 = json::parse(R"({
        "edges": 3, "drift": "0", "sigma": "1",
        "alpha": {"mode": "renormalize", "weights": ["1+l", "1", "1"]},
        "bounds": {"a_lower": 0.1, "sigma_lower": 0.5, "b_bound": 1, "sigma_bound": 1, "alpha_lip": 1}})");
    auto c3 = build_coefficient_set(j3);
    CHECK(c3.alpha(0, 1) == std::vector<double>{0.5, 0.25, 0.25});
}

TEST_CASE("build coefficient set errors") {
    auto base = json::parse(R"({
        "edges": 2, "drift": "0", "sigma": ["1", "1 +"],
        "alpha": {"mode": "exact", "weights": ["0.5", "0.5"]},
        "bounds": {"a_lower": 0.4, "sigma_lower": 0.5, "b_bound": 1, "sigma_bound": 1, "alpha_lip": 1}})");
    try {
        build_coefficient_set(base, "/coefficients");
        FAIL("accepted");
    } catch (const ConfigError& e) {
        CHECK(e.pointer() == "/coefficients/sigma/1");
        CHECK(e.inner_offset() == 3);
    }
    auto extra = base;
    extra["sigma"] = "1";
    extra["colour"] = "red";
    try {
        build_coefficient_set(extra);
        FAIL("accepted");
    } catch (const ConfigError& e) {
        CHECK(e.pointer() == "/colour");
    }
    auto low = base;
    low["sigma"] = "1";
    low["alpha"]["weights"] = {"0.9", "0.1"};
    CHECK_THROWS_AS(build_coefficient_set(low), ConfigError);
    auto renorm = base;
    renorm["sigma"] = "1";
    renorm["alpha"] = json::parse(R"({"mode": "renormalize", "weights": ["1+l", "0.1"]})");
    CHECK_THROWS_AS(build_coefficient_set(renorm), ConfigError);
}
