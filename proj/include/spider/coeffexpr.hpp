#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "spider/json_reader.hpp"
#include "spider/network.hpp"

namespace spider::expr {

enum class Op { num, var_t, var_x, var_l, neg, add, sub, mul, div, pow, call };
enum class Fn { sin, cos, exp, tanh, sqrt, abs, min, max, clamp };

struct Node;
using Expr = std::shared_ptr<const Node>;

struct Node {
    Op op = Op::num;
    double value = 0.0;  // Op::num
    Fn fn = Fn::sin;     // Op::call
    std::vector<Expr> args;
};

Expr number(double v);
Expr variable(char name);
Expr unary_minus(Expr e);
Expr binary(Op op, Expr a, Expr b);
Expr call(Fn fn, std::vector<Expr> args);

int arity(Fn fn);
const char* fn_name(Fn fn);

// Structural equality (numbers compared exactly).
bool equal(const Expr& a, const Expr& b);

bool uses(const Expr& e, char variable);

Expr parse(std::string_view source);
std::string to_string(const Expr& e);

double evaluate(const Expr& e, double t, double x, double l);

// Flattened postfix form of an expression, evaluated without recursion.
class Program {
public:
    explicit Program(const Expr& e, std::string source = {});

    double operator()(double t, double x, double l) const;
    bool is_constant() const { return constant_; }
    const std::string& source() const { return source_; }

private:
    struct Instr {
        Op op;
        Fn fn;
        double value;
    };
    std::vector<Instr> code_;
    int depth_ = 0;
    bool constant_ = false;
    double const_value_ = 0.0;
    std::string source_;

    double run(double t, double x, double l) const;
};

// Parse and compile; the result is a thread-safe evaluator.
Field compile(const std::string& source);

enum class AlphaMode { exact, renormalize };

struct AlphaSpec {
    std::vector<Expr> weights;
    std::vector<std::string> sources;
    AlphaMode mode = AlphaMode::exact;

    AlphaSpec(std::vector<std::string> sources, AlphaMode mode);
    std::vector<double> operator()(double t, double l) const;
    AlphaField field() const;
};

// Build a CoefficientSet from a config object:
// {"edges", "drift", "sigma", "alpha": {"mode", "weights"}, "bounds": {...}, "check": {...}}
// `pointer` is the JSON pointer of the fragment, used in diagnostics.
CoefficientSet build_coefficient_set(const json& fragment, const std::string& pointer = "");

}  // namespace spider::expr
