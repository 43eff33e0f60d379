#include "spider/coeffexpr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "spider/error.hpp"

namespace spider {

ParseError::ParseError(std::size_t offset, std::vector<std::string> expected, const std::string& message)
    : ConfigError([&] {
          std::string w = "syntax error at offset " + std::to_string(offset) + ": " + message;
          if (!expected.empty()) {
              w += ", expected ";
              for (std::size_t k = 0; k < expected.size(); ++k) w += (k ? " | " : "") + expected[k];
          }
          return w;
      }(),
                  {}, offset),
      expected_(std::move(expected)),
      message_(message) {}

}  // namespace spider

namespace spider::expr {

namespace {

struct FnInfo {
    const char* name;
    Fn fn;
    int arity;
};

constexpr FnInfo kFns[] = {
    {"sin", Fn::sin, 1},   {"cos", Fn::cos, 1},   {"exp", Fn::exp, 1}, {"tanh", Fn::tanh, 1},  {"sqrt", Fn::sqrt, 1},
    {"abs", Fn::abs, 1},   {"min", Fn::min, 2},   {"max", Fn::max, 2}, {"clamp", Fn::clamp, 3},
};

const FnInfo* lookup(std::string_view name) {
    for (const auto& f : kFns)
        if (name == f.name) return &f;
    return nullptr;
}

}  // namespace

int arity(Fn fn) {
    for (const auto& f : kFns)
        if (f.fn == fn) return f.arity;
    return 0;
}

const char* fn_name(Fn fn) {
    for (const auto& f : kFns)
        if (f.fn == fn) return f.name;
    return "?";
}

Expr number(double v) { return std::make_shared<const Node>(Node{Op::num, v, Fn::sin, {}}); }

Expr variable(char name) {
    Op op = name == 't' ? Op::var_t : name == 'x' ? Op::var_x : Op::var_l;
    return std::make_shared<const Node>(Node{op, 0.0, Fn::sin, {}});
}

Expr unary_minus(Expr e) { return std::make_shared<const Node>(Node{Op::neg, 0.0, Fn::sin, {std::move(e)}}); }

Expr binary(Op op, Expr a, Expr b) {
    return std::make_shared<const Node>(Node{op, 0.0, Fn::sin, {std::move(a), std::move(b)}});
}

Expr call(Fn fn, std::vector<Expr> args) {
    return std::make_shared<const Node>(Node{Op::call, 0.0, fn, std::move(args)});
}

bool equal(const Expr& a, const Expr& b) {
    if (a->op != b->op || a->args.size() != b->args.size()) return false;
    if (a->op == Op::num && !(a->value == b->value)) return false;
    if (a->op == Op::call && a->fn != b->fn) return false;
    for (std::size_t k = 0; k < a->args.size(); ++k)
        if (!equal(a->args[k], b->args[k])) return false;
    return true;
}

bool uses(const Expr& e, char v) {
    const Op want = v == 't' ? Op::var_t : v == 'x' ? Op::var_x : Op::var_l;
    if (e->op == want) return true;
    for (const auto& a : e->args)
        if (uses(a, v)) return true;
    return false;
}

// ---- parser ----

namespace {

const std::vector<std::string> kOperand{"number", "identifier", "(", "-"};
const std::vector<std::string> kOperator{"+", "-", "*", "/", "^", "end of input"};
constexpr int kMaxDepth = 200;

class Parser {
public:
    explicit Parser(std::string_view s) : s_(s) {}

    Expr parse_all() {
        Expr e = expr();
        skip();
        if (pos_ < s_.size()) {
            if (peek() == ')') fail("unmatched ')'", kOperator);
            fail("unexpected '" + token_text() + "'", kOperator);
        }
        return e;
    }

private:
    std::string_view s_;
    std::size_t pos_ = 0;
    int depth_ = 0;

    [[noreturn]] void fail(const std::string& msg, const std::vector<std::string>& expected) {
        throw ParseError(pos_, expected, msg);
    }
    [[noreturn]] void fail_at(std::size_t at, const std::string& msg, const std::vector<std::string>& expected) {
        throw ParseError(at, expected, msg);
    }

    void skip() {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\n' || s_[pos_] == '\r')) ++pos_;
    }

    // -1 at end; the U+2212 minus sign reads as '-'
    int peek() {
        skip();
        if (pos_ >= s_.size()) return -1;
        if (s_.substr(pos_, 3) == "\xE2\x88\x92") return '-';
        return static_cast<unsigned char>(s_[pos_]);
    }

    void advance(int c) { pos_ += (c == '-' && s_[pos_] != '-') ? 3 : 1; }

    bool accept(int c) {
        if (peek() == c) {
            advance(c);
            return true;
        }
        return false;
    }

    std::string token_text() {
        if (pos_ >= s_.size()) return "end of input";
        const unsigned char c = static_cast<unsigned char>(s_[pos_]);
        if (c < 0x20 || c >= 0x7f) {
            char buf[8];
            std::snprintf(buf, sizeof buf, "\\x%02X", c);
            return buf;
        }
        return std::string(1, static_cast<char>(c));
    }

    struct Guard {
        Parser& p;
        explicit Guard(Parser& q) : p(q) {
            if (++p.depth_ > kMaxDepth) p.fail("expression nested too deeply", {});
        }
        ~Guard() { --p.depth_; }
    };

    Expr expr() {
        Guard g(*this);
        Expr e = term();
        for (;;) {
            const int c = peek();
            if (c == '+' || c == '-') {
                advance(c);
                e = binary(c == '+' ? Op::add : Op::sub, e, term());
            } else {
                return e;
            }
        }
    }

    Expr term() {
        Expr e = unary();
        for (;;) {
            const int c = peek();
            if (c == '*' || c == '/') {
                advance(c);
                e = binary(c == '*' ? Op::mul : Op::div, e, unary());
            } else {
                return e;
            }
        }
    }

    Expr unary() {
        Guard g(*this);
        if (accept('-')) return unary_minus(unary());
        return power();
    }

    Expr power() {
        Expr base = atom();
        if (accept('^')) return binary(Op::pow, base, unary());
        return base;
    }

    Expr atom() {
        const int c = peek();
        if (c == -1) fail("unexpected end of input", kOperand);
        if (c == '(') {
            advance(c);
            Expr e = expr();
            if (!accept(')')) fail(pos_ >= s_.size() ? "unclosed '('" : "unexpected '" + token_text() + "'",
                                   {")", "+", "-", "*", "/", "^"});
            return e;
        }
        if ((c >= '0' && c <= '9') || c == '.') return num();
        if (std::isalpha(c) || c == '_') return ident();
        fail("unexpected '" + token_text() + "'", kOperand);
    }

    Expr num() {
        const std::size_t start = pos_;
        std::size_t p = pos_;
        auto digits = [&] {
            std::size_t n = 0;
            while (p < s_.size() && s_[p] >= '0' && s_[p] <= '9') ++p, ++n;
            return n;
        };
        std::size_t nd = digits();
        if (p < s_.size() && s_[p] == '.') {
            ++p;
            nd += digits();
        }
        if (nd == 0) fail_at(start, "malformed number", {"digit"});
        if (p < s_.size() && (s_[p] == 'e' || s_[p] == 'E')) {
            ++p;
            if (p < s_.size() && (s_[p] == '+' || s_[p] == '-')) ++p;
            if (digits() == 0) fail_at(p, "malformed exponent", {"digit"});
        }
        double v = 0.0;
        const auto res = std::from_chars(s_.data() + start, s_.data() + p, v);
        if (res.ec != std::errc() || !std::isfinite(v)) fail_at(start, "number out of range", {});
        pos_ = p;
        return number(v);
    }

    Expr ident() {
        const std::size_t start = pos_;
        std::size_t p = pos_;
        while (p < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[p])) || s_[p] == '_')) ++p;
        const std::string_view name = s_.substr(start, p - start);
        pos_ = p;
        if (name == "t" || name == "x" || name == "l") return variable(name[0]);
        const FnInfo* f = lookup(name);
        if (!f) fail_at(start, "unknown identifier '" + std::string(name) + "'", {"t", "x", "l", "function name"});
        if (!accept('(')) fail("function '" + std::string(name) + "' needs an argument list", {"("});
        std::vector<Expr> args;
        args.push_back(expr());
        while (accept(',')) args.push_back(expr());
        if (!accept(')')) fail(pos_ >= s_.size() ? "unclosed argument list" : "unexpected '" + token_text() + "'",
                               {",", ")"});
        if (static_cast<int>(args.size()) != f->arity)
            fail_at(start, "function '" + std::string(name) + "' takes " + std::to_string(f->arity) +
                               " argument(s), got " + std::to_string(args.size()), {});
        return call(f->fn, std::move(args));
    }
};

}  // namespace

Expr parse(std::string_view source) { return Parser(source).parse_all(); }

// ---- printer ----

namespace {

int prec(const Expr& e) {
    switch (e->op) {
        case Op::add:
        case Op::sub: return 1;
        case Op::mul:
        case Op::div: return 2;
        case Op::neg: return 3;
        case Op::pow: return 4;
        default: return 5;
    }
}

std::string num_text(double v) {
    if (!std::isfinite(v) || v < 0.0 || std::signbit(v)) throw ConfigError("literal cannot be printed: negative or non-finite");
    char buf[40];
    if (v == std::floor(v) && v < 1e15) {
        std::snprintf(buf, sizeof buf, "%.0f", v);
    } else {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        // shortest text that still reads back exactly
        for (int p = 1; p < 17; ++p) {
            char b2[40];
            std::snprintf(b2, sizeof b2, "%.*g", p, v);
            double back = 0.0;
            std::from_chars(b2, b2 + std::char_traits<char>::length(b2), back);
            if (back == v) {
                std::snprintf(buf, sizeof buf, "%s", b2);
                break;
            }
        }
    }
    return buf;
}

void print(const Expr& e, std::string& out) {
    auto wrap = [&](const Expr& sub, bool paren) {
        if (paren) out += '(';
        print(sub, out);
        if (paren) out += ')';
    };
    switch (e->op) {
        case Op::num: out += num_text(e->value); return;
        case Op::var_t: out += 't'; return;
        case Op::var_x: out += 'x'; return;
        case Op::var_l: out += 'l'; return;
        case Op::neg:
            out += '-';
            wrap(e->args[0], prec(e->args[0]) < 3);
            return;
        case Op::add:
        case Op::sub:
        case Op::mul:
        case Op::div: {
            const int p = prec(e);
            wrap(e->args[0], prec(e->args[0]) < p);
            out += e->op == Op::add ? " + " : e->op == Op::sub ? " - " : e->op == Op::mul ? "*" : "/";
            wrap(e->args[1], prec(e->args[1]) <= p);
            return;
        }
        case Op::pow:
            wrap(e->args[0], prec(e->args[0]) < 5);
            out += '^';
            wrap(e->args[1], prec(e->args[1]) < 3);
            return;
        case Op::call:
            out += fn_name(e->fn);
            out += '(';
            for (std::size_t k = 0; k < e->args.size(); ++k) {
                if (k) out += ", ";
                print(e->args[k], out);
            }
            out += ')';
            return;
    }
}

}  // namespace

std::string to_string(const Expr& e) {
    std::string out;
    print(e, out);
    return out;
}

// ---- evaluation ----

namespace {

[[noreturn]] void eval_fail(const std::string& what) { throw EvalError(what); }

inline double checked(double v, const char* what) {
    if (!std::isfinite(v)) eval_fail(std::string("non-finite result in ") + what);
    return v;
}

inline double apply_div(double a, double b) {
    if (b == 0.0) eval_fail("division by zero");
    return checked(a / b, "division");
}

inline double apply_fn(Fn fn, const double* a) {
    switch (fn) {
        case Fn::sin: return std::sin(a[0]);
        case Fn::cos: return std::cos(a[0]);
        case Fn::exp: return checked(std::exp(a[0]), "exp");
        case Fn::tanh: return std::tanh(a[0]);
        case Fn::sqrt:
            if (a[0] < 0.0) eval_fail("sqrt of negative value");
            return std::sqrt(a[0]);
        case Fn::abs: return std::abs(a[0]);
        case Fn::min: return std::min(a[0], a[1]);
        case Fn::max: return std::max(a[0], a[1]);
        case Fn::clamp:
            if (a[1] > a[2]) eval_fail("clamp with lower bound above upper bound");
            return std::clamp(a[0], a[1], a[2]);
    }
    return 0.0;
}

}  // namespace

double evaluate(const Expr& e, double t, double x, double l) {
    switch (e->op) {
        case Op::num: return e->value;
        case Op::var_t: return t;
        case Op::var_x: return x;
        case Op::var_l: return l;
        case Op::neg: return -evaluate(e->args[0], t, x, l);
        case Op::add: return checked(evaluate(e->args[0], t, x, l) + evaluate(e->args[1], t, x, l), "addition");
        case Op::sub: return checked(evaluate(e->args[0], t, x, l) - evaluate(e->args[1], t, x, l), "subtraction");
        case Op::mul: return checked(evaluate(e->args[0], t, x, l) * evaluate(e->args[1], t, x, l), "multiplication");
        case Op::div: return apply_div(evaluate(e->args[0], t, x, l), evaluate(e->args[1], t, x, l));
        case Op::pow: return checked(std::pow(evaluate(e->args[0], t, x, l), evaluate(e->args[1], t, x, l)), "power");
        case Op::call: {
            double a[3];
            for (std::size_t k = 0; k < e->args.size(); ++k) a[k] = evaluate(e->args[k], t, x, l);
            return apply_fn(e->fn, a);
        }
    }
    return 0.0;
}

namespace {

void emit(const Expr& e, std::vector<Expr>& order) {
    for (const auto& a : e->args) emit(a, order);
    order.push_back(e);
}

}  // namespace

Program::Program(const Expr& e, std::string source) : source_(std::move(source)) {
    std::vector<Expr> order;
    emit(e, order);
    int d = 0;
    for (const auto& n : order) {
        code_.push_back({n->op, n->fn, n->value});
        d += 1 - static_cast<int>(n->args.size());
        depth_ = std::max(depth_, d);
    }
    if (!uses(e, 't') && !uses(e, 'x') && !uses(e, 'l')) {
        try {
            const_value_ = run(0.0, 0.0, 0.0);
            constant_ = true;
        } catch (const EvalError&) {
            // keep failing at every evaluation
        }
    }
}

double Program::operator()(double t, double x, double l) const {
    if (constant_) return const_value_;
    return run(t, x, l);
}

double Program::run(double t, double x, double l) const {
    constexpr int kInline = 32;
    double inline_stack[kInline] = {};
    std::vector<double> heap;
    double* st = inline_stack;
    if (depth_ > kInline) {
        heap.resize(depth_);
        st = heap.data();
    }
    int sp = 0;
    for (const auto& in : code_) {
        switch (in.op) {
            case Op::num: st[sp++] = in.value; break;
            case Op::var_t: st[sp++] = t; break;
            case Op::var_x: st[sp++] = x; break;
            case Op::var_l: st[sp++] = l; break;
            case Op::neg: st[sp - 1] = -st[sp - 1]; break;
            case Op::add: --sp, st[sp - 1] = checked(st[sp - 1] + st[sp], "addition"); break;
            case Op::sub: --sp, st[sp - 1] = checked(st[sp - 1] - st[sp], "subtraction"); break;
            case Op::mul: --sp, st[sp - 1] = checked(st[sp - 1] * st[sp], "multiplication"); break;
            case Op::div: --sp, st[sp - 1] = apply_div(st[sp - 1], st[sp]); break;
            case Op::pow: --sp, st[sp - 1] = checked(std::pow(st[sp - 1], st[sp]), "power"); break;
            case Op::call: {
                const int n = arity(in.fn);
                sp -= n;
                st[sp] = apply_fn(in.fn, st + sp);
                ++sp;
                break;
            }
        }
    }
    return st[0];
}

Field compile(const std::string& source) {
    auto prog = std::make_shared<const Program>(parse(source), source);
    if (prog->is_constant()) {
        const double v = (*prog)(0.0, 0.0, 0.0);
        return [v](double, double, double) { return v; };
    }
    return [prog](double t, double x, double l) { return (*prog)(t, x, l); };
}

// ---- spinning measure ----

AlphaSpec::AlphaSpec(std::vector<std::string> srcs, AlphaMode m) : sources(std::move(srcs)), mode(m) {
    for (std::size_t k = 0; k < sources.size(); ++k) {
        Expr e = parse(sources[k]);
        if (uses(e, 'x')) throw ConfigError("spinning measure may depend on t and l only (weight " + std::to_string(k + 1) + " uses x)");
        weights.push_back(std::move(e));
    }
}

std::vector<double> AlphaSpec::operator()(double t, double l) const {
    std::vector<double> v(weights.size());
    double sum = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        v[k] = evaluate(weights[k], t, 0.0, l);
        sum += v[k];
    }
    if (mode == AlphaMode::renormalize) {
        for (std::size_t k = 0; k < v.size(); ++k)
            if (!(v[k] > 0.0)) eval_fail("renormalized spinning weight " + std::to_string(k + 1) + " is not positive");
        for (double& w : v) w /= sum;
    }
    return v;
}

AlphaField AlphaSpec::field() const {
    std::vector<std::shared_ptr<const Program>> progs;
    for (std::size_t k = 0; k < weights.size(); ++k) progs.push_back(std::make_shared<const Program>(weights[k], sources[k]));
    const bool renorm = mode == AlphaMode::renormalize;
    return [progs, renorm](double t, double l) {
        std::vector<double> v(progs.size());
        double sum = 0.0;
        for (std::size_t k = 0; k < progs.size(); ++k) {
            v[k] = (*progs[k])(t, 0.0, l);
            sum += v[k];
        }
        if (renorm) {
            for (std::size_t k = 0; k < v.size(); ++k)
                if (!(v[k] > 0.0)) eval_fail("renormalized spinning weight " + std::to_string(k + 1) + " is not positive");
            for (double& w : v) w /= sum;
        }
        return v;
    };
}

// ---- config ----

namespace {

std::vector<std::pair<std::string, std::string>> per_edge(const json& v, int edges, const std::string& pointer) {
    std::vector<std::pair<std::string, std::string>> out;
    if (v.is_string()) {
        for (int i = 0; i < edges; ++i) out.emplace_back(v.get<std::string>(), pointer);
        return out;
    }
    if (v.is_number()) {
        const double d = v.get<double>();
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", d);
        for (int i = 0; i < edges; ++i) out.emplace_back(buf, pointer);
        return out;
    }
    if (!v.is_array() || static_cast<int>(v.size()) != edges)
        throw ConfigError("expected an expression string or an array of " + std::to_string(edges) + " expressions", pointer);
    for (int i = 0; i < edges; ++i) {
        const std::string p = pointer + "/" + std::to_string(i);
        if (v[i].is_number()) {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", v[i].get<double>());
            out.emplace_back(buf, p);
        } else if (v[i].is_string()) {
            out.emplace_back(v[i].get<std::string>(), p);
        } else {
            throw ConfigError("expected an expression string", p);
        }
    }
    return out;
}

template <class F>
auto located(const std::string& pointer, bool from_string, F&& f) {
    try {
        return f();
    } catch (const ParseError& e) {
        throw ConfigError(e.what(), pointer, from_string ? e.offset() : no_offset);
    } catch (const ConfigError& e) {
        if (!e.pointer().empty()) throw;
        throw ConfigError(e.what(), pointer);
    }
}

}  // namespace

CoefficientSet build_coefficient_set(const json& fragment, const std::string& pointer) {
    JsonObject obj(fragment, pointer);
    CoefficientSet c;
    c.edges = static_cast<int>(obj.integer("edges", 2, 64));

    for (const auto& [key, target] : {std::pair{"drift", &c.b}, std::pair{"sigma", &c.sigma}}) {
        const json& v = obj.at(key);
        for (const auto& [src, ptr] : per_edge(v, c.edges, obj.child(key)))
            target->push_back(located(ptr, true, [&] { return compile(src); }));
    }

    {
        JsonObject a = obj.object("alpha");
        const std::string mode = a.string_or("mode", "exact");
        AlphaMode m;
        if (mode == "exact")
            m = AlphaMode::exact;
        else if (mode == "renormalize")
            m = AlphaMode::renormalize;
        else
            throw ConfigError("alpha mode must be 'exact' or 'renormalize'", a.child("mode"));
        const json& w = a.at("weights");
        auto srcs = per_edge(w, c.edges, a.child("weights"));
        std::vector<std::string> texts;
        for (const auto& s : srcs) texts.push_back(s.first);
        for (std::size_t k = 0; k < srcs.size(); ++k)
            located(srcs[k].second, true, [&] { return AlphaSpec({texts[k]}, m); });
        AlphaSpec spec(texts, m);
        c.alpha = spec.field();
        a.finish();
    }

    {
        JsonObject b = obj.object("bounds");
        c.bounds.a_lower = b.number("a_lower", 0.0, 1.0);
        c.bounds.sigma_lower = b.number("sigma_lower", 0.0);
        c.bounds.b_bound = b.number("b_bound", 0.0);
        c.bounds.sigma_bound = b.number("sigma_bound", 0.0);
        c.bounds.alpha_lip = b.number("alpha_lip", 0.0);
        b.finish();
    }

    double t_max = 1.0, x_max = 4.0, l_max = 4.0;
    int points = 9;
    if (obj.has("check")) {
        JsonObject g = obj.object("check");
        t_max = g.number_or("t_max", t_max, 1e-12);
        x_max = g.number_or("x_max", x_max, 1e-12);
        l_max = g.number_or("l_max", l_max, 1e-12);
        points = static_cast<int>(g.integer_or("points", points, 2, 101));
        g.finish();
    }
    obj.finish();

    ValidationReport rep;
    try {
        rep = validate_coefficients(c, SamplingPlan::uniform(t_max, x_max, l_max, points));
    } catch (const ConfigError& e) {
        if (!e.pointer().empty()) throw;
        throw ConfigError(e.what(), pointer);
    } catch (const EvalError& e) {
        throw ConfigError(std::string("coefficient evaluation failed on the check grid: ") + e.what(), pointer);
    }
    const auto& a = rep.clause("A");
    if (!a.pass)
        throw ConfigError("spinning measure violates a_lower on the check grid (min weight " + std::to_string(a.observed) +
                              " at t=" + std::to_string(a.worst.t) + ", l=" + std::to_string(a.worst.l) + ")",
                          obj.child("alpha"));
    c.report = std::make_shared<const ValidationReport>(std::move(rep));
    return c;
}

}  // namespace spider::expr
