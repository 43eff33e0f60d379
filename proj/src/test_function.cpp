#include "spider/test_function.hpp"

#include <cmath>

#include "spider/error.hpp"

namespace spider {

double TimeFactor::value(double t) const {
    switch (kind) {
        case Kind::one: return 1.0;
        case Kind::exp: return std::exp(rate * t);
        case Kind::sin: return std::sin(rate * t);
        case Kind::cos: return std::cos(rate * t);
    }
    return 0.0;
}

double TimeFactor::deriv(double t) const {
    switch (kind) {
        case Kind::one: return 0.0;
        case Kind::exp: return rate * std::exp(rate * t);
        case Kind::sin: return rate * std::cos(rate * t);
        case Kind::cos: return -rate * std::sin(rate * t);
    }
    return 0.0;
}

TestFunction::TestFunction(int edges, std::vector<Term> terms, std::string name)
    : edges_(edges), terms_(std::move(terms)), name_(std::move(name)) {
    if (edges < 2) throw ConfigError("test function needs at least 2 edges");
    for (const auto& term : terms_) {
        if (static_cast<int>(term.coeff.size()) != edges)
            throw ConfigError("test function term needs one coefficient per edge");
        if (term.x_pow < 0 || term.l_pow < 0) throw ConfigError("test function powers must be nonnegative");
        if (term.x_pow == 0)
            for (double c : term.coeff)
                if (c != term.coeff[0])
                    throw ConfigError("test function is discontinuous at the vertex: x-free term with edge-dependent coefficient");
    }
}

TestFunction TestFunction::constant(int edges, double c) {
    return TestFunction(edges, {Term{std::vector<double>(edges, c), 0, 0, {}}}, "const");
}

TestFunction TestFunction::identity(int edges) {
    return TestFunction(edges, {Term{std::vector<double>(edges, 1.0), 1, 0, {}}}, "x");
}

namespace {

inline double ipow(double v, int p) {
    double r = 1.0;
    for (int k = 0; k < p; ++k) r *= v;
    return r;
}

}  // namespace

Jet TestFunction::jet(int edge, double t, double x, double l) const {
    Jet j;
    for (const auto& term : terms_) {
        const double c = term.coeff[edge - 1];
        if (c == 0.0) continue;
        const double tv = term.tau.value(t), td = term.tau.deriv(t);
        const int p = term.x_pow, q = term.l_pow;
        const double xp = ipow(x, p), lq = ipow(l, q);
        const double xp1 = p >= 1 ? p * ipow(x, p - 1) : 0.0;
        const double xp2 = p >= 2 ? p * (p - 1) * ipow(x, p - 2) : 0.0;
        const double lq1 = q >= 1 ? q * ipow(l, q - 1) : 0.0;
        j.f += c * xp * lq * tv;
        j.ft += c * xp * lq * td;
        j.fx += c * xp1 * lq * tv;
        j.fxx += c * xp2 * lq * tv;
        j.fl += c * xp * lq1 * tv;
    }
    return j;
}

double TestFunction::value(int edge, double t, double x, double l) const {
    double f = 0.0;
    for (const auto& term : terms_) {
        const double c = term.coeff[edge - 1];
        if (c == 0.0) continue;
        f += c * ipow(x, term.x_pow) * ipow(l, term.l_pow) * term.tau.value(t);
    }
    return f;
}

}  // namespace spider
