#include "spider/network.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "spider/error.hpp"

namespace spider {

double distance(const NetworkPoint& p, const NetworkPoint& q) {
    if (p.i == q.i) return std::abs(p.x - q.x);
    return p.x + q.x;
}

CoefficientSet CoefficientSet::constant(int edges, std::vector<double> b, std::vector<double> sigma,
                                        std::vector<double> alpha, Bounds bounds) {
    if (static_cast<int>(b.size()) != edges || static_cast<int>(sigma.size()) != edges)
        throw ConfigError("constant coefficients: expected one drift and one diffusion per edge");
    CoefficientSet c;
    c.edges = edges;
    for (int i = 0; i < edges; ++i) {
        const double bi = b[i], si = sigma[i];
        c.b.push_back([bi](double, double, double) { return bi; });
        c.sigma.push_back([si](double, double, double) { return si; });
    }
    c.alpha = [alpha = std::move(alpha)](double, double) { return alpha; };
    c.bounds = bounds;
    return c;
}

SamplingPlan SamplingPlan::uniform(double t_max, double x_max, double l_max, int points) {
    SamplingPlan p;
    for (int k = 0; k < points; ++k) {
        const double s = points > 1 ? static_cast<double>(k) / (points - 1) : 0.0;
        p.t.push_back(s * t_max);
        p.x.push_back(s * x_max);
        p.l.push_back(s * l_max);
    }
    return p;
}

const ClauseResult& ValidationReport::clause(const std::string& name) const {
    for (const auto& c : clauses)
        if (c.name == name) return c;
    throw std::out_of_range("no clause " + name);
}

namespace {

std::vector<double> sorted_unique(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

// sup|f| plus the largest adjacent difference quotient along each axis
struct Regularity {
    double value = 0.0;
    SamplePoint worst;
};

Regularity regularity(const Field& f, int edge, const std::vector<double>& ts, const std::vector<double>& xs,
                      const std::vector<double>& ls) {
    const std::size_t nt = ts.size(), nx = xs.size(), nl = ls.size();
    std::vector<double> v(nt * nx * nl);
    auto at = [&](std::size_t a, std::size_t b, std::size_t c) -> double& { return v[(a * nx + b) * nl + c]; };
    double sup = 0.0, lt = 0.0, lx = 0.0, ll = 0.0;
    SamplePoint worst{edge, ts[0], xs[0], ls[0]};
    for (std::size_t a = 0; a < nt; ++a)
        for (std::size_t b = 0; b < nx; ++b)
            for (std::size_t c = 0; c < nl; ++c) {
                const double y = f(ts[a], xs[b], ls[c]);
                at(a, b, c) = y;
                if (std::abs(y) > sup) {
                    sup = std::abs(y);
                    worst = {edge, ts[a], xs[b], ls[c]};
                }
            }
    for (std::size_t a = 0; a < nt; ++a)
        for (std::size_t b = 0; b < nx; ++b)
            for (std::size_t c = 0; c < nl; ++c) {
                if (a + 1 < nt) lt = std::max(lt, std::abs(at(a + 1, b, c) - at(a, b, c)) / (ts[a + 1] - ts[a]));
                if (b + 1 < nx) lx = std::max(lx, std::abs(at(a, b + 1, c) - at(a, b, c)) / (xs[b + 1] - xs[b]));
                if (c + 1 < nl) ll = std::max(ll, std::abs(at(a, b, c + 1) - at(a, b, c)) / (ls[c + 1] - ls[c]));
            }
    return {sup + lt + lx + ll, worst};
}

}  // namespace

ValidationReport validate_coefficients(const CoefficientSet& c, const SamplingPlan& plan) {
    if (c.edges < 2) throw ConfigError("network needs at least 2 edges, got " + std::to_string(c.edges));
    if (static_cast<int>(c.b.size()) != c.edges || static_cast<int>(c.sigma.size()) != c.edges)
        throw ConfigError("coefficient families must have one evaluator per edge");
    const auto ts = sorted_unique(plan.t), xs = sorted_unique(plan.x), ls = sorted_unique(plan.l);
    if (ts.empty() || xs.empty() || ls.empty()) throw ConfigError("sampling plan is empty");
    const Bounds& bd = c.bounds;
    if (!(bd.a_lower > 0.0 && bd.a_lower <= 1.0 / c.edges))
        throw ConfigError("a_lower must lie in (0, 1/I]");
    if (!(bd.sigma_lower > 0.0)) throw ConfigError("sigma_lower must be positive");
    if (!(bd.b_bound > 0.0 && bd.sigma_bound > 0.0 && bd.alpha_lip > 0.0))
        throw ConfigError("b_bound, sigma_bound and alpha_lip must be positive");

    ValidationReport rep;

    // (A) and (R-iii)
    {
        ClauseResult a{"A", true, 1.0, bd.a_lower, {}};
        const std::size_t nt = ts.size(), nl = ls.size();
        std::vector<std::vector<double>> vals(nt * nl);
        for (std::size_t p = 0; p < nt; ++p)
            for (std::size_t q = 0; q < nl; ++q) {
                auto v = c.alpha(ts[p], ls[q]);
                if (static_cast<int>(v.size()) != c.edges)
                    throw ConfigError("alpha evaluator returned " + std::to_string(v.size()) + " weights for " +
                                      std::to_string(c.edges) + " edges");
                double sum = 0.0;
                for (int i = 0; i < c.edges; ++i) {
                    sum += v[i];
                    if (v[i] < a.observed) {
                        a.observed = v[i];
                        a.worst = {i + 1, ts[p], 0.0, ls[q]};
                    }
                }
                if (std::abs(sum - 1.0) > 1e-12) {
                    a.pass = false;
                    a.worst = {0, ts[p], 0.0, ls[q]};
                }
                vals[p * nl + q] = std::move(v);
            }
        if (a.observed < bd.a_lower) a.pass = false;

        ClauseResult r3{"R-iii", true, 0.0, bd.alpha_lip, {}};
        for (int i = 0; i < c.edges; ++i) {
            double lt = 0.0, ll = 0.0;
            for (std::size_t p = 0; p < nt; ++p)
                for (std::size_t q = 0; q < nl; ++q) {
                    if (p + 1 < nt)
                        lt = std::max(lt, std::abs(vals[(p + 1) * nl + q][i] - vals[p * nl + q][i]) / (ts[p + 1] - ts[p]));
                    if (q + 1 < nl)
                        ll = std::max(ll, std::abs(vals[p * nl + q + 1][i] - vals[p * nl + q][i]) / (ls[q + 1] - ls[q]));
                }
            if (lt + ll > r3.observed) {
                r3.observed = lt + ll;
                r3.worst = {i + 1, 0.0, 0.0, 0.0};
            }
        }
        r3.pass = r3.observed <= bd.alpha_lip;
        rep.clauses.push_back(a);
        rep.clauses.push_back(r3);
    }

    // (E)
    {
        ClauseResult e{"E", true, INFINITY, bd.sigma_lower, {}};
        for (int i = 1; i <= c.edges; ++i)
            for (double t : ts)
                for (double x : xs)
                    for (double l : ls) {
                        const double s = c.diffusion(i, t, x, l);
                        if (s < e.observed) {
                            e.observed = s;
                            e.worst = {i, t, x, l};
                        }
                    }
        e.pass = e.observed >= bd.sigma_lower;
        rep.clauses.push_back(e);
    }

    // (R-i), (R-ii)
    ClauseResult r1{"R-i", true, 0.0, bd.b_bound, {}};
    ClauseResult r2{"R-ii", true, 0.0, bd.sigma_bound, {}};
    for (int i = 1; i <= c.edges; ++i) {
        const auto rb = regularity(c.b[i - 1], i, ts, xs, ls);
        if (rb.value > r1.observed) r1.observed = rb.value, r1.worst = rb.worst;
        const auto rs = regularity(c.sigma[i - 1], i, ts, xs, ls);
        if (rs.value > r2.observed) r2.observed = rs.value, r2.worst = rs.worst;
    }
    r1.pass = r1.observed <= bd.b_bound;
    r2.pass = r2.observed <= bd.sigma_bound;
    rep.clauses.push_back(r1);
    rep.clauses.push_back(r2);

    std::sort(rep.clauses.begin(), rep.clauses.end(), [](const auto& p, const auto& q) {
        static const std::vector<std::string> order{"A", "E", "R-i", "R-ii", "R-iii"};
        return std::find(order.begin(), order.end(), p.name) < std::find(order.begin(), order.end(), q.name);
    });
    for (const auto& cl : rep.clauses) rep.pass = rep.pass && cl.pass;
    return rep;
}

}  // namespace spider
