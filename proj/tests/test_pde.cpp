#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "spider/error.hpp"
#include "spider/pde.hpp"

using namespace spider;

namespace {

Bounds loose() { return {0.2, 0.5, 10.0, 10.0, 10.0}; }

CoefficientSet lifted_alpha(std::vector<double> b, std::vector<double> sigma) {
    auto c = CoefficientSet::constant(2, b, sigma, {0.5, 0.5}, loose());
    c.alpha = [](double, double l) { return std::vector<double>{(1 + l) / (2 + l), 1 / (2 + l)}; };
    return c;
}

PdeProblem constant_problem(PdeDirection dir, double value) {
    PdeProblem p;
    p.coefficients = CoefficientSet::constant(3, {0.3, -0.2, 0.0}, {1.0, 0.7, 1.3}, {0.5, 0.3, 0.2}, loose());
    p.direction = dir;
    p.T = 1;
    p.R = 3;
    p.K = 2;
    for (int e = 0; e < 3; ++e) p.data.push_back([value](double, double) { return value; });
    return p;
}

double max_abs_diff_at(const PdeSolution& a, const PdeSolution& b, int ma, int mb, int stride_x, int stride_l) {
    double d = 0.0;
    const auto& g = a.grid();
    for (int p = 0; p <= g.P; ++p)
        for (int e = 1; e <= a.edges(); ++e)
            for (int j = 0; j <= g.J; ++j)
                d = std::max(d, std::abs(a.at(ma, e, j, p) - b.at(mb, e, j * stride_x, p * stride_l)));
    return d;
}

// Backward manufactured solution with exact Neumann data at R and l-dependent alpha.
struct Manufactured {
    double R = 2.0, K = 1.5, T = 1.0;
    std::vector<double> k{1.0, -0.5}, b{0.2, -0.4}, s{1.0, 1.2};

    double phi(double x) const { return x - x * x / (2 * R); }
    double u(int e, double t, double x, double l) const {
        return std::cos(t) * std::exp(-0.5 * l) + k[e - 1] * phi(x) * (1 + 0.5 * std::sin(t));
    }

    PdeProblem problem() const {
        PdeProblem p;
        p.coefficients = lifted_alpha(b, s);
        p.T = T;
        p.R = R;
        p.K = K;
        auto self = *this;
        for (int e = 1; e <= 2; ++e) {
            p.source.push_back([self, e](double t, double x, double l) {
                const double kk = self.k[e - 1];
                const double ut = -std::sin(t) * std::exp(-0.5 * l) + kk * self.phi(x) * 0.5 * std::cos(t);
                const double ux = kk * (1 - x / self.R) * (1 + 0.5 * std::sin(t));
                const double uxx = -kk / self.R * (1 + 0.5 * std::sin(t));
                const double sg = self.s[e - 1];
                return -(ut + 0.5 * sg * sg * uxx + self.b[e - 1] * ux);
            });
            p.data.push_back([self, e](double x, double l) { return self.u(e, self.T, x, l); });
            p.ceiling.push_back([self, e](double t, double x) { return self.u(e, t, x, self.K); });
        }
        p.vertex_source = [self](double t, double l) {
            const double al = (1 + l) / (2 + l), a2 = 1 / (2 + l);
            const double flux = (al * self.k[0] + a2 * self.k[1]) * (1 + 0.5 * std::sin(t));
            return 0.5 * std::cos(t) * std::exp(-0.5 * l) - flux;
        };
        return p;
    }

    double error(const PdeSolution& sol, int m) const {
        double e = 0.0;
        const auto& g = sol.grid();
        for (int p = 0; p <= g.P; ++p)
            for (int edge = 1; edge <= 2; ++edge)
                for (int j = 0; j <= g.J; ++j)
                    e = std::max(e, std::abs(sol.at(m, edge, j, p) - u(edge, m * sol.dt(), j * sol.dx(), p * sol.dl())));
        return e;
    }
};

}  // namespace

TEST_CASE("constant data give a constant solution in both directions") {
    for (auto dir : {PdeDirection::backward, PdeDirection::forward}) {
        auto prob = constant_problem(dir, 5.0);
        auto sol = solve(prob, {20, 15, 10}, {true, {}});
        double worst = 0.0;
        for (int m = 0; m <= 20; ++m)
            for (int p = 0; p <= 10; ++p)
                for (int e = 1; e <= 3; ++e)
                    for (int j = 0; j <= 15; ++j) worst = std::max(worst, std::abs(sol.at(m, e, j, p) - 5.0));
        CHECK(worst < 1e-12);
        CHECK(sol.warnings.empty());
        auto r = residual(sol, prob);
        CHECK(r.interior_max < 1e-10);
        CHECK(r.vertex_max < 1e-10);
        CHECK(r.neumann_max < 1e-10);
    }
}

TEST_CASE("unit running cost gives T - t") {
    auto prob = constant_problem(PdeDirection::backward, 0.0);
    for (int e = 0; e < 3; ++e) prob.source.push_back([](double, double, double) { return 1.0; });
    prob.ceiling.assign(3, [](double t, double) { return 1.0 - t; });
    auto sol = solve(prob, {10, 12, 8}, {true, {}});
    for (int m = 0; m <= 10; ++m)
        for (int p = 0; p <= 8; ++p)
            for (int j = 0; j <= 12; ++j) CHECK(sol.at(m, 2, j, p) == doctest::Approx(1.0 - m * 0.1).epsilon(1e-12));
}

TEST_CASE("vertex values are shared across edges") {
    auto prob = Manufactured{}.problem();
    auto sol = solve(prob, {10, 10, 10});
    for (int p = 0; p <= 10; ++p) CHECK(sol.at(0, 1, 0, p) == sol.at(0, 2, 0, p));
}

TEST_CASE("manufactured solution: first-order convergence") {
    Manufactured mf;
    auto prob = mf.problem();
    CHECK(compatibility_defect(prob) < 1e-6);
    std::vector<double> err;
    for (int n : {16, 32, 64}) {
        auto sol = solve(prob, {n, n, n});
        err.push_back(mf.error(sol, 0));
    }
    const double order1 = std::log2(err[0] / err[1]), order2 = std::log2(err[1] / err[2]);
    MESSAGE("errors " << err[0] << " " << err[1] << " " << err[2] << " orders " << order1 << " " << order2);
    CHECK(err[2] < err[1]);
    CHECK(err[1] < err[0]);
    CHECK(order1 >= 1.0);
    CHECK(order2 >= 1.0);
}

TEST_CASE("self-convergence over three nested grids") {
    auto prob = Manufactured{}.problem();
    auto a = solve(prob, {12, 12, 12});
    auto b = solve(prob, {24, 24, 24});
    auto c = solve(prob, {48, 48, 48});
    const double d1 = max_abs_diff_at(a, b, 0, 0, 2, 2);
    const double d2 = max_abs_diff_at(b, c, 0, 0, 2, 2);
    CHECK(d2 < d1);
    CHECK(d1 / d2 > 1.5);
    CHECK(d1 / d2 < 3.0);
}

TEST_CASE("residual of the exact solution shrinks with the grid") {
    Manufactured mf;
    auto prob = mf.problem();
    auto fn = [&](int e, double t, double x, double l) { return mf.u(e, t, x, l); };
    auto r1 = residual(PdeSolution::sample(prob, {20, 20, 20}, fn), prob);
    auto r2 = residual(PdeSolution::sample(prob, {40, 40, 40}, fn), prob);
    CHECK(r2.interior_max < 0.6 * r1.interior_max);
    CHECK(r2.vertex_max < 0.6 * r1.vertex_max);
    // phi is quadratic: the Neumann row is exact up to the time difference
    CHECK(r2.neumann_max < 0.6 * r1.neumann_max);

    auto solved = solve(prob, {20, 20, 20}, {true, {}});
    auto rs = residual(solved, prob);
    CHECK(rs.interior_max < 1e-9);
    CHECK(rs.vertex_max < 1e-9);
    CHECK(rs.neumann_max < 1e-9);
}

TEST_CASE("perturbing one node only disturbs its stencil") {
    auto prob = constant_problem(PdeDirection::backward, 2.0);
    auto sol = solve(prob, {8, 10, 6}, {true, {}});
    const int m = 4, e = 2, j = 5, p = 3;
    sol.at(m, e, j, p) += 1.0;
    auto nodes = residual_nodes(sol, prob, 1e-9);
    REQUIRE(!nodes.empty());
    for (const auto& n : nodes) {
        CHECK(n.kind == ResidualNode::Kind::interior);
        CHECK(n.edge == e);
        CHECK(n.p == p);
        CHECK(std::abs(n.j - j) <= 1);
        CHECK((n.m == m || n.m == m - 1));  // backward: level m - 1 reads level m as its predecessor
    }
    sol.at(m, e, j, p) -= 1.0;
    sol.at(m, 1, 0, p) += 1.0;
    auto after = residual_nodes(sol, prob, 1e-9);
    bool vertex_hit = false;
    for (const auto& n : after) {
        if (n.kind == ResidualNode::Kind::vertex) {
            vertex_hit = true;
            CHECK(n.m == m);
            CHECK((n.p == p || n.p == p - 1));
        } else {
            CHECK(n.j == 1);
            CHECK(n.m == m);
        }
    }
    CHECK(vertex_hit);
}

TEST_CASE("forward mode obeys the discrete maximum principle") {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const int I = 2 + trial % 3;
        std::vector<double> b(I), s(I), a(I), amp(I), c0(I);
        double asum = 0;
        for (int e = 0; e < I; ++e) {
            b[e] = 4 * U(gen) - 2;
            s[e] = 0.2 + U(gen);
            a[e] = 0.2 + U(gen);
            asum += a[e];
            amp[e] = 2 * U(gen) - 1;
            c0[e] = U(gen);
        }
        for (auto& v : a) v /= asum;
        PdeProblem prob;
        prob.coefficients = CoefficientSet::constant(I, b, s, a, loose());
        prob.direction = PdeDirection::forward;
        prob.T = 0.5;
        prob.R = 2;
        prob.K = 1;
        const double base = 3 * U(gen) - 1.5;
        for (int e = 0; e < I; ++e) {
            const double A = amp[e];
            prob.data.push_back([A, base](double x, double l) { return base + A * std::sin(3 * x) * std::cos(l); });
            const double c = c0[e];
            prob.zeroth.push_back([c](double, double x, double) { return c * (1 + x); });
        }
        auto sol = solve(prob, {25, 30, 12}, {true, {}});
        double dmin = 0, dmax = 0;  // c >= 0 admits 0 as a bound
        for (int p = 0; p <= 12; ++p)
            for (int e = 1; e <= I; ++e)
                for (int j = 0; j <= 30; ++j) {
                    dmin = std::min(dmin, sol.at(0, e, j, p));
                    dmax = std::max(dmax, sol.at(0, e, j, p));
                    for (int m = 0; m <= 25; ++m) {
                        dmin = std::min(dmin, sol.at(m, e, j, 12));
                        dmax = std::max(dmax, sol.at(m, e, j, 12));
                    }
                }
        for (int m = 0; m <= 25; ++m)
            for (int p = 0; p <= 12; ++p)
                for (int e = 1; e <= I; ++e)
                    for (int j = 0; j <= 30; ++j) {
                        const double v = sol.at(m, e, j, p);
                        CHECK(v <= dmax + 1e-12);
                        CHECK(v >= dmin - 1e-12);
                    }
    }
}

TEST_CASE("incompatible data produce a warning, not an error") {
    auto prob = constant_problem(PdeDirection::backward, 1.0);
    prob.vertex_source = [](double, double) { return 1.0; };
    auto sol = solve(prob, {5, 5, 5});
    CHECK(sol.compatibility_defect == doctest::Approx(1.0));
    CHECK(sol.warnings.size() == 1);
}

TEST_CASE("bad problems are rejected") {
    auto prob = constant_problem(PdeDirection::backward, 1.0);
    CHECK_THROWS_AS(solve(prob, {0, 5, 5}), ConfigError);
    prob.data.pop_back();
    CHECK_THROWS_AS(solve(prob, {5, 5, 5}), ConfigError);
    auto q = constant_problem(PdeDirection::backward, 1.0);
    q.coefficients.b[0] = [](double, double, double) { return std::nan(""); };
    CHECK_THROWS_AS(solve(q, {5, 5, 5}), EvalError);
    auto sol = solve(constant_problem(PdeDirection::backward, 1.0), {5, 5, 5});
    CHECK_THROWS_AS(sol.value(0.5, 1.0, 1, 0.5), ConfigError);  // t = 0.5 not stored
    CHECK(sol.value(0.0, 1.1, 2, 0.37) == doctest::Approx(1.0));
}
