#include "spider/pde.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "spider/error.hpp"

namespace spider {

double default_R(double x_query, double sigma_bound, double T) { return x_query + 4.0 * sigma_bound * std::sqrt(T); }
double default_K(double l_query, double T) { return l_query + 4.0 * std::sqrt(T); }

PdeSolution::PdeSolution(int edges, double T, double R, double K, PdeGrid grid, std::vector<int> kept)
    : edges_(edges), T_(T), R_(R), K_(K), grid_(grid), slot_(static_cast<std::size_t>(grid.M) + 1, -1) {
    std::sort(kept.begin(), kept.end());
    kept.erase(std::unique(kept.begin(), kept.end()), kept.end());
    for (int m : kept) {
        if (m < 0 || m > grid.M) throw ConfigError("kept time index out of range");
        slot_[m] = static_cast<int>(kept_.size());
        kept_.push_back(m);
    }
    const std::size_t slices = static_cast<std::size_t>(grid.P) + 1;
    vertex_.assign(kept_.size() * slices, 0.0);
    edge_.assign(kept_.size() * slices * edges * grid.J, 0.0);
}

std::size_t PdeSolution::index(int m, int edge, int j, int p) const {
    const int s = slot_.at(m);
    if (s < 0) throw ConfigError("time level " + std::to_string(m) + " not stored");
    const std::size_t slices = static_cast<std::size_t>(grid_.P) + 1;
    if (j == 0) return static_cast<std::size_t>(s) * slices + p;
    return ((static_cast<std::size_t>(s) * slices + p) * edges_ + (edge - 1)) * grid_.J + (j - 1);
}

double PdeSolution::at(int m, int edge, int j, int p) const {
    return j == 0 ? vertex_[index(m, edge, 0, p)] : edge_[index(m, edge, j, p)];
}

double& PdeSolution::at(int m, int edge, int j, int p) {
    return j == 0 ? vertex_[index(m, edge, 0, p)] : edge_[index(m, edge, j, p)];
}

double PdeSolution::value(double t, double x, int edge, double l) const {
    const int m = static_cast<int>(std::lround(t / dt()));
    if (m < 0 || m > grid_.M || std::abs(m * dt() - t) > 1e-9 * std::max(1.0, T_))
        throw ConfigError("query time not on the time grid");
    if (x < 0 || x > R_ * (1 + 1e-12) || l < 0 || l > K_ * (1 + 1e-12))
        throw ConfigError("query outside the truncated domain");
    const double fx = std::min(x / dx(), static_cast<double>(grid_.J));
    const double fl = std::min(l / dl(), static_cast<double>(grid_.P));
    const int j = std::min(static_cast<int>(fx), grid_.J - 1);
    const int p = std::min(static_cast<int>(fl), grid_.P - 1);
    const double wx = fx - j, wl = fl - p;
    return (1 - wx) * (1 - wl) * at(m, edge, j, p) + wx * (1 - wl) * at(m, edge, j + 1, p) +
           (1 - wx) * wl * at(m, edge, j, p + 1) + wx * wl * at(m, edge, j + 1, p + 1);
}

PdeSolution PdeSolution::sample(const PdeProblem& prob, const PdeGrid& grid,
                                const std::function<double(int, double, double, double)>& u) {
    std::vector<int> all(static_cast<std::size_t>(grid.M) + 1);
    for (int m = 0; m <= grid.M; ++m) all[m] = m;
    PdeSolution s(prob.coefficients.edges, prob.T, prob.R, prob.K, grid, all);
    for (int m = 0; m <= grid.M; ++m) {
        const double t = m * s.dt();
        for (int p = 0; p <= grid.P; ++p) {
            const double l = p * s.dl();
            s.at(m, 1, 0, p) = u(1, t, 0.0, l);
            for (int e = 1; e <= s.edges(); ++e)
                for (int j = 1; j <= grid.J; ++j) s.at(m, e, j, p) = u(e, t, j * s.dx(), l);
        }
    }
    return s;
}

namespace {

void check_problem(const PdeProblem& prob, const PdeGrid& grid) {
    const auto n = static_cast<std::size_t>(prob.coefficients.edges);
    if (prob.coefficients.edges < 2) throw ConfigError("PDE needs at least two edges");
    if (!(prob.T > 0) || !(prob.R > 0) || !(prob.K > 0)) throw ConfigError("T, R and K must be positive");
    if (grid.M < 1 || grid.J < 2 || grid.P < 1) throw ConfigError("grid needs M >= 1, J >= 2, P >= 1");
    if (prob.data.size() != n) throw ConfigError("data g needs one function per edge");
    if (!prob.source.empty() && prob.source.size() != n) throw ConfigError("source needs one function per edge");
    if (!prob.zeroth.empty() && prob.zeroth.size() != n) throw ConfigError("c needs one function per edge");
    if (!prob.ceiling.empty() && prob.ceiling.size() != n) throw ConfigError("psi needs one function per edge");
    if (!prob.zeroth.empty() && prob.direction == PdeDirection::backward)
        throw ConfigError("zeroth-order term is only defined in forward mode");
}

// d_s u = A u_xx + B u_x - C u + F with s running away from the data level.
struct Coeffs {
    double A, B, C, F;
};

struct Ops {
    const PdeProblem& prob;
    bool backward;

    Coeffs at(int e, double t, double x, double l) const {
        const auto& c = prob.coefficients;
        const double b = c.drift(e, t, x, l);
        const double s = c.diffusion(e, t, x, l);
        const double f = prob.source.empty() ? 0.0 : prob.source[e - 1](t, x, l);
        if (backward) return {0.5 * s * s, b, 0.0, f};
        const double cz = prob.zeroth.empty() ? 0.0 : prob.zeroth[e - 1](t, x, l);
        return {s, -b, cz, f};
    }

    double vertex_source(double t, double l) const {
        if (!prob.vertex_source) return 0.0;
        const double v = prob.vertex_source(t, l);
        return backward ? v : -v;
    }

    double ceiling(int e, double t, double x) const {
        if (prob.ceiling.empty()) return prob.data[e - 1](x, prob.K);
        return prob.ceiling[e - 1](t, x);
    }
};

struct Row {
    double lo, di, up;
};

// Implicit row: lo u_{j-1} + di u_j + up u_{j+1} = u_prev + ds F. Central drift
// differences unless the cell Peclet number exceeds one, then upwind.
Row make_row(const Coeffs& k, double ds, double dx) {
    const double d2 = k.A / (dx * dx);
    Row r{};
    if (std::abs(k.B) * dx <= 2 * k.A) {
        r.lo = -ds * (d2 - k.B / (2 * dx));
        r.up = -ds * (d2 + k.B / (2 * dx));
        r.di = 1 + ds * (2 * d2 + k.C);
    } else if (k.B > 0) {
        r.lo = -ds * d2;
        r.up = -ds * (d2 + k.B / dx);
        r.di = 1 + ds * (2 * d2 + k.B / dx + k.C);
    } else {
        r.lo = -ds * (d2 - k.B / dx);
        r.up = -ds * d2;
        r.di = 1 + ds * (2 * d2 - k.B / dx + k.C);
    }
    return r;
}

std::string where(int p, int m) {
    std::ostringstream os;
    os << "slice " << p << ", time " << m << ": ";
    return os.str();
}

void require_finite(double v, int p, int m, const char* what) {
    if (!std::isfinite(v)) throw EvalError(where(p, m) + "non-finite " + what);
}

}  // namespace

double compatibility_defect(const PdeProblem& prob, int samples) {
    const bool backward = prob.direction == PdeDirection::backward;
    const double t = backward ? prob.T : 0.0;
    const double eta = 1e-5 * std::max(1.0, prob.K);
    const auto& g = prob.data;
    double worst = 0.0;
    for (int k = 0; k < samples; ++k) {
        const double l = prob.K * k / (samples - 1);
        const double gl = (l < eta) ? (-3 * g[0](0, l) + 4 * g[0](0, l + eta) - g[0](0, l + 2 * eta)) / (2 * eta)
                                    : (g[0](0, l + eta) - g[0](0, l - eta)) / (2 * eta);
        const auto a = prob.coefficients.alpha(t, l);
        double flux = 0.0;
        for (int e = 0; e < prob.coefficients.edges; ++e)
            flux += a[e] * (-3 * g[e](0, l) + 4 * g[e](eta, l) - g[e](2 * eta, l)) / (2 * eta);
        double src = prob.vertex_source ? prob.vertex_source(t, l) : 0.0;
        if (!backward) src = -src;
        worst = std::max(worst, std::abs(gl + flux + src));
    }
    return worst;
}

PdeSolution solve(const PdeProblem& prob, const PdeGrid& grid, const SolveOptions& opts) {
    check_problem(prob, grid);
    const bool backward = prob.direction == PdeDirection::backward;
    const int M = grid.M, J = grid.J, P = grid.P, I = prob.coefficients.edges;
    const int m_data = backward ? M : 0;

    std::vector<int> keep = opts.keep;
    keep.push_back(0);
    keep.push_back(M);
    if (opts.keep_all)
        for (int m = 0; m <= M; ++m) keep.push_back(m);
    PdeSolution sol(I, prob.T, prob.R, prob.K, grid, keep);
    const double dt = sol.dt(), dx = sol.dx(), dl = sol.dl();
    const Ops ops{prob, backward};

    sol.compatibility_defect = compatibility_defect(prob);
    if (sol.compatibility_defect > 1e-4) {
        std::ostringstream os;
        os << "compatibility condition violated at the data level by " << sol.compatibility_defect;
        sol.warnings.push_back(os.str());
    }

    auto level_time = [&](int n) { return backward ? M - n : n; };

    // Vertex trace of the slice above, at every time level.
    std::vector<double> above(static_cast<std::size_t>(M) + 1), here(above.size());
    for (int m = 0; m <= M; ++m) {
        const double t = m * dt;
        above[m] = ops.ceiling(1, t, 0.0);
        if (sol.has_time(m)) {
            sol.at(m, 1, 0, P) = above[m];
            for (int e = 1; e <= I; ++e)
                for (int j = 1; j <= J; ++j) sol.at(m, e, j, P) = ops.ceiling(e, t, j * dx);
        }
    }

    std::vector<std::vector<double>> cur(I, std::vector<double>(J + 1)), v(I, std::vector<double>(J + 1)),
        w(I, std::vector<double>(J + 1));
    std::vector<double> cp(J + 1), dv(J + 1), dw(J + 1);
    std::vector<Row> rows(J + 1);

    for (int p = P - 1; p >= 0; --p) {
        const double l = p * dl;
        for (int e = 1; e <= I; ++e)
            for (int j = 1; j <= J; ++j) cur[e - 1][j] = prob.data[e - 1](j * dx, l);
        here[m_data] = prob.data[0](0.0, l);
        if (sol.has_time(m_data)) {
            sol.at(m_data, 1, 0, p) = here[m_data];
            for (int e = 1; e <= I; ++e)
                for (int j = 1; j <= J; ++j) sol.at(m_data, e, j, p) = cur[e - 1][j];
        }

        for (int n = 1; n <= M; ++n) {
            const int m = level_time(n);
            const double t = m * dt;
            const auto alpha = prob.coefficients.alpha(t, l);
            double denom = 1.0 / dl, num = above[m] / dl + ops.vertex_source(t, l);

            for (int e = 1; e <= I; ++e) {
                auto& u = cur[e - 1];
                for (int j = 1; j <= J; ++j) {
                    const Coeffs k = ops.at(e, t, j * dx, l);
                    rows[j] = make_row(k, dt, dx);
                    dv[j] = u[j] + dt * k.F;
                    dw[j] = 0.0;
                }
                rows[J].lo += rows[J].up;  // ghost node mirrors u_{J-1}
                rows[J].up = 0.0;
                dw[1] = -rows[1].lo;        // unit vertex value moved to the right-hand side

                // Thomas with two right-hand sides
                double piv = rows[1].di;
                if (!(std::abs(piv) > 1e-300)) throw EvalError(where(p, m) + "singular edge system");
                cp[1] = rows[1].up / piv;
                dv[1] /= piv;
                dw[1] /= piv;
                for (int j = 2; j <= J; ++j) {
                    piv = rows[j].di - rows[j].lo * cp[j - 1];
                    if (!(std::abs(piv) > 1e-300)) throw EvalError(where(p, m) + "singular edge system");
                    cp[j] = rows[j].up / piv;
                    dv[j] = (dv[j] - rows[j].lo * dv[j - 1]) / piv;
                    dw[j] = (dw[j] - rows[j].lo * dw[j - 1]) / piv;
                }
                auto& ve = v[e - 1];
                auto& we = w[e - 1];
                ve[J] = dv[J];
                we[J] = dw[J];
                for (int j = J - 1; j >= 1; --j) {
                    ve[j] = dv[j] - cp[j] * ve[j + 1];
                    we[j] = dw[j] - cp[j] * we[j + 1];
                }
                denom += alpha[e - 1] * (1.0 - we[1]) / dx;
                num += alpha[e - 1] * ve[1] / dx;
            }
            if (!(std::abs(denom) > 1e-300) || !std::isfinite(denom))
                throw EvalError(where(p, m) + "singular vertex-coupled system");
            const double U = num / denom;
            require_finite(U, p, m, "vertex value");
            here[m] = U;
            for (int e = 0; e < I; ++e)
                for (int j = 1; j <= J; ++j) cur[e][j] = v[e][j] + U * w[e][j];

            if (sol.has_time(m)) {
                sol.at(m, 1, 0, p) = U;
                for (int e = 1; e <= I; ++e)
                    for (int j = 1; j <= J; ++j) sol.at(m, e, j, p) = cur[e - 1][j];
            }
        }
        std::swap(above, here);
    }
    return sol;
}

namespace {

template <class Visit>
void visit_residuals(const PdeSolution& u, const PdeProblem& prob, Visit&& visit) {
    check_problem(prob, u.grid());
    const bool backward = prob.direction == PdeDirection::backward;
    const Ops ops{prob, backward};
    const int M = u.grid().M, J = u.grid().J, P = u.grid().P, I = u.edges();
    const double dt = u.dt(), dx = u.dx(), dl = u.dl();

    for (int m = 0; m <= M; ++m) {
        const int prev = backward ? m + 1 : m - 1;
        if (prev < 0 || prev > M || !u.has_time(m) || !u.has_time(prev)) continue;
        const double t = m * dt;
        for (int p = 0; p < P; ++p) {
            const double l = p * dl;
            const auto alpha = prob.coefficients.alpha(t, l);
            const double U = u.at(m, 1, 0, p);
            double kirch = (u.at(m, 1, 0, p + 1) - U) / dl + ops.vertex_source(t, l);
            for (int e = 1; e <= I; ++e) {
                kirch += alpha[e - 1] * (u.at(m, e, 1, p) - U) / dx;
                for (int j = 1; j <= J; ++j) {
                    const Coeffs k = ops.at(e, t, j * dx, l);
                    Row row = make_row(k, dt, dx);
                    const double left = u.at(m, e, j - 1, p);
                    const double right = j < J ? u.at(m, e, j + 1, p) : u.at(m, e, J - 1, p);
                    const double res =
                        (row.lo * left + row.di * u.at(m, e, j, p) + row.up * right - u.at(prev, e, j, p)) / dt -
                        k.F;
                    visit(ResidualNode{j < J ? ResidualNode::Kind::interior : ResidualNode::Kind::neumann, m, e, j, p,
                                       res});
                }
            }
            visit(ResidualNode{ResidualNode::Kind::vertex, m, 0, 0, p, kirch});
        }
    }
}

}  // namespace

ResidualReport residual(const PdeSolution& u, const PdeProblem& prob) {
    const double dt = u.dt(), dx = u.dx(), dl = u.dl();
    ResidualReport r;
    double si = 0, sv = 0, sn = 0;
    visit_residuals(u, prob, [&](const ResidualNode& n) {
        const double a = std::abs(n.value);
        switch (n.kind) {
        case ResidualNode::Kind::interior:
            r.interior_max = std::max(r.interior_max, a);
            si += a * a * dt * dx * dl;
            break;
        case ResidualNode::Kind::neumann:
            r.neumann_max = std::max(r.neumann_max, a);
            sn += a * a * dt * dl;
            break;
        case ResidualNode::Kind::vertex:
            r.vertex_max = std::max(r.vertex_max, a);
            sv += a * a * dt * dl;
            break;
        }
    });
    r.interior_l2 = std::sqrt(si);
    r.vertex_l2 = std::sqrt(sv);
    r.neumann_l2 = std::sqrt(sn);
    return r;
}

std::vector<ResidualNode> residual_nodes(const PdeSolution& u, const PdeProblem& prob, double threshold) {
    std::vector<ResidualNode> out;
    visit_residuals(u, prob, [&](const ResidualNode& n) {
        if (std::abs(n.value) > threshold) out.push_back(n);
    });
    return out;
}

}  // namespace spider
