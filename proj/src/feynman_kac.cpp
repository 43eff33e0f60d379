#include "spider/feynman_kac.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "spider/error.hpp"
#include "spider/parallel.hpp"
#include "spider/stats.hpp"

namespace spider {

FKProblem FKProblem::constant(int edges, double running, double vertex, double terminal) {
    FKProblem p;
    for (int e = 0; e < edges; ++e) {
        p.h.push_back([running](double, double, double) { return running; });
        p.g.push_back([terminal](double, double) { return terminal; });
    }
    p.h0 = [vertex](double, double) { return vertex; };
    return p;
}

void check_fk_problem(const FKProblem& prob, int edges, const SamplingPlan& plan) {
    const auto n = static_cast<std::size_t>(edges);
    if (prob.h.size() != n) throw ConfigError("running cost h needs one function per edge");
    if (prob.g.size() != n) throw ConfigError("terminal payoff g needs one function per edge");
    if (!prob.ceiling.empty() && prob.ceiling.size() != n) throw ConfigError("psi needs one function per edge");
    for (double l : plan.l) {
        const double g1 = prob.g[0](0.0, l);
        for (std::size_t e = 1; e < n; ++e)
            if (std::abs(prob.g[e](0.0, l) - g1) > 1e-9 * std::max(1.0, std::abs(g1))) {
                std::ostringstream os;
                os << "terminal payoff is not continuous at the vertex (l = " << l << ", edges 1 and " << e + 1 << ")";
                throw ConfigError(os.str());
            }
    }
    if (prob.h_bound <= 0.0) return;

    auto quotient = [](const std::vector<double>& axis, auto&& at) {
        double q = 0.0;
        for (std::size_t k = 1; k < axis.size(); ++k) {
            const double d = axis[k] - axis[k - 1];
            if (d > 0) q = std::max(q, std::abs(at(axis[k]) - at(axis[k - 1])) / d);
        }
        return q;
    };
    double worst = 0.0;
    for (std::size_t e = 0; e < n; ++e) {
        const auto& f = prob.h[e];
        for (double t : plan.t)
            for (double x : plan.x)
                for (double l : plan.l) {
                    const double qt = quotient(plan.t, [&](double s) { return f(s, x, l); });
                    const double qx = quotient(plan.x, [&](double y) { return f(t, y, l); });
                    const double ql = quotient(plan.l, [&](double m) { return f(t, x, m); });
                    worst = std::max(worst, std::abs(f(t, x, l)) + std::max({qt, qx, ql}));
                }
    }
    if (prob.h0)
        for (double t : plan.t)
            for (double l : plan.l) {
                const double qt = quotient(plan.t, [&](double s) { return prob.h0(s, l); });
                const double ql = quotient(plan.l, [&](double m) { return prob.h0(t, m); });
                worst = std::max(worst, std::abs(prob.h0(t, l)) + std::max(qt, ql));
            }
    if (worst > prob.h_bound) {
        std::ostringstream os;
        os << "running costs exceed |h| = " << prob.h_bound << " (sampled " << worst << ")";
        throw ConfigError(os.str());
    }
}

FKEstimate fk_estimate(const FKProblem& prob, const CoefficientSet& c, const FKQuery& q, const SimConfig& cfg) {
    check_config(cfg, c);
    if (!(q.t < cfg.T)) throw ConfigError("query time must be before T");
    if (prob.h.size() != static_cast<std::size_t>(c.edges) || prob.g.size() != static_cast<std::size_t>(c.edges))
        throw ConfigError("FK data need one function per edge");
    const std::size_t K = cfg.steps_from(q.t);
    const SpiderState init{q.t, q.x, q.i, q.l, false};
    const double h = cfg.h;

    FKEstimate est;
    est.query = q;
    est.n_paths = cfg.n_paths;
    est.config_hash = config_hash(cfg);
    est.samples = map_indices<double>(cfg.n_paths, cfg.workers, [&](std::size_t k) {
        try {
            Stepper st(c, cfg, init, k);
            double acc = 0.0;
            for (std::size_t j = 0; j < K; ++j) {
                const SpiderState s = st.state();
                acc += prob.h[s.i.value - 1](s.t, s.x, s.l) * h;
                const Step step = st.advance();
                if (prob.h0 && step.state.l != s.l) acc += prob.h0(s.t, s.l) * (step.state.l - s.l);
            }
            const SpiderState& e = st.state();
            acc += prob.g[e.i.value - 1](e.x, e.l);
            if (!std::isfinite(acc)) throw EvalError("non-finite functional");
            return acc;
        } catch (const EvalError& e) {
            throw EvalError("path " + std::to_string(k) + ": " + e.what());
        }
    });
    RunningStats rs;
    for (double v : est.samples) rs.add(v);
    est.mean = rs.mean;
    est.std_error = rs.stderr_mean();
    return est;
}

PdeProblem fk_pde_problem(const FKProblem& prob, const CoefficientSet& c, double T, double R, double K) {
    PdeProblem p;
    p.coefficients = c;
    p.direction = PdeDirection::backward;
    p.T = T;
    p.R = R;
    p.K = K;
    p.source = prob.h;
    p.vertex_source = prob.h0;
    p.data = prob.g;
    p.ceiling = prob.ceiling;
    return p;
}

FKComparison fk_vs_pde(const FKProblem& prob, const CoefficientSet& c, const std::vector<FKQuery>& queries,
                       const SimConfig& cfg, const PdeGrid& grid, double R, double K) {
    if (queries.empty()) throw ConfigError("no queries");
    FKComparison out;
    out.grid = grid;
    double xmax = 0.0, lmax = 0.0;
    for (const auto& q : queries) {
        xmax = std::max(xmax, q.x);
        lmax = std::max(lmax, q.l);
    }
    out.R = R > 0 ? R : default_R(xmax, c.bounds.sigma_bound, cfg.T);
    out.K = K > 0 ? K : default_K(lmax, cfg.T);

    std::vector<int> keep_c, keep_f;
    for (const auto& q : queries) {
        if (q.x > 0.9 * out.R || q.l > 0.9 * out.K)
            throw ConfigError("query lies within 10% of the truncation boundary");
        const double m = q.t / cfg.T * grid.M;
        if (std::abs(m - std::round(m)) > 1e-9) throw ConfigError("query time is not on the PDE time grid");
        keep_c.push_back(static_cast<int>(std::lround(m)));
        keep_f.push_back(2 * static_cast<int>(std::lround(m)));
    }

    const PdeProblem pp = fk_pde_problem(prob, c, cfg.T, out.R, out.K);
    const PdeSolution coarse = solve(pp, grid, {false, keep_c});
    const PdeSolution fine = solve(pp, grid.refined(), {false, keep_f});
    out.warnings = fine.warnings;

    out.pass = true;
    for (const auto& q : queries) {
        FKComparisonRow row;
        row.query = q;
        const FKEstimate est = fk_estimate(prob, c, q, cfg);
        row.mc = est.mean;
        row.mc_stderr = est.std_error;
        row.pde = fine.value(q.t, q.x, q.i.value, q.l);
        row.pde_coarse = coarse.value(q.t, q.x, q.i.value, q.l);
        row.grid_budget = std::abs(row.pde - row.pde_coarse);
        row.diff = std::abs(row.mc - row.pde);
        row.tolerance = 3.0 * row.mc_stderr + row.grid_budget + 1e-9;
        row.pass = row.diff <= row.tolerance;
        out.pass = out.pass && row.pass;
        out.rows.push_back(row);
    }
    return out;
}

}  // namespace spider
