#include "spider/localtime.hpp"

#include <algorithm>
#include <cmath>

#include "spider/error.hpp"

namespace spider {

std::size_t ExcursionDecomposition::count(std::size_t k) const {
    return static_cast<std::size_t>(std::upper_bound(tau.begin(), tau.end(), k) - tau.begin());
}

std::size_t grid_index(const SpiderPath& p, double t) {
    if (t < p.t0) return 0;
    const double k = std::floor((t - p.t0) / p.h + 1e-9);
    return std::min(static_cast<std::size_t>(k), p.steps());
}

ExcursionDecomposition excursion_decompose(const SpiderPath& p, double eps) {
    if (!(eps > p.delta_activity()))
        throw ConfigError("eps = " + std::to_string(eps) + " is not above the vertex-activity radius " +
                          std::to_string(p.delta_activity()));
    ExcursionDecomposition d;
    d.eps = eps;
    const std::size_t n = p.x.size();
    std::size_t k = 0;
    for (;;) {
        while (k < n && p.x[k] < eps) ++k;
        if (k >= n) break;
        d.theta.push_back(k);
        ++k;
        while (k < n && !p.contact[k]) ++k;
        if (k >= n) break;
        d.tau.push_back(k);
        ++k;
    }
    return d;
}

LocalTimeEstimate downcrossing_estimate(const SpiderPath& p, double eps, std::span<const double> times) {
    const auto d = excursion_decompose(p, eps);
    LocalTimeEstimate e{LocalTimeMethod::downcrossing, eps, {times.begin(), times.end()}, {}};
    for (double t : times) e.values.push_back(eps * static_cast<double>(d.count(grid_index(p, t))));
    return e;
}

double downcrossing_estimate(const SpiderPath& p, double eps, double t) {
    return downcrossing_estimate(p, eps, std::span<const double>(&t, 1)).values[0];
}

double excursion_functional(const SpiderPath& p, const TestFunction& f, double eps, double t) {
    const auto d = excursion_decompose(p, eps);
    const std::size_t N = d.count(grid_index(p, t));
    double sum = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
        const std::size_t tau = d.tau[n];
        const double f_tau = f.value(p.edge[tau], p.t(tau), 0.0, p.l[tau]);
        const std::size_t th = n + 1 < d.theta.size() ? d.theta[n + 1] : p.steps();
        const double f_theta = f.value(p.edge[th], p.t(th), eps, p.l[th]);
        sum += f_theta - f_tau;
    }
    return sum;
}

double vertex_integral(const SpiderPath& p, const CoefficientSet& c, const TestFunction& f, double t) {
    const std::size_t K = grid_index(p, t);
    double sum = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        const double dl = p.l[k + 1] - p.l[k];
        if (dl == 0.0) continue;
        const double tk = p.t(k), lk = p.l[k];
        const auto a = c.alpha(tk, lk);
        double g = f.dl(1, tk, 0.0, lk);
        for (int j = 1; j <= c.edges; ++j) g += a[j - 1] * f.dx(j, tk, 0.0, lk);
        sum += g * dl;
    }
    return sum;
}

LocalTimeEstimate occupation_estimate(const SpiderPath& p, const CoefficientSet& c, double eps,
                                      std::span<const double> times, const std::vector<int>& subset) {
    if (!(eps > 0.0)) throw ConfigError("eps must be positive");
    if (subset.empty()) throw ConfigError("edge subset must be nonempty");
    for (int j : subset)
        if (j < 1 || j > c.edges) throw ConfigError("edge subset entry out of range");
    std::vector<double> order(times.begin(), times.end());
    LocalTimeEstimate e{LocalTimeMethod::occupation, eps, order, {}};
    std::vector<double> per_edge(c.edges, 0.0);
    std::size_t k = 0;
    for (double t : times) {
        const std::size_t K = grid_index(p, t);
        if (K < k) throw ConfigError("occupation query times must be nondecreasing");
        for (; k < K; ++k) {
            if (p.x[k] > eps) continue;
            const int j = p.edge[k];
            const double s = c.diffusion(j, p.t(k), 0.0, p.l[k]);
            per_edge[j - 1] += s * s * p.h;
        }
        double v = 0.0;
        for (int j : subset) v += per_edge[j - 1];
        e.values.push_back(v / (2.0 * eps));
    }
    return e;
}

double occupation_estimate(const SpiderPath& p, const CoefficientSet& c, double eps, double t,
                           const std::vector<int>& subset) {
    return occupation_estimate(p, c, eps, std::span<const double>(&t, 1), subset).values[0];
}

SpiderPath skorokhod_oracle(std::span<const double> increments, double h) {
    SpiderPath p;
    p.h = h;
    p.shell_radius = 0.0;
    p.sigma_bound = 1.0;
    const std::size_t K = increments.size();
    p.x.reserve(K + 1);
    p.l.reserve(K + 1);
    p.x.push_back(0.0);
    p.l.push_back(0.0);
    p.edge.assign(K + 1, 1);
    p.contact.assign(K + 1, 0);
    double y = 0.0, m = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        y += increments[k];
        if (y < m) {
            m = y;
            p.contact[k + 1] = 1;
        }
        p.x.push_back(y - m);
        p.l.push_back(-m);
    }
    return p;
}

std::vector<double> brownian_increments(std::uint64_t seed, std::uint64_t path_index, double h, std::size_t steps) {
    PathStream s(seed, path_index);
    std::vector<double> v(steps);
    const double sh = std::sqrt(h);
    for (std::size_t k = 0; k < steps; ++k) v[k] = sh * s.normal(k);
    return v;
}

}  // namespace spider
