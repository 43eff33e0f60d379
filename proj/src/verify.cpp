#include "spider/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "spider/error.hpp"
#include "spider/parallel.hpp"
#include "spider/philox.hpp"
#include "spider/stats.hpp"

namespace spider {

namespace {

constexpr double nan_v = std::numeric_limits<double>::quiet_NaN();

std::string fmt(const char* prefix, double v) {
    std::ostringstream os;
    os << prefix << v;
    return os.str();
}

std::size_t grid_steps(double span, double h, const char* what) {
    const double k = std::round(span / h);
    if (!(span >= 0.0) || std::abs(k * h - span) > 1e-9 * std::max(1.0, span))
        throw ConfigError(std::string(what) + " is not a nonnegative multiple of h");
    return static_cast<std::size_t>(k);
}

// Left-endpoint pieces of the Ito / martingale decomposition on one step.
struct StepTerms {
    double drift = 0.0;   // (f_t + b f_x + sigma^2 f_xx / 2) h
    double noise = 0.0;   // sigma f_x sqrt(h) xi
    double vertex = 0.0;  // (f_l + sum alpha_j f_x,j)(t, 0, l) dl
};

// `edge` is the edge the step was taken on (the freshly drawn one for a step from x = 0).
StepTerms step_terms(const CoefficientSet& c, const TestFunction& f, int edge, double t, double x, double l,
                     double h, double xi, double dl) {
    StepTerms r;
    const Jet j = f.jet(edge, t, x, l);
    const double b = c.drift(edge, t, x, l);
    const double s = c.diffusion(edge, t, x, l);
    r.drift = (j.ft + b * j.fx + 0.5 * s * s * j.fxx) * h;
    r.noise = s * j.fx * std::sqrt(h) * xi;
    if (dl != 0.0) {
        const auto a = c.alpha(t, l);
        double g = 0.0;
        for (int e = 1; e <= c.edges; ++e) {
            const Jet v = f.jet(e, t, 0.0, l);
            g += a[e - 1] * v.fx;
            if (e == 1) g += v.fl;
        }
        r.vertex = g * dl;
    }
    return r;
}

int step_edge(const SpiderPath& p, std::size_t k) { return p.x[k] == 0.0 ? p.edge[k + 1] : p.edge[k]; }

}  // namespace

bool ReportRow::recompute() const {
    if (kind == Kind::info) return true;
    return estimate >= lo && estimate <= hi;
}

ReportRow check_row(std::string label, double estimate, double std_error, double target, double lo, double hi) {
    ReportRow r{std::move(label), estimate, std_error, target, lo, hi, ReportRow::Kind::check, false};
    r.pass = r.recompute();
    return r;
}

ReportRow advisory_row(std::string label, double estimate, double std_error, double target, double lo, double hi) {
    ReportRow r = check_row(std::move(label), estimate, std_error, target, lo, hi);
    r.kind = ReportRow::Kind::advisory;
    return r;
}

ReportRow info_row(std::string label, double estimate, double std_error) {
    return {std::move(label), estimate, std_error, nan_v, nan_v, nan_v, ReportRow::Kind::info, true};
}

ReportRow within_row(std::string label, double estimate, double std_error, double target, double slack) {
    const double tol = 3.0 * std_error + slack;
    return check_row(std::move(label), estimate, std_error, target, target - tol, target + tol);
}

void EstimatorReport::add(ReportRow row) {
    if (row.kind == ReportRow::Kind::check && !row.pass) pass = false;
    rows.push_back(std::move(row));
}

const ReportRow& EstimatorReport::row(const std::string& label) const {
    for (const auto& r : rows)
        if (r.label == label) return r;
    throw ConfigError("no report row '" + label + "'");
}

bool EstimatorReport::recompute_pass() const {
    for (const auto& r : rows)
        if (r.kind == ReportRow::Kind::check && !r.recompute()) return false;
    return true;
}

bool StoppingSpec::fires(const SpiderState& s, bool contact, double h) const {
    switch (kind) {
    case Kind::hitting: return s.x >= level;
    case Kind::fixed_time: return s.t >= time - 0.5 * h;
    case Kind::vertex_after: return s.t >= time - 0.5 * h && (contact || s.x == 0.0);
    }
    return false;
}

std::optional<std::size_t> StoppingSpec::index(const SpiderPath& p) const {
    for (std::size_t k = 0; k < p.x.size(); ++k) {
        const SpiderState s{p.t(k), p.x[k], {p.edge[k]}, p.l[k], false};
        if (fires(s, k > 0 && p.contact[k], p.h)) return k;
    }
    return std::nullopt;
}

double martingale_increment(const SpiderPath& p, const CoefficientSet& c, const TestFunction& f, double s,
                            double s_prime) {
    const std::size_t a = grid_steps(s - p.t0, p.h, "window start"), b = grid_steps(s_prime - p.t0, p.h, "window end");
    if (!(a < b) || b > p.steps()) throw ConfigError("window must satisfy t0 <= s < s' <= T");
    double comp = 0.0;
    for (std::size_t k = a; k < b; ++k) {
        const auto t = step_terms(c, f, step_edge(p, k), p.t(k), p.x[k], p.l[k], p.h, 0.0, p.l[k + 1] - p.l[k]);
        comp += t.drift + t.vertex;
    }
    return f.value(p.edge[b], p.t(b), p.x[b], p.l[b]) - f.value(p.edge[a], p.t(a), p.x[a], p.l[a]) - comp;
}

EstimatorReport martingale_residual(const CoefficientSet& c, const SpiderState& init, const SimConfig& cfg,
                                    const std::vector<TestFunction>& battery, double s, double s_prime) {
    check_config(cfg, c);
    if (battery.empty()) throw ConfigError("empty test-function battery");
    for (const auto& f : battery)
        if (f.edges() != c.edges) throw ConfigError("test function '" + f.name() + "' has the wrong edge count");
    const std::size_t a = grid_steps(s - init.t, cfg.h, "window start");
    const std::size_t b = grid_steps(s_prime - init.t, cfg.h, "window end");
    if (!(a < b) || s_prime > cfg.T + 1e-12) throw ConfigError("window must satisfy t0 <= s < s' <= T");
    const std::size_t nf = battery.size();

    auto per_path = map_indices<std::vector<double>>(cfg.n_paths, cfg.workers, [&](std::size_t k) {
        std::vector<double> inc(nf, 0.0), start(nf, 0.0);
        try {
            Stepper st(c, cfg, init, k);
            for (std::size_t j = 0; j < b; ++j) {
                const SpiderState pre = st.state();
                if (j == a)
                    for (std::size_t q = 0; q < nf; ++q) start[q] = battery[q].value(pre.i.value, pre.t, pre.x, pre.l);
                const Step step = st.advance();
                if (j < a) continue;
                const int e = pre.x == 0.0 ? step.state.i.value : pre.i.value;
                for (std::size_t q = 0; q < nf; ++q) {
                    const auto t = step_terms(c, battery[q], e, pre.t, pre.x, pre.l, cfg.h, 0.0, step.dl);
                    inc[q] -= t.drift + t.vertex;
                }
            }
            const SpiderState& end = st.state();
            for (std::size_t q = 0; q < nf; ++q)
                inc[q] += battery[q].value(end.i.value, end.t, end.x, end.l) - start[q];
        } catch (const EvalError& e) {
            throw EvalError("path " + std::to_string(k) + ", " + e.what());
        }
        return inc;
    });

    EstimatorReport rep;
    rep.name = "martingale";
    rep.n = cfg.n_paths;
    rep.seed = cfg.seed;
    rep.config_hash = config_hash(cfg);
    const double budget = martingale_bias_c * std::sqrt(cfg.h);
    for (std::size_t q = 0; q < nf; ++q) {
        RunningStats rs;
        for (const auto& v : per_path) rs.add(v[q]);
        const std::string label = battery[q].name().empty() ? "f" + std::to_string(q + 1) : battery[q].name();
        rep.add(within_row(label, rs.mean, rs.stderr_mean(), 0.0, budget));
    }
    rep.notes.push_back(fmt("bias budget C sqrt(h) = ", budget));
    return rep;
}

double ito_residual(const SpiderPath& p, const CoefficientSet& c, const TestFunction& f) {
    if (p.noise.size() < p.steps()) throw ConfigError("path has no stored gaussian increments");
    const double f0 = f.value(p.edge[0], p.t(0), p.x[0], p.l[0]);
    double rhs = 0.0, worst = 0.0;
    for (std::size_t k = 0; k < p.steps(); ++k) {
        const auto t = step_terms(c, f, step_edge(p, k), p.t(k), p.x[k], p.l[k], p.h, p.noise[k], p.l[k + 1] - p.l[k]);
        rhs += t.noise + t.drift + t.vertex;
        const double lhs = f.value(p.edge[k + 1], p.t(k + 1), p.x[k + 1], p.l[k + 1]) - f0;
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    return worst;
}

std::vector<double> coarsen_gaussians(std::span<const double> fine, std::size_t ratio) {
    if (ratio == 0) throw ConfigError("coarsening ratio must be positive");
    std::vector<double> out(fine.size() / ratio);
    const double scale = 1.0 / std::sqrt(static_cast<double>(ratio));
    for (std::size_t j = 0; j < out.size(); ++j) {
        double s = 0.0;
        for (std::size_t r = 0; r < ratio; ++r) s += fine[j * ratio + r];
        out[j] = s * scale;
    }
    return out;
}

ScatteringResult scattering_distribution(const CoefficientSet& c, double t, double l, double delta, std::size_t n,
                                         const SimConfig& cfg) {
    check_config(cfg, c);
    if (n < 10000) throw ConfigError("scattering needs at least 1e4 excursions");
    if (cfg.policy == VertexPolicy::shell && delta < 2 * cfg.shell_radius)
        throw ConfigError("scattering level must be at least twice the shell radius");
    const SpiderState init{t, 0.0, {1}, l, false};
    auto hits = map_indices<HitResult>(n, cfg.workers, [&](std::size_t k) { return first_hit(c, init, cfg, delta, k); });

    ScatteringResult r;
    r.n = n;
    r.counts.assign(c.edges, 0);
    for (const auto& h : hits) {
        if (h.censored)
            ++r.censored;
        else
            ++r.counts[h.edge.value - 1];
    }
    r.alpha = c.alpha(t, l);
    auto& rep = r.report;
    rep.name = "scatter";
    rep.n = n;
    rep.seed = cfg.seed;
    rep.config_hash = config_hash(cfg);
    const double hit = static_cast<double>(n - r.censored);
    for (int e = 0; e < c.edges; ++e) {
        const double f = hit > 0 ? r.counts[e] / hit : 0.0;
        const double se = hit > 0 ? std::sqrt(f * (1 - f) / hit) : 0.0;
        rep.add(within_row("edge " + std::to_string(e + 1), f, se, r.alpha[e]));
    }
    rep.add(info_row("censored fraction", r.censored / static_cast<double>(n)));
    if (hit == 0) rep.add(check_row("hits", 0, 0, 1, 1, std::numeric_limits<double>::max()));
    return r;
}

ExitStats mean_exit_stats(const CoefficientSet& c, double t, double l, const std::vector<double>& deltas,
                          std::size_t n, const SimConfig& cfg) {
    check_config(cfg, c);
    if (deltas.empty()) throw ConfigError("empty delta list");
    const SpiderState init{t, 0.0, {1}, l, false};
    ExitStats out;
    for (double d : deltas) {
        if (cfg.policy == VertexPolicy::shell && d < 2 * cfg.shell_radius)
            throw ConfigError("exit level must be at least twice the shell radius");
        auto hits = map_indices<HitResult>(n, cfg.workers, [&](std::size_t k) { return first_hit(c, init, cfg, d, k); });
        RunningStats lr, tr;
        ExitRow row;
        row.delta = d;
        for (const auto& h : hits) {
            if (h.censored) {
                ++row.censored;
                continue;
            }
            lr.add((h.l - l) / d);
            tr.add((h.theta - t) / (d * d));
        }
        row.l_ratio = lr.mean;
        row.l_ratio_se = lr.stderr_mean();
        row.theta_ratio = tr.mean;
        row.theta_ratio_se = tr.stderr_mean();
        out.rows.push_back(row);
    }
    auto& rep = out.report;
    rep.name = "exitstats";
    rep.n = n;
    rep.seed = cfg.seed;
    rep.config_hash = config_hash(cfg);
    std::size_t smallest = 0;
    for (std::size_t k = 0; k < out.rows.size(); ++k) {
        const auto& r = out.rows[k];
        rep.add(info_row(fmt("l_ratio delta=", r.delta), r.l_ratio, r.l_ratio_se));
        rep.add(info_row(fmt("theta_ratio delta=", r.delta), r.theta_ratio, r.theta_ratio_se));
        rep.add(info_row(fmt("censored delta=", r.delta), static_cast<double>(r.censored)));
        if (r.delta < out.rows[smallest].delta) smallest = k;
        if (k > 0) {
            const double q = r.theta_ratio / out.rows[k - 1].theta_ratio;
            rep.add(check_row(fmt("theta_ratio successive delta=", r.delta), q, 0.0, 1.0, 0.5, 2.0));
        }
    }
    const auto& s = out.rows[smallest];
    rep.add(check_row(fmt("l_ratio at smallest delta=", s.delta), s.l_ratio, s.l_ratio_se, 1.0, 0.9, 1.1));
    return out;
}

double reflected_gaussian_cdf(double delta, double t) { return std::erf(delta / std::sqrt(2.0 * t)); }

AtomResult atom_test(std::span<const double> x_t, double t, const std::vector<double>& deltas,
                     const std::function<double(double)>& oracle) {
    if (!(t > 0)) throw ConfigError("atom test needs t > 0");
    if (deltas.empty() || x_t.empty()) throw ConfigError("atom test needs samples and a delta grid");
    for (std::size_t k = 1; k < deltas.size(); ++k)
        if (!(deltas[k] < deltas[k - 1])) throw ConfigError("delta grid must be decreasing");
    AtomResult out;
    const double n = static_cast<double>(x_t.size());
    double num = 0.0, den = 0.0;
    for (double d : deltas) {
        AtomRow r;
        r.delta = d;
        r.p = std::count_if(x_t.begin(), x_t.end(), [d](double x) { return x <= d; }) / n;
        r.se = std::sqrt(r.p * (1 - r.p) / n);
        r.oracle = oracle ? oracle(d) : nan_v;
        num += r.p * d;
        den += d * d;
        out.rows.push_back(r);
    }
    out.c_fit = num / den;
    double rmax = 0.0, rmin = std::numeric_limits<double>::max();
    for (const auto& r : out.rows) {
        rmax = std::max(rmax, r.p / r.delta);
        rmin = std::min(rmin, r.p / r.delta);
    }
    out.c_spread = rmax == 0.0 ? 1.0 : (rmin > 0 ? rmax / rmin : std::numeric_limits<double>::infinity());

    auto& rep = out.report;
    rep.name = "atom";
    rep.n = x_t.size();
    std::size_t violations = 0;
    for (std::size_t k = 0; k < out.rows.size(); ++k) {
        const auto& r = out.rows[k];
        if (k > 0 && r.p > out.rows[k - 1].p) ++violations;
        rep.add(check_row(fmt("P(x<=delta) delta=", r.delta), r.p, r.se, out.c_fit * r.delta, 0.0,
                          out.c_fit * r.delta + 3 * r.se));
        if (oracle) rep.add(within_row(fmt("oracle delta=", r.delta), r.p, r.se, r.oracle));
    }
    rep.add(check_row("monotone violations", static_cast<double>(violations), 0.0, 0.0, 0.0, 0.0));
    rep.add(info_row("c_fit", out.c_fit));
    rep.add(check_row("c_spread", out.c_spread, 0.0, 1.0, 0.0, 2.0));
    return out;
}

MarkovResult strong_markov_test(const CoefficientSet& c, const SpiderState& init, const StoppingSpec& spec,
                                const PathFunctional& functional, double lag, const SimConfig& cfg) {
    check_config(cfg, c);
    const std::size_t K = cfg.steps_from(init.t);
    const std::size_t lag_steps = grid_steps(lag, cfg.h, "lag");
    SimConfig restart = cfg;
    restart.seed = splitmix64(cfg.seed ^ 0x9e3779b97f4a7c15ULL);

    struct Pair {
        double a = 0.0, b = 0.0;
        bool censored = true;
    };
    auto pairs = map_indices<Pair>(cfg.n_paths, cfg.workers, [&](std::size_t k) {
        Pair out;
        try {
            Stepper st(c, cfg, init, k);
            bool contact = false;
            std::size_t j = 0;
            while (!spec.fires(st.state(), contact, cfg.h)) {
                if (j == K) return out;
                contact = st.advance().contact;
                ++j;
            }
            if (j + lag_steps > K) return out;
            const SpiderState at_tau = st.state();
            for (std::size_t q = 0; q < lag_steps; ++q) st.advance();
            Stepper fresh(c, restart, at_tau, k);
            for (std::size_t q = 0; q < lag_steps; ++q) fresh.advance();
            const auto& sa = st.state();
            const auto& sb = fresh.state();
            out.a = functional(sa.x, sa.i.value, sa.l);
            out.b = functional(sb.x, sb.i.value, sb.l);
            out.censored = false;
        } catch (const EvalError& e) {
            throw EvalError("path " + std::to_string(k) + ", " + e.what());
        }
        return out;
    });

    MarkovResult r;
    for (const auto& p : pairs) {
        if (p.censored) {
            ++r.censored;
            continue;
        }
        r.continued.push_back(p.a);
        r.restarted.push_back(p.b);
    }
    if (!r.continued.empty()) {
        const auto ks = ks_two_sample(r.continued, r.restarted);
        r.ks = ks.statistic;
        r.p_value = ks.p_value;
    }
    auto& rep = r.report;
    rep.name = "markov";
    rep.n = cfg.n_paths;
    rep.seed = cfg.seed;
    rep.config_hash = config_hash(cfg);
    const double cens = cfg.n_paths ? r.censored / static_cast<double>(cfg.n_paths) : 0.0;
    rep.add(info_row("ks statistic", r.ks));
    rep.add(check_row("ks p-value", r.p_value, 0.0, 1.0, 0.01, 1.0));
    rep.add(check_row("censored fraction", cens, 0.0, 0.0, 0.0, 0.2));
    if (r.continued.empty()) rep.add(check_row("uncensored paths", 0, 0, 1, 1, std::numeric_limits<double>::max()));
    return r;
}

}  // namespace spider
