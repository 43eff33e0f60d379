#include "spider/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "spider/error.hpp"
#include "spider/hash.hpp"
#include "spider/parallel.hpp"

namespace spider {

const char* policy_name(VertexPolicy p) { return p == VertexPolicy::reflection ? "reflection" : "shell"; }

std::string config_hash(const SimConfig& cfg) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "h=%.17g;T=%.17g;shell=%.17g;policy=%s;n=%zu;seed=%llu", cfg.h, cfg.T,
                  cfg.shell_radius, policy_name(cfg.policy), cfg.n_paths, static_cast<unsigned long long>(cfg.seed));
    return hex64(fnv1a64(buf));
}

std::size_t SimConfig::steps_from(double t0) const {
    const double span = T - t0;
    const double k = std::round(span / h);
    if (!(span >= 0.0) || std::abs(k * h - span) > 1e-9 * std::max(1.0, std::abs(T)))
        throw ConfigError("horizon " + std::to_string(T) + " minus start time " + std::to_string(t0) +
                          " is not a nonnegative multiple of h = " + std::to_string(h));
    return static_cast<std::size_t>(k);
}

void check_config(const SimConfig& cfg, const CoefficientSet& c) {
    if (!(cfg.h > 0.0) || !std::isfinite(cfg.h)) throw ConfigError("step size h must be positive");
    if (!(cfg.T > 0.0) || !std::isfinite(cfg.T)) throw ConfigError("horizon T must be positive");
    if (!(cfg.shell_radius > 0.0)) throw ConfigError("shell radius must be positive");
    if (cfg.policy == VertexPolicy::shell) {
        const double sb = c.bounds.sigma_bound;
        if (cfg.h > cfg.shell_radius * cfg.shell_radius / (10.0 * sb * sb))
            throw ConfigError("shell policy needs h <= shell_radius^2 / (10 sigma_bound^2)");
    }
}

StepOutcome step_interior(const SpiderState& s, const CoefficientSet& c, double h, double gaussian) {
    if (!std::isfinite(gaussian)) throw EvalError("non-finite gaussian increment");
    const int e = s.i.value;
    const double b = c.drift(e, s.t, s.x, s.l);
    const double sig = c.diffusion(e, s.t, s.x, s.l);
    const double y = s.x + b * h + sig * std::sqrt(h) * gaussian;
    if (!std::isfinite(y)) throw EvalError("non-finite proposal");
    StepOutcome out;
    out.proposal = y;
    out.pre = s;
    out.state = s;
    out.state.t = s.t + h;
    out.state.x = y;
    out.contact = y <= 0.0;
    return out;
}

namespace {

EdgeIndex inverse_cdf(const std::vector<double>& w, double uniform) {
    double cum = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        cum += w[i];
        if (uniform < cum) return {static_cast<int>(i) + 1};
    }
    return {static_cast<int>(w.size())};
}

std::vector<double> vertex_sigma(const CoefficientSet& c, double t, double l) {
    std::vector<double> s(c.edges);
    for (int e = 1; e <= c.edges; ++e) {
        s[e - 1] = c.diffusion(e, t, 0.0, l);
        if (!(s[e - 1] > 0.0) || !std::isfinite(s[e - 1])) throw EvalError("non-positive sigma at the vertex");
    }
    return s;
}

}  // namespace

EdgeIndex sample_edge(const CoefficientSet& c, double t, double l, double uniform) {
    return inverse_cdf(c.alpha(t, l), uniform);
}

EdgeIndex sample_edge_reflection(const CoefficientSet& c, double t, double l, double uniform) {
    auto w = c.alpha(t, l);
    const auto s = vertex_sigma(c, t, l);
    if (std::all_of(s.begin(), s.end(), [&](double v) { return v == s[0]; })) return inverse_cdf(w, uniform);
    double total = 0.0;
    for (int e = 0; e < c.edges; ++e) total += w[e] /= s[e];
    for (auto& v : w) v /= total;
    return inverse_cdf(w, uniform);
}

SpiderState resolve_vertex(const StepOutcome& out, const CoefficientSet& c, VertexPolicy policy, double uniform) {
    const double y = out.proposal;
    SpiderState s = out.state;
    if (policy == VertexPolicy::reflection) {
        const double t = out.pre.t, l = out.pre.l;
        s.i = sample_edge_reflection(c, t, l, uniform);
        const int in = out.pre.i.value, to = s.i.value;
        const double ratio = in == to ? 1.0 : c.diffusion(to, t, 0.0, l) / c.diffusion(in, t, 0.0, l);
        s.x = -y * ratio;
        s.l = out.state.l + s.x - y;
    } else {
        s.i = sample_edge(c, out.pre.t, out.pre.l, uniform);
        s.x = 0.0;
        s.l = out.state.l - y;
        s.in_shell = true;
    }
    return s;
}

Stepper::Stepper(const CoefficientSet& c, const SimConfig& cfg, const SpiderState& init, std::uint64_t path_index)
    : c_(c), cfg_(cfg), t0_(init.t), sqrt_h_(std::sqrt(cfg.h)), s_(init), rng_(cfg.seed, path_index) {
    if (!(init.x >= 0.0) || !(init.l >= 0.0)) throw ConfigError("start state needs x >= 0 and l >= 0");
    if (init.i.value < 1 || init.i.value > c.edges) throw ConfigError("start edge out of range");
}

Stepper::Stepper(const CoefficientSet& c, const SimConfig& cfg, const SpiderState& init, std::uint64_t path_index,
                 std::span<const double> gaussians)
    : Stepper(c, cfg, init, path_index) {
    fixed_ = gaussians;
}

Step Stepper::advance() {
    double xi;
    if (fixed_.empty()) {
        xi = rng_.normal(k_);
    } else {
        if (k_ >= fixed_.size()) throw EvalError("supplied gaussian increments exhausted");
        xi = fixed_[k_];
    }
    const double h = cfg_.h;
    const double t_next = t0_ + static_cast<double>(k_ + 1) * h;
    Step st;
    st.gaussian = xi;
    SpiderState n = s_;
    try {
        auto radial = [&](int e) {
            // projected step on a fixed edge, used inside the shell
            const double y = n.x + c_.drift(e, n.t, n.x, n.l) * h + c_.diffusion(e, n.t, n.x, n.l) * sqrt_h_ * xi;
            if (!std::isfinite(y)) throw EvalError("non-finite proposal");
            if (y > 0.0) {
                n.x = y;
            } else {
                n.x = 0.0;
                n.l -= y;
                st.contact = true;
            }
            if (n.x >= cfg_.shell_radius) n.in_shell = false;
        };
        if (s_.in_shell) {
            radial(s_.i.value);
        } else if (s_.x == 0.0) {
            if (cfg_.policy == VertexPolicy::shell) {
                n.i = sample_edge(c_, s_.t, s_.l, rng_.uniform(k_));
                n.in_shell = true;
                radial(n.i.value);
            } else {
                n.i = sample_edge_reflection(c_, s_.t, s_.l, rng_.uniform(k_));
                const int e = n.i.value;
                const double y = c_.drift(e, s_.t, 0.0, s_.l) * h + c_.diffusion(e, s_.t, 0.0, s_.l) * sqrt_h_ * xi;
                if (!std::isfinite(y)) throw EvalError("non-finite proposal");
                if (y > 0.0) {
                    n.x = y;
                } else {
                    n.x = -y;
                    n.l = s_.l - 2.0 * y;
                    st.contact = true;
                }
            }
        } else {
            const StepOutcome out = step_interior(s_, c_, h, xi);
            if (out.contact) {
                n = resolve_vertex(out, c_, cfg_.policy, rng_.uniform(k_));
                n.t = s_.t;
                st.contact = true;
                if (n.in_shell && n.x >= cfg_.shell_radius) n.in_shell = false;
            } else {
                n.x = out.proposal;
            }
        }
    } catch (const EvalError& e) {
        throw EvalError("step " + std::to_string(k_) + ": " + e.what());
    }
    n.t = t_next;
    st.dl = n.l - s_.l;
    s_ = n;
    st.state = n;
    ++k_;
    return st;
}

double SpiderPath::delta_activity() const { return std::max(shell_radius, 3.0 * sigma_bound * std::sqrt(h)); }

namespace {

SpiderPath run_path(const CoefficientSet& c, const SpiderState& init, const SimConfig& cfg, std::uint64_t path_index,
                    std::span<const double> gaussians) {
    const std::size_t K = cfg.steps_from(init.t);
    Stepper st = gaussians.empty() ? Stepper(c, cfg, init, path_index) : Stepper(c, cfg, init, path_index, gaussians);
    SpiderPath p;
    p.t0 = init.t;
    p.h = cfg.h;
    p.shell_radius = cfg.shell_radius;
    p.sigma_bound = c.bounds.sigma_bound;
    p.policy = cfg.policy;
    p.seed = cfg.seed;
    p.path_index = path_index;
    p.x.reserve(K + 1);
    p.l.reserve(K + 1);
    p.edge.reserve(K + 1);
    p.contact.reserve(K + 1);
    p.x.push_back(init.x);
    p.l.push_back(init.l);
    p.edge.push_back(init.i.value);
    p.contact.push_back(0);
    if (cfg.store_noise) p.noise.reserve(K);
    for (std::size_t k = 0; k < K; ++k) {
        const Step s = st.advance();
        p.x.push_back(s.state.x);
        p.l.push_back(s.state.l);
        p.edge.push_back(s.state.i.value);
        p.contact.push_back(s.contact ? 1 : 0);
        if (cfg.store_noise) p.noise.push_back(s.gaussian);
    }
    return p;
}

struct PathResult {
    SpiderPath path;
    double x = 0.0, l = 0.0;
    int edge = 0;
};

PathResult one(const CoefficientSet& c, const SpiderState& init, const SimConfig& cfg, std::uint64_t k) {
    PathResult r;
    try {
        if (cfg.store_paths) {
            r.path = run_path(c, init, cfg, k, {});
            r.x = r.path.x.back();
            r.l = r.path.l.back();
            r.edge = r.path.edge.back();
        } else {
            const std::size_t K = cfg.steps_from(init.t);
            Stepper st(c, cfg, init, k);
            for (std::size_t j = 0; j < K; ++j) st.advance();
            r.x = st.state().x;
            r.l = st.state().l;
            r.edge = st.state().i.value;
        }
    } catch (const EvalError& e) {
        throw EvalError("path " + std::to_string(k) + ", " + e.what());
    }
    return r;
}

PathEnsemble assemble(std::vector<PathResult>&& rs, int edges, bool store) {
    PathEnsemble ens;
    ens.summary.n = rs.size();
    ens.summary.edge_T.assign(edges, 0);
    for (auto& r : rs) {
        ens.x_T.push_back(r.x);
        ens.l_T.push_back(r.l);
        ens.edge_T.push_back(r.edge);
        ens.summary.x_T.add(r.x);
        ens.summary.l_T.add(r.l);
        if (r.x > 0.0)
            ++ens.summary.edge_T[r.edge - 1];
        else
            ++ens.summary.at_vertex_T;
        if (store) ens.paths.push_back(std::move(r.path));
    }
    return ens;
}

}  // namespace

SpiderPath simulate_path(const CoefficientSet& c, const SpiderState& init, const SimConfig& cfg,
                         std::uint64_t path_index) {
    check_config(cfg, c);
    return run_path(c, init, cfg, path_index, {});
}

SpiderPath simulate_path(const CoefficientSet& c, const SpiderState& init, const SimConfig& cfg,
                         std::uint64_t path_index, std::span<const double> gaussians) {
    check_config(cfg, c);
    if (gaussians.size() < cfg.steps_from(init.t)) throw ConfigError("not enough gaussian increments for the horizon");
    return run_path(c, init, cfg, path_index, gaussians);
}

PathEnsemble simulate_batch(const CoefficientSet& c, const SpiderState& init, const SimConfig& cfg) {
    check_config(cfg, c);
    cfg.steps_from(init.t);
    auto rs = map_indices<PathResult>(cfg.n_paths, cfg.workers, [&](std::size_t k) { return one(c, init, cfg, k); });
    return assemble(std::move(rs), c.edges, cfg.store_paths);
}

PathEnsemble simulate_batch_serial(const CoefficientSet& c, const SpiderState& init, const SimConfig& cfg) {
    check_config(cfg, c);
    cfg.steps_from(init.t);
    auto rs = map_indices_serial<PathResult>(cfg.n_paths, [&](std::size_t k) { return one(c, init, cfg, k); });
    return assemble(std::move(rs), c.edges, cfg.store_paths);
}

HitResult first_hit(const CoefficientSet& c, const SpiderState& init, const SimConfig& cfg, double level,
                    std::uint64_t path_index) {
    if (!(level > 0.0)) throw ConfigError("hitting level must be positive");
    HitResult r{init.t, init.i, init.l, false};
    if (init.x >= level) return r;
    const std::size_t K = cfg.steps_from(init.t);
    Stepper st(c, cfg, init, path_index);
    for (std::size_t k = 0; k < K; ++k) {
        const Step s = st.advance();
        if (s.state.x >= level) return {s.state.t, s.state.i, s.state.l, false};
    }
    const auto& s = st.state();
    return {s.t, s.i, s.l, true};
}

}  // namespace spider
