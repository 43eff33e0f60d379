#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>

#include <CLI11.hpp>

#include "cli.hpp"
#include "spider/error.hpp"
#include "spider/localtime.hpp"
#include "spider/parallel.hpp"

namespace spider::cli {

namespace {

constexpr double big = std::numeric_limits<double>::max();

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string num(std::size_t v) { return std::to_string(v); }
std::string yes(bool b) { return b ? "true" : "false"; }

std::string with_eps(const char* what, double eps) { return std::string(what) + " eps=" + num(eps); }

void base(EstimatorReport& r, const std::string& name, std::size_t n, const RunConfig& cfg) {
    r.name = name;
    r.n = n;
    r.seed = cfg.sim.seed;
    r.config_hash = cfg.hash;
}

Table report_table(const EstimatorReport& r) {
    Table t{{"label", "estimate", "stderr", "target", "lo", "hi", "kind", "pass"}, {}};
    for (const auto& row : r.rows) {
        const char* kind = row.kind == ReportRow::Kind::check ? "check"
                           : row.kind == ReportRow::Kind::advisory ? "advisory"
                                                                   : "info";
        t.rows.push_back({row.label, num(row.estimate), num(row.std_error), num(row.target), num(row.lo), num(row.hi),
                          kind, yes(row.pass)});
    }
    return t;
}

ordered_json query_json(const FKQuery& q) { return {{"t", q.t}, {"x", q.x}, {"edge", q.i.value}, {"l", q.l}}; }

ordered_json sim_params(const RunConfig& c) {
    return {{"h", c.sim.h},
            {"T", c.sim.T},
            {"policy", policy_name(c.sim.policy)},
            {"shell_radius", c.sim.shell_radius},
            {"n_paths", c.sim.n_paths},
            {"start", {{"t", c.start.t}, {"x", c.start.x}, {"edge", c.start.i.value}, {"l", c.start.l}}}};
}

template <class B>
const B& need(const std::optional<B>& b, const char* key) {
    if (!b) throw ConfigError(std::string("config has no '") + key + "' block", "");
    return *b;
}

// ---- subcommands ----

Outcome cmd_validate(const RunConfig& c) {
    Outcome o{"validate", {{"edges", c.coefficients.edges}}, {}, {}};
    const auto& rep = *c.coefficients.report;
    base(o.report, "validate", rep.clauses.size(), c);
    o.table.header = {"clause", "observed", "bound", "pass", "edge", "t", "x", "l"};
    std::size_t failed = 0;
    for (const auto& cl : rep.clauses) {
        const bool lower = cl.name == "A" || cl.name == "E";
        auto row = check_row(cl.name, cl.observed, 0.0, cl.bound, lower ? cl.bound : 0.0, lower ? big : cl.bound);
        row.pass = cl.pass;
        if (!cl.pass) ++failed;
        o.report.rows.push_back(row);
        o.table.rows.push_back({cl.name, num(cl.observed), num(cl.bound), yes(cl.pass), std::to_string(cl.worst.edge),
                                num(cl.worst.t), num(cl.worst.x), num(cl.worst.l)});
    }
    o.report.add(check_row("failed clauses", static_cast<double>(failed), 0.0, 0.0, 0.0, 0.0));
    std::vector<std::string> blocks;
    for (auto& [k, v] : c.raw.items()) blocks.push_back(k);
    o.params["blocks"] = blocks;
    return o;
}

Outcome cmd_simulate(const RunConfig& c) {
    Outcome o{"simulate", sim_params(c), {}, {}};
    auto e = simulate_batch(c.coefficients, c.start, c.sim);
    base(o.report, "simulate", e.x_T.size(), c);
    o.table.header = {"path", "x_T", "edge_T", "l_T"};
    for (std::size_t k = 0; k < e.x_T.size(); ++k)
        o.table.rows.push_back({num(k), num(e.x_T[k]), std::to_string(e.edge_T[k]), num(e.l_T[k])});
    const auto& s = e.summary;
    o.report.add(info_row("mean x_T", s.x_T.mean, s.x_T.stderr_mean()));
    o.report.add(info_row("mean l_T", s.l_T.mean, s.l_T.stderr_mean()));
    o.report.add(info_row("fraction at vertex", s.at_vertex_T / static_cast<double>(s.n)));
    for (std::size_t i = 0; i < s.edge_T.size(); ++i)
        o.report.add(info_row("fraction on edge " + std::to_string(i + 1), s.edge_T[i] / static_cast<double>(s.n)));
    return o;
}

Outcome cmd_localtime(const RunConfig& c) {
    const auto& b = need(c.localtime, "localtime");
    Outcome o{"localtime", sim_params(c), {}, {}};
    o.params["eps"] = b.eps;
    o.params["mode"] = b.oracle ? "oracle" : "spider";
    o.params["time"] = b.time;
    o.params["subset"] = b.subset;
    base(o.report, "localtime", c.sim.n_paths, c);
    const std::size_t ne = b.eps.size();
    std::vector<int> all;
    for (int i = 1; i <= c.coefficients.edges; ++i) all.push_back(i);

    if (b.oracle) {
        // Reflected Brownian skeletons with the exact Skorokhod local time as reference.
        const std::size_t steps = c.sim.steps_from(c.start.t);
        auto errs = map_indices<std::vector<double>>(c.sim.n_paths, c.sim.workers, [&](std::size_t k) {
            auto p = skorokhod_oracle(brownian_increments(c.sim.seed, k, c.sim.h, steps), c.sim.h);
            const double ref = p.l[grid_index(p, b.time)];
            std::vector<double> v(2 * ne);
            for (std::size_t e = 0; e < ne; ++e) {
                v[e] = std::abs(downcrossing_estimate(p, b.eps[e], b.time) - ref);
                v[ne + e] = std::abs(occupation_estimate(p, c.coefficients, b.eps[e], b.time, all) - ref);
            }
            return v;
        });
        o.table.header = {"eps", "downcrossing_l1", "downcrossing_se", "occupation_l1", "occupation_se"};
        std::vector<RunningStats> dc(ne), oc(ne);
        for (const auto& v : errs)
            for (std::size_t e = 0; e < ne; ++e) {
                dc[e].add(v[e]);
                oc[e].add(v[ne + e]);
            }
        for (std::size_t e = 0; e < ne; ++e) {
            o.table.rows.push_back({num(b.eps[e]), num(dc[e].mean), num(dc[e].stderr_mean()), num(oc[e].mean),
                                    num(oc[e].stderr_mean())});
            o.report.add(info_row(with_eps("downcrossing L1", b.eps[e]), dc[e].mean, dc[e].stderr_mean()));
            o.report.add(info_row(with_eps("occupation L1", b.eps[e]), oc[e].mean, oc[e].stderr_mean()));
            if (!b.levels.empty())
                o.report.add(advisory_row(with_eps("downcrossing L1 level", b.eps[e]), dc[e].mean, dc[e].stderr_mean(),
                                          b.levels[e], 0.0, 1.5 * b.levels[e]));
            if (e > 0) {
                o.report.add(check_row(with_eps("downcrossing L1 decrease", b.eps[e]), dc[e].mean - dc[e - 1].mean, 0.0,
                                       0.0, -big, 0.0));
                o.report.add(check_row(with_eps("occupation L1 decrease", b.eps[e]), oc[e].mean - oc[e - 1].mean, 0.0,
                                       0.0, -big, 0.0));
            }
        }
        if (!b.levels.empty()) o.report.notes.push_back("absolute L1 levels are advisory within +50%");
        return o;
    }

    auto est = map_indices<std::vector<double>>(c.sim.n_paths, c.sim.workers, [&](std::size_t k) {
        auto p = simulate_path(c.coefficients, c.start, c.sim, k);
        std::vector<double> v(2 * ne);
        for (std::size_t e = 0; e < ne; ++e) {
            v[e] = downcrossing_estimate(p, b.eps[e], b.time);
            v[ne + e] = occupation_estimate(p, c.coefficients, b.eps[e], b.time, b.subset);
        }
        return v;
    });
    o.table.header = {"eps", "downcrossing", "downcrossing_se", "occupation_subset", "occupation_subset_se"};
    std::vector<RunningStats> dc(ne), oc(ne);
    for (const auto& v : est)
        for (std::size_t e = 0; e < ne; ++e) {
            dc[e].add(v[e]);
            oc[e].add(v[ne + e]);
        }
    for (std::size_t e = 0; e < ne; ++e) {
        o.table.rows.push_back(
            {num(b.eps[e]), num(dc[e].mean), num(dc[e].stderr_mean()), num(oc[e].mean), num(oc[e].stderr_mean())});
        o.report.add(info_row(with_eps("downcrossing", b.eps[e]), dc[e].mean, dc[e].stderr_mean()));
        const bool last = e + 1 == ne;
        if (last && b.target)
            o.report.add(within_row(with_eps("occupation subset", b.eps[e]), oc[e].mean, oc[e].stderr_mean(), *b.target));
        else
            o.report.add(info_row(with_eps("occupation subset", b.eps[e]), oc[e].mean, oc[e].stderr_mean()));
    }
    return o;
}

Outcome cmd_scatter(const RunConfig& c) {
    const auto& b = need(c.scatter, "scatter");
    Outcome o{"scatter", sim_params(c), {}, {}};
    o.params["delta"] = b.delta;
    o.params["n"] = b.n;
    o.params["t"] = b.t;
    o.params["l"] = b.l;
    auto r = scattering_distribution(c.coefficients, b.t, b.l, b.delta, b.n, c.sim);
    o.report = r.report;
    base(o.report, "scatter", b.n, c);
    o.table.header = {"edge", "freq", "stderr", "alpha_target", "pass"};
    for (int e = 1; e <= c.coefficients.edges; ++e) {
        const auto& row = o.report.row("edge " + std::to_string(e));
        o.table.rows.push_back({std::to_string(e), num(row.estimate), num(row.std_error), num(row.target), yes(row.pass)});
    }
    o.report.notes.push_back("delta -> 0 is a limit without a rate; a single delta is a heuristic check");
    return o;
}

Outcome cmd_exitstats(const RunConfig& c) {
    const auto& b = need(c.exitstats, "exitstats");
    Outcome o{"exitstats", sim_params(c), {}, {}};
    o.params["deltas"] = b.deltas;
    o.params["n"] = b.n;
    o.params["t"] = b.t;
    o.params["l"] = b.l;
    auto r = mean_exit_stats(c.coefficients, b.t, b.l, b.deltas, b.n, c.sim);
    o.report = r.report;
    base(o.report, "exitstats", b.n, c);
    o.table.header = {"delta", "l_ratio", "l_ratio_se", "theta_ratio", "theta_ratio_se", "censored"};
    for (const auto& row : r.rows)
        o.table.rows.push_back({num(row.delta), num(row.l_ratio), num(row.l_ratio_se), num(row.theta_ratio),
                                num(row.theta_ratio_se), num(row.censored)});
    return o;
}

Outcome cmd_atom(const RunConfig& c) {
    const auto& b = need(c.atom, "atom");
    Outcome o{"atom", sim_params(c), {}, {}};
    o.params["deltas"] = b.deltas;
    o.params["oracle"] = b.oracle;
    auto e = simulate_batch(c.coefficients, c.start, c.sim);
    const double t = c.sim.T - c.start.t;
    auto r = atom_test(e.x_T, t, b.deltas,
                       b.oracle ? std::function<double(double)>([t](double d) { return reflected_gaussian_cdf(d, t); })
                                : std::function<double(double)>{});
    o.report = r.report;
    base(o.report, "atom", e.x_T.size(), c);
    o.table.header = {"delta", "p", "stderr", "bound", "oracle"};
    for (const auto& row : r.rows)
        o.table.rows.push_back(
            {num(row.delta), num(row.p), num(row.se), num(r.c_fit * row.delta + 3 * row.se), num(row.oracle)});
    return o;
}

ordered_json function_names(const std::vector<TestFunction>& fs) {
    ordered_json a = ordered_json::array();
    for (std::size_t k = 0; k < fs.size(); ++k) a.push_back(fs[k].name().empty() ? "f" + std::to_string(k + 1) : fs[k].name());
    return a;
}

Outcome cmd_martingale(const RunConfig& c) {
    const auto& b = need(c.martingale, "martingale");
    Outcome o{"martingale", sim_params(c), {}, {}};
    o.params["window"] = {b.s, b.s_prime};
    o.params["functions"] = function_names(b.functions);
    o.params["bias_c"] = martingale_bias_c;
    o.report = martingale_residual(c.coefficients, c.start, c.sim, b.functions, b.s, b.s_prime);
    base(o.report, "martingale", c.sim.n_paths, c);
    o.table = report_table(o.report);
    return o;
}

Outcome cmd_ito(const RunConfig& c) {
    const auto& b = need(c.ito, "ito");
    Outcome o{"ito", sim_params(c), {}, {}};
    o.params["h"] = b.hs;
    o.params["paths"] = b.paths;
    o.params["functions"] = function_names(b.functions);
    base(o.report, "ito", b.paths, c);
    const int I = c.coefficients.edges;
    std::vector<TestFunction> fs{TestFunction::constant(I, 1.0), TestFunction::identity(I)};
    fs.insert(fs.end(), b.functions.begin(), b.functions.end());
    const std::size_t nh = b.hs.size(), nf = fs.size();
    const double fine = b.hs.back();

    // res[path][r * nf + q]: max residual of function q at step size hs[r] on matched skeletons
    auto res = map_indices<std::vector<double>>(b.paths, c.sim.workers, [&](std::size_t k) {
        SimConfig fc = c.sim;
        fc.h = fine;
        fc.store_noise = true;
        auto fine_path = simulate_path(c.coefficients, c.start, fc, k);
        std::vector<double> v(nh * nf);
        for (std::size_t r = 0; r < nh; ++r) {
            const auto ratio = static_cast<std::size_t>(std::llround(b.hs[r] / fine));
            SimConfig cc = fc;
            cc.h = b.hs[r];
            const auto g = coarsen_gaussians(fine_path.noise, ratio);
            auto p = ratio == 1 ? fine_path : simulate_path(c.coefficients, c.start, cc, k, g);
            for (std::size_t q = 0; q < nf; ++q) v[r * nf + q] = ito_residual(p, c.coefficients, fs[q]);
        }
        return v;
    });
    o.table.header = {"function", "h", "mean_max_residual", "stderr", "worst"};
    auto name = [&](std::size_t q) {
        return q == 0 ? std::string("constant") : q == 1 ? std::string("identity") : o.params["functions"][q - 2].get<std::string>();
    };
    for (std::size_t q = 0; q < nf; ++q) {
        double prev = 0.0;
        for (std::size_t r = 0; r < nh; ++r) {
            RunningStats rs;
            double worst = 0.0;
            for (const auto& v : res) {
                rs.add(v[r * nf + q]);
                worst = std::max(worst, v[r * nf + q]);
            }
            const std::string label = name(q) + " h=" + num(b.hs[r]);
            o.table.rows.push_back({name(q), num(b.hs[r]), num(rs.mean), num(rs.stderr_mean()), num(worst)});
            if (q < 2) {
                o.report.add(check_row(label + " max residual", worst, 0.0, 0.0, 0.0, q == 0 ? 0.0 : 1e-12));
            } else {
                o.report.add(info_row(label + " mean max residual", rs.mean, rs.stderr_mean()));
                if (r > 0) o.report.add(check_row(label + " decrease", rs.mean - prev, 0.0, 0.0, -big, 0.0));
            }
            prev = rs.mean;
        }
    }
    return o;
}

Outcome cmd_markov(const RunConfig& c) {
    const auto& b = need(c.markov, "markov");
    Outcome o{"markov", sim_params(c), {}, {}};
    const char* kinds[] = {"hitting", "fixed", "vertex_after"};
    o.params["stop"] = {{"kind", kinds[static_cast<int>(b.stop.kind)]}, {"level", b.stop.level}, {"time", b.stop.time}};
    o.params["lag"] = b.lag;
    base(o.report, "markov", c.sim.n_paths, c);
    o.table.header = {"functional", "ks", "p_value", "censored_fraction", "pass"};
    ordered_json names = ordered_json::array();
    for (const auto& [name, f] : b.functionals) {
        names.push_back(name);
        auto r = strong_markov_test(c.coefficients, c.start, b.stop, f, b.lag, c.sim);
        for (auto row : r.report.rows) {
            row.label = name + ": " + row.label;
            o.report.add(row);
        }
        o.table.rows.push_back({name, num(r.ks), num(r.p_value), num(r.censored / static_cast<double>(c.sim.n_paths)),
                                yes(r.report.pass)});
    }
    o.params["functionals"] = names;
    return o;
}

Outcome cmd_pde(const RunConfig& c) {
    const auto& b = need(c.pde, "pde");
    Outcome o{"pde", {}, {}, {}};
    const auto& p = b.problem;
    o.params = {{"direction", p.direction == PdeDirection::backward ? "backward" : "forward"},
                {"T", p.T},
                {"R", p.R},
                {"K", p.K},
                {"grid", {{"M", b.grid.M}, {"J", b.grid.J}, {"P", b.grid.P}}}};
    SolveOptions opts;
    const double dt = p.T / b.grid.M;
    for (const auto& q : b.points) opts.keep.push_back(static_cast<int>(std::llround(q.t / dt)));
    auto u = solve(p, b.grid, opts);
    base(o.report, "pde", b.points.size(), c);
    o.table.header = {"t", "x", "edge", "l", "u"};
    for (const auto& q : b.points) {
        const double v = u.value(q.t, q.x, q.i.value, q.l);
        o.table.rows.push_back({num(q.t), num(q.x), std::to_string(q.i.value), num(q.l), num(v)});
        o.report.add(info_row("u t=" + num(q.t) + " x=" + num(q.x) + " edge=" + std::to_string(q.i.value) +
                                  " l=" + num(q.l),
                              v));
    }
    o.report.add(info_row("compatibility defect", u.compatibility_defect));
    o.report.notes = u.warnings;
    return o;
}

Outcome cmd_fk(const RunConfig& c) {
    const auto& b = need(c.fk, "fk");
    Outcome o{"fk", sim_params(c), {}, {}};
    ordered_json qs = ordered_json::array();
    for (const auto& q : b.queries) qs.push_back(query_json(q));
    o.params["queries"] = qs;
    base(o.report, "fk", c.sim.n_paths, c);
    o.table.header = {"t", "x", "edge", "l", "mean", "stderr", "target", "pass"};
    for (std::size_t k = 0; k < b.queries.size(); ++k) {
        const auto& q = b.queries[k];
        auto e = fk_estimate(b.problem, c.coefficients, q, c.sim);
        const std::string label = "query " + std::to_string(k + 1);
        auto row = b.targets.empty() ? info_row(label, e.mean, e.std_error)
                                     : within_row(label, e.mean, e.std_error, b.targets[k]);
        o.table.rows.push_back({num(q.t), num(q.x), std::to_string(q.i.value), num(q.l), num(e.mean), num(e.std_error),
                                num(b.targets.empty() ? std::nan("") : b.targets[k]), yes(row.pass)});
        o.report.add(row);
    }
    return o;
}

Outcome cmd_fk_compare(const RunConfig& c) {
    const auto& b = need(c.fk, "fk");
    if (!b.grid) throw ConfigError("fk-compare needs a PDE grid", "/fk");
    Outcome o{"fk-compare", sim_params(c), {}, {}};
    auto cmp = fk_vs_pde(b.problem, c.coefficients, b.queries, c.sim, *b.grid, b.R, b.K);
    o.params["grid"] = {{"M", cmp.grid.M}, {"J", cmp.grid.J}, {"P", cmp.grid.P}};
    o.params["R"] = cmp.R;
    o.params["K"] = cmp.K;
    base(o.report, "fk-compare", c.sim.n_paths, c);
    o.table.header = {"t",          "x",           "edge", "l",        "mc",        "mc_stderr",
                      "pde",        "pde_coarse",  "grid_budget", "diff", "tolerance", "pass"};
    for (std::size_t k = 0; k < cmp.rows.size(); ++k) {
        const auto& r = cmp.rows[k];
        o.table.rows.push_back({num(r.query.t), num(r.query.x), std::to_string(r.query.i.value), num(r.query.l),
                                num(r.mc), num(r.mc_stderr), num(r.pde), num(r.pde_coarse), num(r.grid_budget),
                                num(r.diff), num(r.tolerance), yes(r.pass)});
        o.report.add(check_row("query " + std::to_string(k + 1) + " |mc - pde|", r.diff, r.mc_stderr, 0.0, 0.0,
                               r.tolerance));
    }
    o.report.notes = cmp.warnings;
    return o;
}

using Command = Outcome (*)(const RunConfig&);

const std::vector<std::pair<std::string, Command>>& table() {
    static const std::vector<std::pair<std::string, Command>> t{
        {"simulate", cmd_simulate},     {"localtime", cmd_localtime}, {"scatter", cmd_scatter},
        {"exitstats", cmd_exitstats},   {"atom", cmd_atom},           {"martingale", cmd_martingale},
        {"ito", cmd_ito},               {"markov", cmd_markov},       {"pde", cmd_pde},
        {"fk", cmd_fk},                 {"fk-compare", cmd_fk_compare}, {"validate", cmd_validate}};
    return t;
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_file(const std::filesystem::path& p, const std::string& s) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f << s;
    if (!f) throw std::runtime_error("cannot write " + p.string());
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out.push_back('"');
        out.push_back(ch);
    }
    return out + "\"";
}

}  // namespace

const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const auto& [n, f] : table()) v.push_back(n);
        return v;
    }();
    return names;
}

Outcome execute(const std::string& command, const RunConfig& cfg) {
    for (const auto& [n, f] : table())
        if (n == command) return f(cfg);
    throw ConfigError("unknown subcommand '" + command + "'");
}

std::string csv_text(const Table& t, const std::string& config_hash) {
    std::string s;
    for (const auto& h : t.header) s += csv_field(h) + ",";
    s += "config_hash\n";
    for (const auto& row : t.rows) {
        for (const auto& v : row) s += csv_field(v) + ",";
        s += config_hash + "\n";
    }
    return s;
}

std::string json_text(const Outcome& o, const RunConfig& cfg) {
    ordered_json est = ordered_json::object(), se = ordered_json::object(), rows = ordered_json::array();
    for (const auto& r : o.report.rows) {
        est[r.label] = r.estimate;
        se[r.label] = r.std_error;
        const char* kind = r.kind == ReportRow::Kind::check ? "check" : r.kind == ReportRow::Kind::advisory ? "advisory" : "info";
        ordered_json row = {{"label", r.label}, {"estimate", r.estimate}, {"stderr", r.std_error}, {"kind", kind}, {"pass", r.pass}};
        if (r.kind != ReportRow::Kind::info) {
            row["target"] = r.target;
            row["lo"] = r.lo;
            row["hi"] = r.hi;
        }
        rows.push_back(row);
    }
    ordered_json j = {{"schema", "spider-report/1"},
                      {"name", o.name},
                      {"params", o.params},
                      {"estimates", est},
                      {"stderr", se},
                      {"pass", o.report.pass},
                      {"seed", cfg.sim.seed},
                      {"config_hash", cfg.hash},
                      {"n", o.report.n},
                      {"rows", rows},
                      {"notes", o.report.notes}};
    return j.dump(2) + "\n";
}

std::vector<std::string> write_outputs(const Outcome& o, const RunConfig& cfg, const ordered_json& meta) {
    namespace fs = std::filesystem;
    const fs::path dir(cfg.out);
    fs::create_directories(dir);
    const fs::path csv = dir / (o.name + ".csv"), js = dir / (o.name + ".json"), mt = dir / (o.name + ".meta.json");
    write_file(csv, csv_text(o.table, cfg.hash));
    write_file(js, json_text(o, cfg));
    write_file(mt, meta.dump(2) + "\n");
    return {csv.string(), js.string(), mt.string()};
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Walsh spider diffusion toolkit"};
    app.require_subcommand(1, 1);
    std::string config_path, out_dir;
    std::uint64_t seed = 0;
    int workers = 0;
    std::vector<CLI::App*> subs;
    for (const auto& name : subcommands()) {
        auto* s = app.add_subcommand(name);
        s->add_option("--config", config_path, "JSON run configuration")->required();
        s->add_option("--seed", seed, "override sim.seed");
        s->add_option("--workers", workers, "worker threads (results do not depend on it)")->check(CLI::Range(0, 4096));
        s->add_option("--out", out_dir, "output directory (overrides the config)");
        subs.push_back(s);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        return exit_config;
    }
    CLI::App* chosen = app.get_subcommands().front();
    const std::string command = chosen->get_name();
    std::optional<std::uint64_t> seed_over;
    std::optional<int> workers_over;
    if (chosen->count("--seed")) seed_over = seed;
    if (chosen->count("--workers")) workers_over = workers;

    RunConfig cfg;
    const auto t0 = std::chrono::steady_clock::now();
    const std::string started = utc_now();
    try {
        cfg = load_config(config_path, seed_over, workers_over);
        if (chosen->count("--out")) cfg.out = out_dir;
    } catch (const ConfigError& e) {
        std::string text;
        if (std::ifstream in{config_path, std::ios::binary}) text.assign(std::istreambuf_iterator<char>(in), {});
        err << describe(e, config_path, text) << "\n";
        return exit_config;
    } catch (const std::exception& e) {
        err << "config error: " << config_path << ": " << e.what() << "\n";
        return exit_config;
    }

    try {
        Outcome o = execute(command, cfg);
        const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        ordered_json meta = {{"command", command},
                             {"config", config_path},
                             {"config_hash", cfg.hash},
                             {"seed", cfg.sim.seed},
                             {"workers", cfg.sim.workers},
                             {"started", started},
                             {"finished", utc_now()},
                             {"elapsed_s", elapsed}};
        const auto files = write_outputs(o, cfg, meta);
        out << command << ": " << (o.report.pass ? "pass" : "FAIL") << " (" << files[0] << ", " << files[1] << ")\n";
        for (const auto& r : o.report.rows)
            if (r.kind != ReportRow::Kind::info && !r.pass) err << "failed: " << r.label << " = " << num(r.estimate) << "\n";
        return o.report.pass ? exit_ok : exit_check_failed;
    } catch (const ConfigError& e) {
        err << describe(e, config_path, cfg.text) << "\n";
        return exit_config;
    } catch (const EvalError& e) {
        err << "evaluation error: " << e.what() << "\n";
        return exit_runtime;
    } catch (const std::exception& e) {
        err << "runtime error: " << e.what() << "\n";
        return exit_runtime;
    }
}

}  // namespace spider::cli
