#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "cli.hpp"
#include "spider/coeffexpr.hpp"
#include "spider/error.hpp"
#include "spider/hash.hpp"

namespace spider::cli {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();
constexpr std::int64_t max_paths = 1'000'000'000;

// ---- expressions ----

template <class F>
auto located(const std::string& pointer, F&& f) {
    try {
        return f();
    } catch (const ParseError& e) {
        throw ConfigError(e.what(), pointer, e.offset());
    } catch (const ConfigError& e) {
        if (!e.pointer().empty()) throw;
        throw ConfigError(e.what(), pointer);
    }
}

std::string expr_source(const json& v, const std::string& pointer) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number()) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v.get<double>());
        return buf;
    }
    throw ConfigError("expected an expression string or a number", pointer);
}

// Compiles an expression in (t, x, l); `forbidden` lists variables the field may not use.
Field expression(const json& v, const std::string& pointer, const std::string& forbidden = {}) {
    const std::string src = expr_source(v, pointer);
    return located(pointer, [&] {
        const auto e = expr::parse(src);
        for (char var : forbidden)
            if (expr::uses(e, var)) throw ConfigError(std::string("expression may not use '") + var + "'", pointer);
        return expr::compile(src);
    });
}

std::vector<Field> per_edge(const json& v, int edges, const std::string& pointer, const std::string& forbidden = {}) {
    std::vector<Field> out;
    if (v.is_array()) {
        if (static_cast<int>(v.size()) != edges)
            throw ConfigError("expected one expression per edge (" + std::to_string(edges) + ")", pointer);
        for (int i = 0; i < edges; ++i) out.push_back(expression(v[i], pointer + "/" + std::to_string(i), forbidden));
    } else {
        const Field f = expression(v, pointer, forbidden);
        out.assign(edges, f);
    }
    return out;
}

Field2 field_xl(const Field& f) {
    return [f](double x, double l) { return f(0.0, x, l); };
}
Field2 field_tl(const Field& f) {
    return [f](double t, double l) { return f(t, 0.0, l); };
}
Field2 field_tx(const Field& f) {
    return [f](double t, double x) { return f(t, x, 0.0); };
}

std::vector<Field2> per_edge_2(const json& v, int edges, const std::string& pointer, char missing) {
    std::vector<Field2> out;
    for (const auto& f : per_edge(v, edges, pointer, std::string(1, missing)))
        out.push_back(missing == 't' ? field_xl(f) : field_tx(f));
    return out;
}

// ---- small readers ----

std::vector<double> decreasing(JsonObject& o, const std::string& key, double lo, double hi) {
    auto v = o.numbers(key, lo, hi);
    if (v.empty()) throw ConfigError("expected a nonempty list", o.child(key));
    for (std::size_t k = 1; k < v.size(); ++k)
        if (!(v[k] < v[k - 1])) throw ConfigError("list must be strictly decreasing", o.child(key) + "/" + std::to_string(k));
    return v;
}

FKQuery query(const json& v, const std::string& pointer, int edges, double T) {
    JsonObject o(v, pointer);
    FKQuery q;
    q.t = o.number_or("t", 0.0, 0.0, T);
    q.x = o.number("x", 0.0);
    q.i.value = static_cast<int>(o.integer_or("edge", 1, 1, edges));
    q.l = o.number_or("l", 0.0, 0.0);
    o.finish();
    return q;
}

std::vector<FKQuery> queries(JsonObject& o, const std::string& key, int edges, double T) {
    const json& v = o.at(key);
    if (!v.is_array() || v.empty()) throw ConfigError("expected a nonempty array of points", o.child(key));
    std::vector<FKQuery> out;
    for (std::size_t k = 0; k < v.size(); ++k) out.push_back(query(v[k], o.child(key) + "/" + std::to_string(k), edges, T));
    return out;
}

PdeGrid grid(JsonObject o) {
    PdeGrid g;
    g.M = static_cast<int>(o.integer("M", 2, 100000));
    g.J = static_cast<int>(o.integer("J", 2, 100000));
    g.P = static_cast<int>(o.integer("P", 1, 100000));
    o.finish();
    return g;
}

TestFunction test_function(const json& v, const std::string& pointer, int edges) {
    JsonObject o(v, pointer);
    const std::string name = o.string_or("name", "");
    const json& ts = o.at("terms");
    if (!ts.is_array() || ts.empty()) throw ConfigError("expected a nonempty array of terms", o.child("terms"));
    std::vector<Term> terms;
    for (std::size_t k = 0; k < ts.size(); ++k) {
        JsonObject t(ts[k], o.child("terms") + "/" + std::to_string(k));
        Term term;
        const json& c = t.at("coeff");
        if (c.is_number()) {
            term.coeff.assign(edges, json_number(c, t.child("coeff"), -inf, inf));
        } else if (c.is_array() && static_cast<int>(c.size()) == edges) {
            for (int i = 0; i < edges; ++i)
                term.coeff.push_back(json_number(c[i], t.child("coeff") + "/" + std::to_string(i), -inf, inf));
        } else {
            throw ConfigError("expected a number or one number per edge", t.child("coeff"));
        }
        term.x_pow = static_cast<int>(t.integer_or("x_pow", 0, 0, 8));
        term.l_pow = static_cast<int>(t.integer_or("l_pow", 0, 0, 8));
        if (t.has("time")) {
            JsonObject tf = t.object("time");
            const std::string kind = tf.string("kind");
            if (kind == "one")
                term.tau.kind = TimeFactor::Kind::one;
            else if (kind == "exp")
                term.tau.kind = TimeFactor::Kind::exp;
            else if (kind == "sin")
                term.tau.kind = TimeFactor::Kind::sin;
            else if (kind == "cos")
                term.tau.kind = TimeFactor::Kind::cos;
            else
                throw ConfigError("time factor kind must be one, exp, sin or cos", tf.child("kind"));
            term.tau.rate = tf.number_or("rate", 0.0, -100.0, 100.0);
            tf.finish();
        }
        t.finish();
        terms.push_back(std::move(term));
    }
    o.finish();
    return located(pointer, [&] { return TestFunction(edges, std::move(terms), name); });
}

std::vector<TestFunction> test_functions(JsonObject& o, const std::string& key, int edges) {
    const json& v = o.at(key);
    if (!v.is_array() || v.empty()) throw ConfigError("expected a nonempty array of test functions", o.child(key));
    std::vector<TestFunction> out;
    for (std::size_t k = 0; k < v.size(); ++k) out.push_back(test_function(v[k], o.child(key) + "/" + std::to_string(k), edges));
    return out;
}

// ---- blocks ----

SimConfig sim_block(JsonObject o) {
    SimConfig s;
    s.h = o.number("h", 1e-12, 1.0);
    s.T = o.number("T", 1e-12, 1e6);
    s.shell_radius = o.number_or("shell_radius", s.shell_radius, 1e-12, 1.0);
    const std::string policy = o.string_or("policy", "reflection");
    if (policy == "reflection")
        s.policy = VertexPolicy::reflection;
    else if (policy == "shell")
        s.policy = VertexPolicy::shell;
    else
        throw ConfigError("policy must be 'reflection' or 'shell'", o.child("policy"));
    s.n_paths = static_cast<std::size_t>(o.integer("n_paths", 1, max_paths));
    s.seed = o.unsigned_or("seed", 1);
    s.workers = static_cast<int>(o.integer_or("workers", 0, 0, 4096));
    o.finish();
    return s;
}

SpiderState start_block(JsonObject o, int edges, double T) {
    SpiderState s;
    s.t = o.number_or("t", 0.0, 0.0, T);
    s.x = o.number_or("x", 0.0, 0.0);
    s.i.value = static_cast<int>(o.integer_or("edge", 1, 1, edges));
    s.l = o.number_or("l", 0.0, 0.0);
    o.finish();
    return s;
}

LocaltimeBlock localtime_block(JsonObject o, const RunConfig& rc) {
    LocaltimeBlock b;
    b.eps = decreasing(o, "eps", 1e-12, 1e3);
    const std::string mode = o.string_or("mode", "oracle");
    if (mode != "oracle" && mode != "spider") throw ConfigError("mode must be 'oracle' or 'spider'", o.child("mode"));
    b.oracle = mode == "oracle";
    b.time = o.number_or("time", rc.sim.T, rc.start.t, rc.sim.T);
    if (o.has("subset")) {
        for (double e : o.numbers("subset", 1, rc.coefficients.edges)) {
            if (e != std::floor(e)) throw ConfigError("edge indices must be integers", o.child("subset"));
            b.subset.push_back(static_cast<int>(e));
        }
    } else {
        for (int i = 1; i <= rc.coefficients.edges; ++i) b.subset.push_back(i);
    }
    if (o.has("target")) b.target = o.number("target");
    if (o.has("levels")) {
        b.levels = o.numbers("levels", 0.0);
        if (b.levels.size() != b.eps.size()) throw ConfigError("expected one level per eps", o.child("levels"));
    }
    o.finish();
    return b;
}

ScatterBlock scatter_block(JsonObject o, const RunConfig& rc) {
    ScatterBlock b;
    b.delta = o.number("delta", 1e-12, 1e3);
    b.n = static_cast<std::size_t>(o.integer_or("n", 10000, 10000, max_paths));
    b.t = o.number_or("t", 0.0, 0.0, rc.sim.T);
    b.l = o.number_or("l", 0.0, 0.0);
    o.finish();
    return b;
}

ExitBlock exit_block(JsonObject o, const RunConfig& rc) {
    ExitBlock b;
    b.deltas = decreasing(o, "deltas", 1e-12, 1e3);
    b.n = static_cast<std::size_t>(o.integer_or("n", 10000, 1, max_paths));
    b.t = o.number_or("t", 0.0, 0.0, rc.sim.T);
    b.l = o.number_or("l", 0.0, 0.0);
    o.finish();
    return b;
}

AtomBlock atom_block(JsonObject o) {
    AtomBlock b;
    b.deltas = decreasing(o, "deltas", 1e-12, 1e3);
    b.oracle = o.boolean_or("oracle", false);
    o.finish();
    return b;
}

MartingaleBlock martingale_block(JsonObject o, const RunConfig& rc) {
    MartingaleBlock b;
    const auto w = o.numbers("window", rc.start.t, rc.sim.T);
    if (w.size() != 2 || !(w[0] < w[1])) throw ConfigError("window must be [s, s'] with s < s'", o.child("window"));
    b.s = w[0];
    b.s_prime = w[1];
    b.functions = test_functions(o, "functions", rc.coefficients.edges);
    o.finish();
    return b;
}

ItoBlock ito_block(JsonObject o, const RunConfig& rc) {
    ItoBlock b;
    b.functions = test_functions(o, "functions", rc.coefficients.edges);
    b.hs = decreasing(o, "h", 1e-12, 1.0);
    const double fine = b.hs.back();
    for (std::size_t k = 0; k < b.hs.size(); ++k) {
        const double r = b.hs[k] / fine;
        if (std::abs(r - std::round(r)) > 1e-9 * r)
            throw ConfigError("every step must be an integer multiple of the smallest", o.child("h") + "/" + std::to_string(k));
    }
    b.paths = static_cast<std::size_t>(o.integer_or("paths", 8, 1, max_paths));
    o.finish();
    return b;
}

MarkovBlock markov_block(JsonObject o, const RunConfig& rc) {
    MarkovBlock b;
    {
        JsonObject s = o.object("stop");
        const std::string kind = s.string("kind");
        if (kind == "hitting")
            b.stop = StoppingSpec::hitting(s.number("level", 0.0));
        else if (kind == "fixed")
            b.stop = StoppingSpec::fixed(s.number("time", rc.start.t, rc.sim.T));
        else if (kind == "vertex_after")
            b.stop = StoppingSpec::vertex_after(s.number("time", rc.start.t, rc.sim.T));
        else
            throw ConfigError("stop kind must be hitting, fixed or vertex_after", s.child("kind"));
        s.finish();
    }
    const json& f = o.at("functionals");
    const std::string fp = o.child("functionals");
    auto add = [&](const json& v, const std::string& p) {
        if (!v.is_string()) throw ConfigError("expected an expression string in x and l", p);
        const Field g = expression(v, p, "t");
        b.functionals.emplace_back(v.get<std::string>(), [g](double x, int, double l) { return g(0.0, x, l); });
    };
    if (f.is_array()) {
        if (f.empty()) throw ConfigError("expected at least one functional", fp);
        for (std::size_t k = 0; k < f.size(); ++k) add(f[k], fp + "/" + std::to_string(k));
    } else {
        add(f, fp);
    }
    b.lag = o.number("lag", 0.0, rc.sim.T);
    o.finish();
    return b;
}

void check_on_grid(const std::vector<FKQuery>& qs, double T, int M, const std::string& pointer) {
    const double dt = T / M;
    for (std::size_t k = 0; k < qs.size(); ++k) {
        const double m = qs[k].t / dt;
        if (std::abs(m - std::round(m)) > 1e-9 * std::max(1.0, m))
            throw ConfigError("point time is not on the PDE time grid", pointer + "/" + std::to_string(k) + "/t");
    }
}

PdeBlock pde_block(JsonObject o, const RunConfig& rc) {
    PdeBlock b;
    const int I = rc.coefficients.edges;
    auto& p = b.problem;
    p.coefficients = rc.coefficients;
    const std::string dir = o.string_or("direction", "backward");
    if (dir == "backward")
        p.direction = PdeDirection::backward;
    else if (dir == "forward")
        p.direction = PdeDirection::forward;
    else
        throw ConfigError("direction must be 'backward' or 'forward'", o.child("direction"));
    p.T = o.number_or("T", rc.sim.T, 1e-12, 1e6);
    p.R = o.number("R", 1e-12, 1e6);
    p.K = o.number("K", 1e-12, 1e6);
    if (const json* v = o.find("source")) p.source = per_edge(*v, I, o.child("source"));
    if (const json* v = o.find("zeroth")) {
        if (p.direction == PdeDirection::backward) throw ConfigError("zeroth-order term is forward only", o.child("zeroth"));
        p.zeroth = per_edge(*v, I, o.child("zeroth"));
    }
    if (const json* v = o.find("vertex_source")) p.vertex_source = field_tl(expression(*v, o.child("vertex_source"), "x"));
    p.data = per_edge_2(o.at("data"), I, o.child("data"), 't');
    if (const json* v = o.find("ceiling")) p.ceiling = per_edge_2(*v, I, o.child("ceiling"), 'l');
    b.grid = grid(o.object("grid"));
    b.points = queries(o, "points", I, p.T);
    for (std::size_t k = 0; k < b.points.size(); ++k) {
        const auto& q = b.points[k];
        if (q.x > p.R || q.l > p.K)
            throw ConfigError("point lies outside [0, R] x [0, K]", o.child("points") + "/" + std::to_string(k));
    }
    check_on_grid(b.points, p.T, b.grid.M, o.child("points"));
    o.finish();
    return b;
}

FkBlock fk_block(JsonObject o, const RunConfig& rc) {
    FkBlock b;
    const int I = rc.coefficients.edges;
    {
        JsonObject p = o.object("problem");
        auto& fp = b.problem;
        fp = FKProblem::constant(I, 0.0, 0.0, 0.0);
        if (const json* v = p.find("running")) fp.h = per_edge(*v, I, p.child("running"));
        if (const json* v = p.find("vertex")) fp.h0 = field_tl(expression(*v, p.child("vertex"), "x"));
        fp.g = per_edge_2(p.at("terminal"), I, p.child("terminal"), 't');
        if (const json* v = p.find("ceiling")) fp.ceiling = per_edge_2(*v, I, p.child("ceiling"), 'l');
        fp.h_bound = p.number_or("h_bound", 0.0, 0.0);
        p.finish();
        located(o.child("problem"), [&] {
            check_fk_problem(fp, I, SamplingPlan::uniform(rc.sim.T, 4.0, 4.0, 9));
            return 0;
        });
    }
    b.queries = queries(o, "queries", I, rc.sim.T);
    if (o.has("targets")) {
        b.targets = o.numbers("targets");
        if (b.targets.size() != b.queries.size()) throw ConfigError("expected one target per query", o.child("targets"));
    }
    if (o.has("grid")) {
        b.grid = grid(o.object("grid"));
        check_on_grid(b.queries, rc.sim.T, b.grid->M, o.child("queries"));
    }
    b.R = o.number_or("R", 0.0, 0.0, 1e6);
    b.K = o.number_or("K", 0.0, 0.0, 1e6);
    o.finish();
    return b;
}

std::string canonical_hash(json raw) {
    raw.erase("out");
    if (raw.contains("sim") && raw["sim"].is_object()) raw["sim"].erase("workers");
    return hex64(fnv1a64(raw.dump()));
}

}  // namespace

RunConfig parse_config(std::string text, std::string path, std::optional<std::uint64_t> seed,
                       std::optional<int> workers) {
    RunConfig rc;
    rc.path = std::move(path);
    rc.text = std::move(text);
    try {
        rc.raw = json::parse(rc.text);
    } catch (const json::parse_error& e) {
        throw ConfigError("malformed JSON: " + std::string(e.what()), "", e.byte > 0 ? e.byte - 1 : 0);
    }
    JsonObject root(rc.raw, "");
    rc.coefficients = expr::build_coefficient_set(root.at("coefficients"), "/coefficients");
    rc.sim = sim_block(root.object("sim"));
    if (seed) rc.sim.seed = *seed;
    if (workers) rc.sim.workers = *workers;
    located("/sim", [&] {
        check_config(rc.sim, rc.coefficients);
        return 0;
    });
    if (root.has("start")) rc.start = start_block(root.object("start"), rc.coefficients.edges, rc.sim.T);
    located("/start", [&] { return rc.sim.steps_from(rc.start.t); });
    rc.out = root.string_or("out", rc.out);

    if (root.has("localtime")) rc.localtime = localtime_block(root.object("localtime"), rc);
    if (root.has("scatter")) rc.scatter = scatter_block(root.object("scatter"), rc);
    if (root.has("exitstats")) rc.exitstats = exit_block(root.object("exitstats"), rc);
    if (root.has("atom")) rc.atom = atom_block(root.object("atom"));
    if (root.has("martingale")) rc.martingale = martingale_block(root.object("martingale"), rc);
    if (root.has("ito")) rc.ito = ito_block(root.object("ito"), rc);
    if (root.has("markov")) rc.markov = markov_block(root.object("markov"), rc);
    if (root.has("pde")) rc.pde = pde_block(root.object("pde"), rc);
    if (root.has("fk")) rc.fk = fk_block(root.object("fk"), rc);
    root.finish();

    json hashed = rc.raw;
    hashed["sim"]["seed"] = rc.sim.seed;
    rc.hash = canonical_hash(std::move(hashed));
    return rc;
}

RunConfig load_config(const std::string& path, std::optional<std::uint64_t> seed, std::optional<int> workers) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path, seed, workers);
}

// ---- locating pointers in the source text ----

namespace {

struct Scanner {
    std::string_view s;
    std::size_t pos = 0;

    bool ok() const { return pos < s.size(); }
    void ws() {
        while (ok() && (s[pos] == ' ' || s[pos] == '\t' || s[pos] == '\n' || s[pos] == '\r')) ++pos;
    }
    bool eat(char c) {
        ws();
        if (ok() && s[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }
    // Decoded string at pos (pos on the opening quote); \u escapes are kept verbatim.
    std::optional<std::string> string() {
        if (!ok() || s[pos] != '"') return std::nullopt;
        std::string out;
        ++pos;
        while (ok() && s[pos] != '"') {
            if (s[pos] == '\\' && pos + 1 < s.size()) {
                const char e = s[pos + 1];
                const char* map = "\"\\/bfnrt";
                const char* to = "\"\\/\b\f\n\r\t";
                const char* hit = std::strchr(map, e);
                if (e == 'u') {
                    out.append(s.substr(pos, 6));
                    pos += 6;
                    continue;
                }
                out.push_back(hit ? to[hit - map] : e);
                pos += 2;
                continue;
            }
            out.push_back(s[pos++]);
        }
        if (!ok()) return std::nullopt;
        ++pos;
        return out;
    }
    bool skip_value() {
        ws();
        if (!ok()) return false;
        if (s[pos] == '"') return string().has_value();
        if (s[pos] == '{' || s[pos] == '[') {
            int depth = 0;
            while (ok()) {
                const char c = s[pos];
                if (c == '"') {
                    if (!string()) return false;
                    continue;
                }
                if (c == '{' || c == '[') ++depth;
                if (c == '}' || c == ']') --depth;
                ++pos;
                if (depth == 0) return true;
            }
            return false;
        }
        while (ok() && s[pos] != ',' && s[pos] != '}' && s[pos] != ']' && s[pos] != ' ' && s[pos] != '\n' &&
               s[pos] != '\r' && s[pos] != '\t')
            ++pos;
        return true;
    }
};

std::vector<std::string> split_pointer(std::string_view p) {
    std::vector<std::string> out;
    if (p.empty()) return out;
    std::size_t k = p[0] == '/' ? 1 : 0;
    std::string cur;
    for (; k <= p.size(); ++k) {
        if (k == p.size() || p[k] == '/') {
            out.push_back(cur);
            cur.clear();
        } else if (p[k] == '~' && k + 1 < p.size()) {
            cur.push_back(p[k + 1] == '1' ? '/' : '~');
            ++k;
        } else {
            cur.push_back(p[k]);
        }
    }
    return out;
}

}  // namespace

std::size_t locate(std::string_view text, std::string_view pointer) {
    Scanner sc{text};
    sc.ws();
    for (const auto& seg : split_pointer(pointer)) {
        sc.ws();
        if (!sc.ok()) return std::string_view::npos;
        if (sc.s[sc.pos] == '{') {
            ++sc.pos;
            bool found = false;
            while (true) {
                sc.ws();
                auto key = sc.string();
                if (!key || !sc.eat(':')) return std::string_view::npos;
                sc.ws();
                if (*key == seg) {
                    found = true;
                    break;
                }
                if (!sc.skip_value()) return std::string_view::npos;
                if (!sc.eat(',')) return std::string_view::npos;
            }
            if (!found) return std::string_view::npos;
        } else if (sc.s[sc.pos] == '[') {
            ++sc.pos;
            std::size_t idx = 0;
            try {
                idx = std::stoul(seg);
            } catch (...) {
                return std::string_view::npos;
            }
            for (std::size_t k = 0; k < idx; ++k) {
                if (!sc.skip_value() || !sc.eat(',')) return std::string_view::npos;
            }
            sc.ws();
        } else {
            return std::string_view::npos;
        }
    }
    sc.ws();
    return sc.ok() ? sc.pos : std::string_view::npos;
}

std::size_t locate_inner(std::string_view text, std::size_t at, std::size_t inner) {
    if (at >= text.size() || text[at] != '"') return at;
    std::size_t pos = at + 1, decoded = 0;
    while (pos < text.size() && text[pos] != '"' && decoded < inner) {
        pos += text[pos] == '\\' ? (pos + 1 < text.size() && text[pos + 1] == 'u' ? 6 : 2) : 1;
        ++decoded;
    }
    return pos;
}

std::string describe(const ConfigError& e, const std::string& path, std::string_view text) {
    std::string msg = e.what();
    for (char& c : msg)
        if (c == '\n' || c == '\r') c = ' ';
    std::ostringstream os;
    os << "config error: " << path;
    std::size_t offset = std::string_view::npos;
    if (!e.pointer().empty()) {
        os << ": key " << e.pointer();
        offset = locate(text, e.pointer());
        if (offset != std::string_view::npos && e.inner_offset() != no_offset)
            offset = locate_inner(text, offset, e.inner_offset());
    } else if (e.inner_offset() != no_offset) {
        offset = e.inner_offset();
    }
    if (offset != std::string_view::npos) os << ": offset " << offset;
    os << ": " << msg;
    return os.str();
}

}  // namespace spider::cli
