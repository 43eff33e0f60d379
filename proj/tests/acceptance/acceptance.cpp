// Acceptance runner: `acceptance N` checks criterion N (1..12), `acceptance all` runs every one.
// Each check prints a single PASS/FAIL line; the exit code is nonzero when any check fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>

#include "cli.hpp"
#include "expr_fuzz.hpp"
#include "spider/coeffexpr.hpp"
#include "spider/error.hpp"

namespace fs = std::filesystem;
using namespace spider;
using namespace spider::cli;

namespace {

const fs::path config_dir = SPIDER_CONFIG_DIR;
const fs::path out_root = SPIDER_OUT_DIR;

struct Verdict {
    bool pass = true;
    std::string detail;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

RunConfig config(const std::string& file, const std::string& tag, std::optional<int> workers = {}) {
    auto cfg = load_config((config_dir / file).string(), std::nullopt, workers);
    cfg.out = (out_root / tag).string();
    return cfg;
}

Outcome run(const std::string& file, const std::string& command, const std::string& tag,
            std::optional<int> workers = {}) {
    auto cfg = config(file, tag, workers);
    auto o = execute(command, cfg);
    write_outputs(o, cfg, ordered_json{{"command", command}, {"config", file}});
    return o;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string failed_rows(const EstimatorReport& r) {
    std::string s;
    for (const auto& row : r.rows)
        if (row.kind == ReportRow::Kind::check && !row.pass) s += " [" + row.label + " = " + fmt("%.6g", row.estimate) + "]";
    return s;
}

Verdict scatter(const std::string& file, const std::string& tag) {
    auto o = run(file, "scatter", tag);
    Verdict v{o.report.pass, "freq"};
    for (const auto& row : o.report.rows)
        if (row.label.rfind("edge ", 0) == 0)
            v.detail += " " + fmt("%.4f", row.estimate) + "+-" + fmt("%.4f", row.std_error) + " (" +
                        fmt("%.4f", row.target) + ")";
    v.detail += failed_rows(o.report);
    return v;
}

Verdict criterion_1() { return scatter("scatter_three_edges.json", "c01"); }
Verdict criterion_2() { return scatter("scatter_local_time.json", "c02"); }

Verdict criterion_3() {
    auto o = run("localtime_oracle.json", "localtime", "c03");
    Verdict v;
    v.detail = "downcrossing L1";
    for (const auto& row : o.report.rows) {
        if (row.label.rfind("downcrossing L1 eps=", 0) == 0) v.detail += " " + fmt("%.4f", row.estimate);
        if (row.label.rfind("downcrossing L1 decrease", 0) == 0 && !row.pass) v.pass = false;
    }
    v.detail += "; monotone " + std::string(v.pass ? "yes" : "no") + "; advisory levels";
    for (const auto& row : o.report.rows)
        if (row.kind == ReportRow::Kind::advisory)
            v.detail += " " + fmt("%.2f", row.target) + (row.pass ? ":ok" : ":exceeded");
    return v;
}

Verdict criterion_4() {
    auto o = run("localtime_oracle.json", "localtime", "c04_oracle");
    Verdict v;
    v.detail = "occupation L1";
    for (const auto& row : o.report.rows) {
        if (row.label.rfind("occupation L1 eps=", 0) == 0) v.detail += " " + fmt("%.4f", row.estimate);
        if (row.label.rfind("occupation L1 decrease", 0) == 0 && !row.pass) v.pass = false;
    }
    auto s = run("localtime_subset.json", "localtime", "c04_subset");
    const auto& last = s.report.rows.back();
    v.pass = v.pass && s.report.pass && last.kind == ReportRow::Kind::check;
    v.detail += "; edge-1 subset " + fmt("%.4f", last.estimate) + "+-" + fmt("%.4f", last.std_error) + " vs " +
                fmt("%.4f", last.target) + failed_rows(s.report);
    return v;
}

Verdict criterion_5() {
    auto o = run("exitstats.json", "exitstats", "c05");
    Verdict v{o.report.pass, ""};
    for (const auto& row : o.report.rows)
        if (row.kind == ReportRow::Kind::check) v.detail += row.label + " " + fmt("%.4f", row.estimate) + "; ";
    v.detail += failed_rows(o.report);
    return v;
}

Verdict criterion_6() {
    Verdict v;
    auto a = run("fk_unit_running.json", "fk-compare", "c06a");
    const auto cfg = config("fk_unit_running.json", "c06a");
    double worst = 0.0;
    for (std::size_t k = 0; k < a.table.rows.size(); ++k) {
        const double exact = cfg.sim.T - cfg.fk->queries[k].t;
        worst = std::max({worst, std::abs(std::stod(a.table.rows[k][4]) - exact), std::abs(std::stod(a.table.rows[k][6]) - exact)});
    }
    v.pass = a.report.pass && worst < 1e-9;
    v.detail = "(a) max |est - (T-t)| " + fmt("%.1e", worst);

    auto b_mc = run("fk_vertex_cost.json", "fk", "c06b");
    auto b_cmp = run("fk_vertex_cost.json", "fk-compare", "c06b");
    v.pass = v.pass && b_mc.report.pass && b_cmp.report.pass;
    v.detail += "; (b) mc " + fmt("%.4f", b_mc.report.rows[0].estimate) + "+-" + fmt("%.4f", b_mc.report.rows[0].std_error) +
                " pde " + b_cmp.table.rows[0][6] + (b_cmp.report.pass ? " ok" : " FAIL");

    auto c = run("fk_manufactured.json", "fk-compare", "c06c");
    v.pass = v.pass && c.report.pass;
    double ratio = 0.0;
    for (const auto& row : c.report.rows) ratio = std::max(ratio, row.estimate / row.hi);
    v.detail += "; (c) worst |mc - pde| / tolerance " + fmt("%.2f", ratio) + failed_rows(c.report);
    return v;
}

Verdict criterion_7() {
    auto o = run("ito.json", "ito", "c07");
    Verdict v{o.report.pass, ""};
    for (const auto& row : o.table.rows)
        if (row[0] == "smooth") v.detail += "h=" + row[1] + ": " + row[2] + "; ";
    double exact = 0.0;
    for (const auto& row : o.table.rows)
        if (row[0] == "constant" || row[0] == "identity") exact = std::max(exact, std::stod(row[4]));
    v.detail += "constant/identity max " + fmt("%.1e", exact) + failed_rows(o.report);
    return v;
}

Verdict criterion_8() {
    const auto cfg = config("martingale.json", "c08");
    const auto& fs_ = cfg.martingale->functions;
    int edge_dependent = 0;
    for (const auto& f : fs_) {
        bool differs = false;
        for (double t : {0.1, 0.3})
            for (double l : {0.2, 0.7})
                for (int e = 2; e <= cfg.coefficients.edges; ++e)
                    differs = differs || f.dx(1, t, 0.0, l) != f.dx(e, t, 0.0, l);
        edge_dependent += differs;
    }
    const bool alpha_moves = cfg.coefficients.alpha(0.0, 0.0) != cfg.coefficients.alpha(0.0, 1.0);
    auto o = execute("martingale", cfg);
    write_outputs(o, cfg, ordered_json{{"command", "martingale"}});
    Verdict v{o.report.pass && edge_dependent >= 5 && alpha_moves && cfg.sim.n_paths == 10000 && cfg.sim.h == 1e-4, ""};
    v.detail = std::to_string(fs_.size()) + " functions, " + std::to_string(edge_dependent) +
               " with edge-dependent vertex slope, alpha l-dependent " + (alpha_moves ? "yes" : "no") + "; |mean|/tol";
    for (const auto& row : o.report.rows) v.detail += " " + fmt("%.2f", std::abs(row.estimate) / row.hi);
    v.detail += failed_rows(o.report);
    return v;
}

Verdict criterion_9() {
    auto s = run("atom_spider.json", "atom", "c09_spider");
    auto r = run("atom_radial.json", "atom", "c09_radial");
    Verdict v{s.report.pass && r.report.pass, ""};
    v.detail = "spider C " + fmt("%.3f", s.report.row("c_fit").estimate) + " spread " +
               fmt("%.2f", s.report.row("c_spread").estimate) + "; radial C " + fmt("%.3f", r.report.row("c_fit").estimate) +
               " (oracle " + fmt("%.3f", std::sqrt(2 / std::numbers::pi)) + ")" + failed_rows(s.report) + failed_rows(r.report);
    return v;
}

Verdict criterion_10() {
    auto o = run("markov.json", "markov", "c10");
    Verdict v{o.report.pass, ""};
    for (const auto& row : o.table.rows) v.detail += row[0] + ": p=" + row[2] + " censored=" + row[3] + "; ";
    v.detail += failed_rows(o.report);
    return v;
}

Verdict criterion_11() {
    Verdict v{true, ""};
    const std::vector<std::pair<std::string, std::string>> cases{{"scatter_local_time.json", "scatter"},
                                                                 {"markov.json", "markov"},
                                                                 {"ito.json", "ito"},
                                                                 {"fk_unit_running.json", "fk-compare"}};
    int compared = 0;
    for (const auto& [file, command] : cases) {
        const std::string stem = "c11_" + command;
        run(file, command, stem + "_w1", 1);
        run(file, command, stem + "_w3", 3);
        const std::string cfg_path = (config_dir / file).string();
        const std::string out_dir = (out_root / (stem + "_w1")).string();
        const char* argv[] = {"spider", command.c_str(), "--config", cfg_path.c_str(), "--workers", "1", "--out", out_dir.c_str()};
        std::ostringstream sink;
        spider::cli::run(8, argv, sink, sink);
        for (const char* ext : {".csv", ".json"}) {
            const auto a = slurp(out_root / (stem + "_w1") / (command + ext));
            const auto b = slurp(out_root / (stem + "_w3") / (command + ext));
            ++compared;
            if (a.empty() || a != b) {
                v.pass = false;
                v.detail += command + ext + " differs; ";
            }
        }
    }
    v.detail += std::to_string(compared) + " files compared across reruns and worker counts 1 / 3";
    return v;
}

Verdict criterion_12() {
    Verdict v;
    fuzz::AstGen gen(12);
    int failures = 0;
    for (int k = 0; k < 10000; ++k) {
        const auto e = gen.gen(6);
        try {
            if (!expr::equal(e, expr::parse(expr::to_string(e)))) ++failures;
        } catch (const std::exception&) {
            ++failures;
        }
    }
    int unpositioned = 0;
    const auto& corpus = fuzz::malformed_corpus();
    for (const auto& src : corpus) {
        try {
            expr::parse(src);
            ++unpositioned;
        } catch (const ParseError& e) {
            if (e.offset() > src.size()) ++unpositioned;
        } catch (...) {
            ++unpositioned;
        }
    }
    // A malformed expression inside a config file surfaces as exit code 2 with a byte offset.
    fs::create_directories(out_root);
    const fs::path bad = out_root / "malformed.json";
    const std::string text =
        "{\n  \"coefficients\": {\"edges\": 2, \"drift\": \"1 +\", \"sigma\": \"1\",\n"
        "    \"alpha\": {\"weights\": [\"0.5\", \"0.5\"]},\n"
        "    \"bounds\": {\"a_lower\": 0.1, \"sigma_lower\": 0.5, \"b_bound\": 1, \"sigma_bound\": 1, "
        "\"alpha_lip\": 1}},\n  \"sim\": {\"h\": 0.01, \"T\": 1, \"n_paths\": 1}\n}\n";
    std::ofstream(bad, std::ios::binary) << text;
    std::size_t inner = 0;
    try {
        expr::parse("1 +");
    } catch (const ParseError& e) {
        inner = e.offset();
    }
    const std::string expected = "offset " + std::to_string(text.find("\"1 +\"") + 1 + inner);
    const std::string bad_path = bad.string();
    const char* argv[] = {"spider", "validate", "--config", bad_path.c_str()};
    std::ostringstream out, err;
    const int code = spider::cli::run(4, argv, out, err);
    const bool cli_ok = code == exit_config && err.str().find(expected) != std::string::npos;
    v.pass = failures == 0 && unpositioned == 0 && cli_ok;
    v.detail = "round trip failures " + std::to_string(failures) + "/10000; malformed corpus " +
               std::to_string(corpus.size() - unpositioned) + "/" + std::to_string(corpus.size()) +
               " positioned; cli exit " + std::to_string(code) + (cli_ok ? " with offset" : " (" + err.str() + ")");
    return v;
}

const std::vector<std::pair<std::string, std::function<Verdict()>>>& criteria() {
    static const std::vector<std::pair<std::string, std::function<Verdict()>>> c{
        {"scattering law", criterion_1},
        {"local-time-dependent scattering", criterion_2},
        {"downcrossing representation", criterion_3},
        {"occupation estimator", criterion_4},
        {"exit asymptotics", criterion_5},
        {"Feynman-Kac vs PDE", criterion_6},
        {"Ito residual", criterion_7},
        {"martingale residual", criterion_8},
        {"no atom at zero", criterion_9},
        {"strong Markov", criterion_10},
        {"determinism", criterion_11},
        {"parser", criterion_12}};
    return c;
}

bool check(int k) {
    const auto& [name, fn] = criteria()[k - 1];
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
        v = fn();
    } catch (const std::exception& e) {
        v = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << k << " (" << name << "): " << v.detail << " ["
              << fmt("%.1f", secs) << " s]" << std::endl;
    return v.pass;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: acceptance <1..12|all>\n";
        return 2;
    }
    const std::string arg = argv[1];
    const int n = static_cast<int>(criteria().size());
    if (arg == "all") {
        bool ok = true;
        for (int k = 1; k <= n; ++k) ok = check(k) && ok;
        return ok ? 0 : 1;
    }
    const int k = std::atoi(arg.c_str());
    if (k < 1 || k > n) {
        std::cerr << "criterion must be 1.." << n << " or all\n";
        return 2;
    }
    return check(k) ? 0 : 1;
}
