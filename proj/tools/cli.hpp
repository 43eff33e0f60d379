#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "spider/error.hpp"
#include "spider/feynman_kac.hpp"
#include "spider/json_reader.hpp"
#include "spider/pde.hpp"
#include "spider/verify.hpp"

namespace spider::cli {

using ordered_json = nlohmann::ordered_json;

inline constexpr int exit_ok = 0;
inline constexpr int exit_check_failed = 1;
inline constexpr int exit_config = 2;
inline constexpr int exit_runtime = 3;

struct LocaltimeBlock {
    std::vector<double> eps;  // decreasing
    bool oracle = true;       // reflected-BM skeletons vs exact Skorokhod local time
    double time = 0.0;
    std::vector<int> subset;  // occupation edges (spider mode)
    std::optional<double> target;  // subset occupation target at the smallest eps
    std::vector<double> levels;    // advisory downcrossing L1 levels, one per eps
};

struct ScatterBlock {
    double delta = 0.01;
    std::size_t n = 10000;
    double t = 0.0, l = 0.0;
};

struct ExitBlock {
    std::vector<double> deltas;
    std::size_t n = 10000;
    double t = 0.0, l = 0.0;
};

struct AtomBlock {
    std::vector<double> deltas;
    bool oracle = false;  // compare with P(|N(0, T)| <= delta)
};

struct MartingaleBlock {
    double s = 0.0, s_prime = 0.0;
    std::vector<TestFunction> functions;
};

struct ItoBlock {
    std::vector<TestFunction> functions;
    std::vector<double> hs;  // decreasing, each an integer multiple of the smallest
    std::size_t paths = 8;
};

struct MarkovBlock {
    StoppingSpec stop;
    std::vector<std::pair<std::string, PathFunctional>> functionals;
    double lag = 0.0;
};

struct PdeBlock {
    PdeProblem problem;
    PdeGrid grid;
    std::vector<FKQuery> points;
};

struct FkBlock {
    FKProblem problem;
    std::vector<FKQuery> queries;
    std::vector<double> targets;  // empty or one per query
    std::optional<PdeGrid> grid;  // required by fk-compare
    double R = 0.0, K = 0.0;
};

struct RunConfig {
    std::string path;
    std::string text;
    json raw;
    CoefficientSet coefficients;
    SimConfig sim;
    SpiderState start;
    std::string out = "out";
    std::string hash;

    std::optional<LocaltimeBlock> localtime;
    std::optional<ScatterBlock> scatter;
    std::optional<ExitBlock> exitstats;
    std::optional<AtomBlock> atom;
    std::optional<MartingaleBlock> martingale;
    std::optional<ItoBlock> ito;
    std::optional<MarkovBlock> markov;
    std::optional<PdeBlock> pde;
    std::optional<FkBlock> fk;
};

// Reads, range-checks and compiles every block. Throws ConfigError.
RunConfig load_config(const std::string& path, std::optional<std::uint64_t> seed, std::optional<int> workers);
RunConfig parse_config(std::string text, std::string path, std::optional<std::uint64_t> seed,
                       std::optional<int> workers);

// Byte offset in `text` of the JSON value at `pointer`, or npos.
std::size_t locate(std::string_view text, std::string_view pointer);
// Byte offset of the decoded character `inner` of the string literal starting at `at`.
std::size_t locate_inner(std::string_view text, std::size_t at, std::size_t inner);

// One-line diagnostic for a config error in `text`.
std::string describe(const ConfigError& e, const std::string& path, std::string_view text);

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

struct Outcome {
    std::string name;
    ordered_json params;
    EstimatorReport report;
    Table table;
};

const std::vector<std::string>& subcommands();

// Runs one subcommand on a loaded config; throws ConfigError when its block is missing.
Outcome execute(const std::string& command, const RunConfig& cfg);

// Writes <out>/<name>.csv, <name>.json and <name>.meta.json; returns the paths written.
std::vector<std::string> write_outputs(const Outcome& o, const RunConfig& cfg, const ordered_json& meta);

std::string csv_text(const Table& t, const std::string& config_hash);
std::string json_text(const Outcome& o, const RunConfig& cfg);

// Full command line: parse flags, load, execute, write. Returns the exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace spider::cli
