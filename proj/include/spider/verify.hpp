#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spider/network.hpp"
#include "spider/simulator.hpp"
#include "spider/test_function.hpp"

namespace spider {

// One estimate checked against [lo, hi]. Info rows carry no bounds and always pass;
// advisory rows are checked but do not affect the report verdict.
struct ReportRow {
    enum class Kind { check, advisory, info };
    std::string label;
    double estimate = 0.0;
    double std_error = 0.0;
    double target = 0.0;
    double lo = 0.0, hi = 0.0;
    Kind kind = Kind::check;
    bool pass = true;

    bool recompute() const;
};

ReportRow check_row(std::string label, double estimate, double std_error, double target, double lo, double hi);
ReportRow advisory_row(std::string label, double estimate, double std_error, double target, double lo, double hi);
ReportRow info_row(std::string label, double estimate, double std_error = 0.0);
// |estimate - target| <= 3 std_error + slack
ReportRow within_row(std::string label, double estimate, double std_error, double target, double slack = 0.0);

struct EstimatorReport {
    std::string name;
    std::vector<ReportRow> rows;
    std::size_t n = 0;
    std::uint64_t seed = 0;
    std::string config_hash;
    std::vector<std::string> notes;
    bool pass = true;

    void add(ReportRow row);
    const ReportRow& row(const std::string& label) const;
    // Verdict from the stored rows alone.
    bool recompute_pass() const;
};

// Stopping rule on the path history.
struct StoppingSpec {
    enum class Kind { hitting, fixed_time, vertex_after };
    Kind kind = Kind::hitting;
    double level = 0.0;  // hitting: first grid time with x >= level on any edge
    double time = 0.0;   // fixed_time: s; vertex_after: first vertex visit at or after s

    static StoppingSpec hitting(double level) { return {Kind::hitting, level, 0.0}; }
    static StoppingSpec fixed(double s) { return {Kind::fixed_time, 0.0, s}; }
    static StoppingSpec vertex_after(double s) { return {Kind::vertex_after, 0.0, s}; }

    // Does the rule fire at state s (reached with the given contact flag)?
    bool fires(const SpiderState& s, bool contact, double h) const;
    // First index of a stored path at which the rule fires.
    std::optional<std::size_t> index(const SpiderPath& p) const;
};

// Scheme-bias budget C sqrt(h) of martingale_residual. Calibrated on driftless unit-sigma
// paths with the tests/battery.hpp functions: the largest |mean| / sqrt(h) was 2.17 over
// h in {1e-2, 4e-3, 1e-3} at n = 1e5, carried by the l^2 term (sum of dl^2 ~ sqrt(h)).
inline constexpr double martingale_bias_c = 2.5;

// Increment over [s, s'] of the compensated process of each test function, one row per
// function: mean within 3 stderr + C sqrt(h) of 0. Paths are streamed, not stored.
EstimatorReport martingale_residual(const CoefficientSet& c, const SpiderState& init, const SimConfig& cfg,
                                    const std::vector<TestFunction>& battery, double s, double s_prime);

// Per-path increments for a stored path (for inspection and tests).
double martingale_increment(const SpiderPath& p, const CoefficientSet& c, const TestFunction& f, double s,
                            double s_prime);

// Max over grid times of |LHS - RHS| of the Ito formula with the path's own Gaussian
// increments. Throws ConfigError when the path has no stored noise.
double ito_residual(const SpiderPath& p, const CoefficientSet& c, const TestFunction& f);

// Paths on the fine grid and on coarsened grids driven by summed fine increments.
std::vector<double> coarsen_gaussians(std::span<const double> fine, std::size_t ratio);

struct ScatteringResult {
    std::vector<std::size_t> counts;  // per edge
    std::size_t censored = 0;
    std::size_t n = 0;
    std::vector<double> alpha;  // alpha(t, l) at the start
    EstimatorReport report;
};

// Exit edge at the first time x >= delta, started at the vertex at (t, l).
ScatteringResult scattering_distribution(const CoefficientSet& c, double t, double l, double delta, std::size_t n,
                                         const SimConfig& cfg);

struct ExitRow {
    double delta = 0.0;
    double l_ratio = 0.0, l_ratio_se = 0.0;          // E[l(theta) - l] / delta
    double theta_ratio = 0.0, theta_ratio_se = 0.0;  // E[theta - t] / delta^2
    std::size_t censored = 0;
};

struct ExitStats {
    std::vector<ExitRow> rows;
    EstimatorReport report;
};

// Checks: the smallest delta has l_ratio in [0.9, 1.1]; successive theta ratios in [0.5, 2].
ExitStats mean_exit_stats(const CoefficientSet& c, double t, double l, const std::vector<double>& deltas,
                          std::size_t n, const SimConfig& cfg);

struct AtomRow {
    double delta = 0.0;
    double p = 0.0, se = 0.0;
    double oracle = 0.0;  // NaN without an oracle
};

struct AtomResult {
    std::vector<AtomRow> rows;
    double c_fit = 0.0;   // least squares slope of p against delta through the origin
    double c_spread = 0.0;  // max / min of p / delta
    EstimatorReport report;
};

// P(x(t) <= delta) from samples of x(t), delta decreasing. Passes when the estimates are
// monotone, bounded by c_fit delta within 3 stderr at every delta, and p / delta is stable
// (spread <= 2). An optional oracle P(x(t) <= delta) adds 3-stderr comparisons.
AtomResult atom_test(std::span<const double> x_t, double t, const std::vector<double>& deltas,
                     const std::function<double(double)>& oracle = {});

// P(|N(0, t)| <= delta)
double reflected_gaussian_cdf(double delta, double t);

using PathFunctional = std::function<double(double x, int edge, double l)>;

struct MarkovResult {
    std::vector<double> continued, restarted;
    std::size_t censored = 0;
    double ks = 0.0, p_value = 0.0;
    EstimatorReport report;
};

// Functional at tau + lag on the original paths against fresh restarts from the state at
// tau (seeds derived from cfg.seed). Passes when p > 0.01 and censoring <= 20%.
MarkovResult strong_markov_test(const CoefficientSet& c, const SpiderState& init, const StoppingSpec& spec,
                                const PathFunctional& functional, double lag, const SimConfig& cfg);

}  // namespace spider
