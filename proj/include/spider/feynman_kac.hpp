#pragma once

#include <string>
#include <vector>

#include "spider/network.hpp"
#include "spider/pde.hpp"
#include "spider/simulator.hpp"

namespace spider {

struct FKProblem {
    std::vector<Field> h;          // running cost per edge
    Field2 h0;                     // vertex cost h_0(t, l); empty: zero
    std::vector<Field2> g;         // terminal payoff g_i(x, l)
    std::vector<Field2> ceiling;   // optional psi_i(t, x) for the PDE slice l = K
    double h_bound = 0.0;          // |h|; 0 skips the regularity check

    static FKProblem constant(int edges, double running, double vertex, double terminal);
};

// Throws ConfigError when g is discontinuous at the vertex or the sampled size and
// Lipschitz quotients of h, h_0 exceed h_bound.
void check_fk_problem(const FKProblem& prob, int edges, const SamplingPlan& plan);

struct FKQuery {
    double t = 0.0;
    double x = 0.0;
    EdgeIndex i;
    double l = 0.0;
};

struct FKEstimate {
    FKQuery query;
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n_paths = 0;
    std::string config_hash;
    std::vector<double> samples;  // per-path functional, in path order
};

// Left-endpoint quadrature of the running and vertex costs plus the terminal payoff,
// averaged over cfg.n_paths paths started at the query.
FKEstimate fk_estimate(const FKProblem& prob, const CoefficientSet& c, const FKQuery& q, const SimConfig& cfg);

// Backward PDE problem for the same data on [0, R] x [0, K].
PdeProblem fk_pde_problem(const FKProblem& prob, const CoefficientSet& c, double T, double R, double K);

struct FKComparisonRow {
    FKQuery query;
    double mc = 0.0, mc_stderr = 0.0;
    double pde = 0.0, pde_coarse = 0.0;
    double grid_budget = 0.0;  // |fine - coarse|
    double diff = 0.0;
    double tolerance = 0.0;    // 3 stderr + grid budget
    bool pass = false;
};

struct FKComparison {
    double R = 0.0, K = 0.0;
    PdeGrid grid;  // coarse; the fine grid is grid.refined()
    std::vector<FKComparisonRow> rows;
    std::vector<std::string> warnings;
    bool pass = false;
};

// R, K <= 0 select the defaults around the queries. Queries must lie at least 10% of R
// and K inside the truncated domain and on the coarse time grid.
FKComparison fk_vs_pde(const FKProblem& prob, const CoefficientSet& c, const std::vector<FKQuery>& queries,
                       const SimConfig& cfg, const PdeGrid& grid, double R = 0.0, double K = 0.0);

}  // namespace spider
