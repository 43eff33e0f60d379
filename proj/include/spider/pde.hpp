#pragma once

#include <functional>
#include <string>
#include <vector>

#include "spider/network.hpp"

namespace spider {

// f(t, l) for vertex data, f(x, l) for payoffs, f(t, x) for the l = K slice.
using Field2 = std::function<double(double, double)>;

enum class PdeDirection {
    forward,   // d_t u - sigma u_xx + b u_x + c u = f, vertex d_l u + sum alpha d_x u = phi, u(0) = g
    backward,  // d_t u + sigma^2/2 u_xx + b u_x + h = 0, vertex d_l u + sum alpha d_x u + h_0 = 0, u(T) = g
};

struct PdeProblem {
    CoefficientSet coefficients;
    PdeDirection direction = PdeDirection::backward;
    double T = 1.0;
    double R = 1.0;  // Neumann boundary on every edge
    double K = 1.0;  // Dirichlet slice in l

    std::vector<Field> source;  // h_i (backward) or f_i (forward); empty: zero
    std::vector<Field> zeroth;  // c_i, forward only; empty: zero
    Field2 vertex_source;       // h_0(t, l) (backward) or phi(t, l) (forward); empty: zero
    std::vector<Field2> data;   // g_i(x, l), terminal (backward) or initial (forward)
    std::vector<Field2> ceiling;  // psi_i(t, x) on l = K; empty: g_i(x, K)
};

// Truncation defaults around a query point: R = x + 4 sigma_bound sqrt(T), K = l + 4 sqrt(T).
double default_R(double x_query, double sigma_bound, double T);
double default_K(double l_query, double T);

struct PdeGrid {
    int M = 50;  // time steps on [0, T]
    int J = 50;  // space steps on [0, R]
    int P = 50;  // local-time steps on [0, K]

    PdeGrid refined() const { return {2 * M, 2 * J, 2 * P}; }
};

struct SolveOptions {
    bool keep_all = false;
    std::vector<int> keep;  // time indices to store besides 0 and M
};

struct ResidualReport {
    double interior_max = 0.0, interior_l2 = 0.0;
    double vertex_max = 0.0, vertex_l2 = 0.0;
    double neumann_max = 0.0, neumann_l2 = 0.0;
    double boundary_max() const { return vertex_max > neumann_max ? vertex_max : neumann_max; }
};

class PdeSolution {
public:
    PdeSolution(int edges, double T, double R, double K, PdeGrid grid, std::vector<int> kept);

    // Grid function u(t_m, x_j, l_p) sampled from `u(edge, t, x, l)` at every time level.
    static PdeSolution sample(const PdeProblem& prob, const PdeGrid& grid,
                              const std::function<double(int, double, double, double)>& u);

    int edges() const { return edges_; }
    const PdeGrid& grid() const { return grid_; }
    double T() const { return T_; }
    double R() const { return R_; }
    double K() const { return K_; }
    double dt() const { return T_ / grid_.M; }
    double dx() const { return R_ / grid_.J; }
    double dl() const { return K_ / grid_.P; }

    bool has_time(int m) const { return slot_[m] >= 0; }
    const std::vector<int>& kept() const { return kept_; }

    // j = 0 is the vertex (shared by all edges).
    double at(int m, int edge, int j, int p) const;
    double& at(int m, int edge, int j, int p);

    // Bilinear in (x, l) at time node nearest to t, which must be stored.
    double value(double t, double x, int edge, double l) const;

    std::vector<std::string> warnings;
    double compatibility_defect = 0.0;

private:
    std::size_t index(int m, int edge, int j, int p) const;

    int edges_;
    double T_, R_, K_;
    PdeGrid grid_;
    std::vector<int> kept_;
    std::vector<int> slot_;
    std::vector<double> vertex_;  // [slot][p]
    std::vector<double> edge_;    // [slot][p][edge][j-1]
};

// Implicit Euler in time, slices in l marched down from l = K. Throws EvalError
// (with slice and time index) when the vertex-coupled system is singular.
PdeSolution solve(const PdeProblem& prob, const PdeGrid& grid, const SolveOptions& opts = {});

// Discrete residual of the scheme's equations at all stored consecutive time levels.
ResidualReport residual(const PdeSolution& u, const PdeProblem& prob);

struct ResidualNode {
    enum class Kind { interior, neumann, vertex };
    Kind kind = Kind::interior;
    int m = 0, edge = 0, j = 0, p = 0;  // vertex rows carry edge = 0, j = 0
    double value = 0.0;
};

// Nodes whose residual exceeds `threshold` in absolute value.
std::vector<ResidualNode> residual_nodes(const PdeSolution& u, const PdeProblem& prob, double threshold);

// Max |d_l g(0,l) + sum alpha_i d_x g_i(0,l) + h_0| (backward, at T) or with -phi (forward, at 0),
// sampled in l on [0, K] by central differences.
double compatibility_defect(const PdeProblem& prob, int samples = 33);

}  // namespace spider
