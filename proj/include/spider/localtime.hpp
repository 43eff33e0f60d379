#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "spider/network.hpp"
#include "spider/simulator.hpp"
#include "spider/test_function.hpp"

namespace spider {

// Alternating grid indices theta_1 < tau_1 < theta_2 < ... of excursions from eps down to 0.
struct ExcursionDecomposition {
    double eps = 0.0;
    std::vector<std::size_t> theta;  // first index with x >= eps after the previous tau
    std::vector<std::size_t> tau;    // first vertex contact after theta; tau.size() <= theta.size()

    // Number of completed [theta_n, tau_n] with tau_n at or before grid index k.
    std::size_t count(std::size_t k) const;
};

// Grid index of the last sample at or before time t.
std::size_t grid_index(const SpiderPath& p, double t);

ExcursionDecomposition excursion_decompose(const SpiderPath& p, double eps);

enum class LocalTimeMethod { downcrossing, occupation, excursion_functional, skorokhod_oracle };

struct LocalTimeEstimate {
    LocalTimeMethod method = LocalTimeMethod::downcrossing;
    double eps = 0.0;
    std::vector<double> times;
    std::vector<double> values;
};

// eps * N^eps(t) at each query time.
LocalTimeEstimate downcrossing_estimate(const SpiderPath& p, double eps, std::span<const double> times);
double downcrossing_estimate(const SpiderPath& p, double eps, double t);

// Sum over n <= N^eps(t) of f(theta_{n+1}) - f(tau_n), f read on the level sets x = eps and x = 0.
double excursion_functional(const SpiderPath& p, const TestFunction& f, double eps, double t);

// On-path Stieltjes sum of (d_l f + sum_j alpha_j d_x f_j)(s, 0, l) dl over [t0, t].
double vertex_integral(const SpiderPath& p, const CoefficientSet& c, const TestFunction& f, double t);

// (1/2 eps) sum_{j in subset} sum_k sigma_j(t_k, 0, l_k)^2 1{x_k <= eps, i_k = j} h.
LocalTimeEstimate occupation_estimate(const SpiderPath& p, const CoefficientSet& c, double eps,
                                      std::span<const double> times, const std::vector<int>& subset);
double occupation_estimate(const SpiderPath& p, const CoefficientSet& c, double eps, double t,
                           const std::vector<int>& subset);

// Exact Skorokhod reflection of the skeleton with the given (already scaled) increments.
SpiderPath skorokhod_oracle(std::span<const double> increments, double h);

// sqrt(h) * N(0,1) increments from the stream (seed, path_index); the same draws drive the simulator.
std::vector<double> brownian_increments(std::uint64_t seed, std::uint64_t path_index, double h, std::size_t steps);

}  // namespace spider
