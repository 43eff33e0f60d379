#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace spider {

// Welford accumulator.
struct RunningStats {
    std::size_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double v);
    void merge(const RunningStats& o);
    double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
    double stderr_mean() const;
};

RunningStats summarize(std::span<const double> v);

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t n1 = 0, n2 = 0;
};

// Two-sample Kolmogorov-Smirnov test with the asymptotic Kolmogorov law.
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

// Survival function of the Kolmogorov distribution, Q(lambda) = P(K > lambda).
double kolmogorov_q(double lambda);

// Wasserstein-1 distance between two empirical distributions.
double wasserstein1(std::vector<double> a, std::vector<double> b);

double normal_cdf(double z);

}  // namespace spider
