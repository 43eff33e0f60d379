#include <doctest.h>

#include <cmath>
#include <numeric>

#include "spider/philox.hpp"
#include "spider/stats.hpp"

using namespace spider;

TEST_CASE("running stats matches two-pass formulas and merges") {
    std::vector<double> v{1.5, -2.0, 3.25, 0.0, 7.0, 2.0};
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    double ss = 0;
    for (double x : v) ss += (x - mean) * (x - mean);
    RunningStats all = summarize(v);
    CHECK(all.mean == doctest::Approx(mean).epsilon(1e-14));
    CHECK(all.variance() == doctest::Approx(ss / 5).epsilon(1e-14));
    RunningStats a = summarize(std::span(v).first(2)), b = summarize(std::span(v).subspan(2));
    a.merge(b);
    CHECK(a.n == 6);
    CHECK(a.mean == doctest::Approx(mean).epsilon(1e-14));
    CHECK(a.variance() == doctest::Approx(ss / 5).epsilon(1e-14));
}

TEST_CASE("kolmogorov survival function reference values") {
    // tabulated critical values of the Kolmogorov distribution
    CHECK(kolmogorov_q(1.3581) == doctest::Approx(0.05).epsilon(2e-3));
    CHECK(kolmogorov_q(1.2238) == doctest::Approx(0.10).epsilon(2e-3));
    CHECK(kolmogorov_q(1.6276) == doctest::Approx(0.01).epsilon(5e-3));
    CHECK(kolmogorov_q(0.5) == doctest::Approx(0.9639).epsilon(1e-3));
    // both branches agree where they meet
    CHECK(kolmogorov_q(1.1799) == doctest::Approx(kolmogorov_q(1.1801)).epsilon(1e-3));
}

TEST_CASE("two-sample KS") {
    PathStream s(9, 0), t(9, 1);
    std::vector<double> a, b, c;
    for (int k = 0; k < 4000; ++k) {
        a.push_back(s.normal(k));
        b.push_back(t.normal(k));
        c.push_back(t.normal(k) + 0.2);
    }
    CHECK(ks_two_sample(a, b).p_value > 0.01);
    CHECK(ks_two_sample(a, c).p_value < 1e-6);
    auto same = ks_two_sample(a, a);
    CHECK(same.statistic == 0.0);
    CHECK(same.p_value == 1.0);
    // disjoint supports
    CHECK(ks_two_sample({1, 2, 3}, {4, 5, 6}).statistic == 1.0);
    // ties are handled by stepping through distinct values
    CHECK(ks_two_sample({0, 0, 0, 1}, {0, 0, 0, 1}).statistic == 0.0);
}

TEST_CASE("wasserstein-1 of a shifted sample is the shift") {
    std::vector<double> a{0.1, 0.5, 0.9, 2.0}, b;
    for (double x : a) b.push_back(x + 0.3);
    CHECK(wasserstein1(a, b) == doctest::Approx(0.3));
    CHECK(wasserstein1({0.0}, {0.0, 1.0}) == doctest::Approx(0.5));
}
