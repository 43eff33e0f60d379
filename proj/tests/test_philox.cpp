#include <doctest.h>

#include <cmath>

#include "spider/philox.hpp"
#include "spider/stats.hpp"

using namespace spider;

TEST_CASE("philox4x32-10 known answers") {
    CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == Philox4x32Ctr{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
          Philox4x32Ctr{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
          Philox4x32Ctr{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("u01 range") {
    CHECK(u01(0, 0) == 0.0);
    CHECK(u01(0xffffffff, 0xffffffff) < 1.0);
}

TEST_CASE("path stream draws depend only on (seed, path, step)") {
    PathStream a(42, 7), b(42, 7);
    const double late = a.normal(1001);
    for (int k = 0; k < 1000; ++k) b.normal(k);
    CHECK(b.normal(1001) == late);
    CHECK(a.normal(5) == b.normal(5));
    CHECK(a.uniform(3) == b.uniform(3));
    PathStream c(42, 8), d(43, 7);
    CHECK(c.normal(1001) != late);
    CHECK(d.normal(1001) != late);
}

TEST_CASE("normals have unit variance, uniforms are flat") {
    PathStream s(1, 0);
    RunningStats n, u;
    int below = 0;
    const int count = 200000;
    for (int k = 0; k < count; ++k) {
        const double z = s.normal(k);
        n.add(z);
        if (z < -1.0) ++below;
        u.add(s.uniform(k));
    }
    CHECK(std::abs(n.mean) < 4.0 / std::sqrt(count));
    CHECK(std::abs(n.variance() - 1.0) < 0.02);
    CHECK(std::abs(below / double(count) - normal_cdf(-1.0)) < 0.004);
    CHECK(std::abs(u.mean - 0.5) < 0.003);
    CHECK(std::abs(u.variance() - 1.0 / 12) < 0.002);
}
