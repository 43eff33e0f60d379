#include "spider/philox.hpp"

#include <cmath>
#include <numbers>

namespace spider {

namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;
constexpr std::uint32_t kW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

inline void round(Philox4x32Ctr& c, const Philox4x32Key& k) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kM0, c[0], hi0, lo0);
    mulhilo(kM1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

}  // namespace

Philox4x32Ctr philox4x32(Philox4x32Ctr ctr, Philox4x32Key key) {
    for (int r = 0; r < 10; ++r) {
        if (r > 0) {
            key[0] += kW0;
            key[1] += kW1;
        }
        round(ctr, key);
    }
    return ctr;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

PathStream::PathStream(std::uint64_t seed, std::uint64_t path_index)
    : seed_(seed),
      path_(path_index),
      key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

Philox4x32Ctr PathStream::counter(std::uint64_t block, std::uint32_t tag) const {
    // block < 2^31 in practice; the tag occupies the top bit of the second word
    return {static_cast<std::uint32_t>(block),
            static_cast<std::uint32_t>(block >> 32) | (tag << 31),
            static_cast<std::uint32_t>(path_), static_cast<std::uint32_t>(path_ >> 32)};
}

double PathStream::normal(std::uint64_t k) {
    const std::uint64_t block = k >> 1;
    if (block != cached_block_) {
        const auto r = philox4x32(counter(block, 0), key_);
        const double u1 = 1.0 - u01(r[0], r[1]);  // (0, 1]
        const double u2 = u01(r[2], r[3]);
        const double rad = std::sqrt(-2.0 * std::log(u1));
        const double ang = 2.0 * std::numbers::pi * u2;
        cached_[0] = rad * std::cos(ang);
        cached_[1] = rad * std::sin(ang);
        cached_block_ = block;
    }
    return cached_[k & 1];
}

double PathStream::uniform(std::uint64_t k) const {
    const auto r = philox4x32(counter(k, 1), key_);
    return u01(r[0], r[1]);
}

}  // namespace spider
