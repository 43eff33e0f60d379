#pragma once

#include <array>
#include <cstdint>

namespace spider {

using Philox4x32Ctr = std::array<std::uint32_t, 4>;
using Philox4x32Key = std::array<std::uint32_t, 2>;

// Philox4x32-10 counter-based generator (Salmon et al., SC11).
Philox4x32Ctr philox4x32(Philox4x32Ctr ctr, Philox4x32Key key);

// 53-bit uniform in [0, 1) from two 32-bit words.
inline double u01(std::uint32_t hi, std::uint32_t lo) {
    return static_cast<double>((static_cast<std::uint64_t>(hi >> 5) << 26) | (lo >> 6)) * 0x1.0p-53;
}

std::uint64_t splitmix64(std::uint64_t x);

// Random stream of one path: normals and uniforms addressed by step index.
// Key is the seed, counter carries (block, tag, path index), so draws never depend
// on the order in which paths or steps are generated.
class PathStream {
public:
    PathStream(std::uint64_t seed, std::uint64_t path_index);

    double normal(std::uint64_t k);
    double uniform(std::uint64_t k) const;

    std::uint64_t seed() const { return seed_; }
    std::uint64_t path_index() const { return path_; }

private:
    Philox4x32Ctr counter(std::uint64_t block, std::uint32_t tag) const;

    std::uint64_t seed_;
    std::uint64_t path_;
    Philox4x32Key key_;
    std::uint64_t cached_block_ = ~std::uint64_t{0};
    double cached_[2] = {0.0, 0.0};
};

}  // namespace spider
