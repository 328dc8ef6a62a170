#pragma once

// Counter-based random numbers (Philox4x32-10, Salmon et al. 2011).
//
// Every draw is a pure function of (seed, stream, index):
//
//   (w0, w1, w2, w3) = Philox4x32-10(counter = (lo(index), hi(index), lo(stream), hi(stream)),
//                                    key     = (lo(seed), hi(seed)))
//   uniform(seed, stream, index) = ((w0 >> 5) * 2^26 + (w1 >> 6)) * 2^-53
//
// so ensembles are reproducible independently of thread scheduling and can be
// regenerated in any language that implements Philox4x32-10.

#include <array>
#include <cstdint>

namespace diraclab {

class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr int kRounds = 10;

    static constexpr Counter block(Counter ctr, Key key) {
        for (int r = 0; r < kRounds; ++r) {
            if (r > 0) {
                key[0] += kW0;
                key[1] += kW1;
            }
            ctr = round(ctr, key);
        }
        return ctr;
    }

private:
    static constexpr std::uint32_t kM0 = 0xD2511F53u;
    static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kW0 = 0x9E3779B9u;
    static constexpr std::uint32_t kW1 = 0xBB67AE85u;

    static constexpr Counter round(const Counter& c, const Key& k) {
        const std::uint64_t p0 = std::uint64_t(kM0) * c[0];
        const std::uint64_t p1 = std::uint64_t(kM1) * c[2];
        const auto hi0 = std::uint32_t(p0 >> 32), lo0 = std::uint32_t(p0);
        const auto hi1 = std::uint32_t(p1 >> 32), lo1 = std::uint32_t(p1);
        return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }
};

/// A seeded stream of uniforms addressed by index. `split` derives an
/// independent child stream, e.g. one per Monte-Carlo trial.
class RandomStream {
public:
    constexpr explicit RandomStream(std::uint64_t seed, std::uint64_t stream = 0)
        : seed_(seed), stream_(stream) {}

    constexpr std::uint64_t seed() const { return seed_; }
    constexpr std::uint64_t stream() const { return stream_; }

    constexpr Philox4x32::Counter raw(std::uint64_t index) const {
        return Philox4x32::block(
            {std::uint32_t(index), std::uint32_t(index >> 32), std::uint32_t(stream_),
             std::uint32_t(stream_ >> 32)},
            {std::uint32_t(seed_), std::uint32_t(seed_ >> 32)});
    }

    /// Uniform double in [0, 1) with 53 random bits.
    constexpr double uniform(std::uint64_t index) const {
        const auto w = raw(index);
        const std::uint64_t bits = (std::uint64_t(w[0] >> 5) << 26) | std::uint64_t(w[1] >> 6);
        return double(bits) * 0x1.0p-53;
    }

    /// Child stream; the mapping mixes the parent stream id so nested splits
    /// do not collide with siblings.
    constexpr RandomStream split(std::uint64_t child) const {
        const auto w = Philox4x32::block(
            {std::uint32_t(child), std::uint32_t(child >> 32), std::uint32_t(stream_),
             std::uint32_t(stream_ >> 32)},
            {std::uint32_t(seed_) ^ 0x5bd1e995u, std::uint32_t(seed_ >> 32) ^ 0x27d4eb2fu});
        return RandomStream(seed_, (std::uint64_t(w[0]) << 32) | w[1]);
    }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
};

}  // namespace diraclab
