#pragma once

#include <cstdint>

namespace lumen {

/// splitmix64 mixing step; the workhorse behind seed derivation and the
/// stateless per-tick coins.
inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derives an independent child seed from a master seed and up to two
/// stream identifiers. Parallel and serial consumers derive the same
/// streams, so execution order never changes results.
inline constexpr std::uint64_t derive_seed(std::uint64_t master,
                                           std::uint64_t a,
                                           std::uint64_t b = 0) {
    std::uint64_t h = splitmix64(master ^ 0x6a09e667f3bcc909ULL);
    h = splitmix64(h ^ splitmix64(a));
    h = splitmix64(h ^ ~splitmix64(b));
    return h;
}

/// Bernoulli draw tied to one tick. Stateless: the outcome for a given
/// (seed, tick) never depends on which other ticks were sampled.
inline bool tick_coin(std::uint64_t seed, std::uint64_t tick, double probability) {
    if (probability <= 0.0) {
        return false;
    }
    if (probability >= 1.0) {
        return true;
    }
    const std::uint64_t r = splitmix64(seed ^ splitmix64(tick ^ 0xd1b54a32d192ed03ULL));
    return static_cast<double>(r >> 11) * 0x1.0p-53 < probability;
}

}  // namespace lumen
