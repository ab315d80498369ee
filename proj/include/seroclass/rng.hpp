#ifndef SEROCLASS_RNG_HPP_
#define SEROCLASS_RNG_HPP_

#include <cstdint>
#include <random>

namespace seroclass {

// splitmix64 scrambler; used to decorrelate derived seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Deterministic per-task seed from a base seed and up to three indices
// (e.g. prevalence index, sample-size index, trial index).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a = 0,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t s = splitmix64(base);
    s = splitmix64(s ^ (a + 0x100000001ull));
    s = splitmix64(s ^ (b + 0x200000003ull));
    s = splitmix64(s ^ (c + 0x300000005ull));
    return s;
}

inline std::mt19937_64 make_rng(std::uint64_t seed) {
    return std::mt19937_64(splitmix64(seed));
}

}  // namespace seroclass

#endif  // SEROCLASS_RNG_HPP_
