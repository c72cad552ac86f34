#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace gia {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Every stochastic choice in a run (init, splits, shuffles, views, suite
// synthesis) derives its seed from the single run seed plus a component name,
// so two configs that share a seed differ only where they are meant to.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view component) {
    std::uint64_t h = 1469598103934665603ULL; // FNV-1a 64
    for (unsigned char c : component) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return splitmix64(h ^ splitmix64(master));
}

inline std::mt19937_64 make_rng(std::uint64_t master, std::string_view component) {
    return std::mt19937_64(derive_seed(master, component));
}

} // namespace gia
