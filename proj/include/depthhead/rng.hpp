#pragma once

#include <cstdint>
#include <random>

namespace depthhead {

// Sampling helpers built directly on the mt19937 output stream.
// The standard pins the engine's bit sequence but not the library
// distributions, so rolling the arithmetic here keeps corpora, weight
// initialization and shuffles byte-identical across toolchains.

inline double uniform_unit(std::mt19937& rng) {
    // 32 bits are plenty for every sampling decision in this project.
    return rng() * (1.0 / 4294967296.0);  // [0, 1)
}

inline double uniform_real(std::mt19937& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform_unit(rng);
}

// Unbiased integer draw from [lo, hi] via rejection.
inline std::uint32_t uniform_int(std::mt19937& rng, std::uint32_t lo, std::uint32_t hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi) - lo + 1;
    const std::uint64_t limit = (std::uint64_t{1} << 32) - ((std::uint64_t{1} << 32) % span);
    std::uint64_t draw;
    do {
        draw = rng();
    } while (draw >= limit);
    return lo + static_cast<std::uint32_t>(draw % span);
}

template <typename T>
void shuffle_indices(std::vector<T>& items, std::mt19937& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const std::size_t j = uniform_int(rng, 0, static_cast<std::uint32_t>(i - 1));
        std::swap(items[i - 1], items[j]);
    }
}

}  // namespace depthhead
