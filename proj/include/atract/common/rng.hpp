#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace atract {

// Independent, reproducible substream of a base seed. The stream keys identify
// the consumer (class index, sample index, epoch, ...), so results do not
// depend on the order in which substreams are created.
inline std::mt19937_64 substream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
    auto mix = [](std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    };
    std::uint64_t state = mix(seed);
    for (auto k : keys) state = mix(state ^ mix(k + 0x632be59bd9b4e019ULL));
    return std::mt19937_64(state);
}

}  // namespace atract
