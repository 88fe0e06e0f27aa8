#include "evosynth/rng.hpp"

#include <limits>

namespace evosynth {

uint64_t Rng::next_index(uint64_t n) {
    const uint64_t max = std::numeric_limits<uint64_t>::max();
    const uint64_t limit = max - max % n;
    uint64_t x;
    do {
        x = gen_();
    } while (x >= limit);
    return x % n;
}

uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

uint64_t derive_seed(uint64_t master, uint64_t stream) {
    return splitmix64(master + 0x9E3779B97F4A7C15ULL * (stream + 1));
}

}  // namespace evosynth
