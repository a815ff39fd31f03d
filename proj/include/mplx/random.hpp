#pragma once

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace mplx {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Small splittable generator (xoshiro256**). Every draw is defined here so a
// seed yields the same stream on any standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t s = seed;
        for (auto& word : state_) {
            s = splitmix64(s);
            word = s;
        }
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform() < p; }

    // Uniform in [0, bound), unbiased.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t limit = -bound % bound;
        for (;;) {
            const std::uint64_t r = next();
            if (r >= limit) return r % bound;
        }
    }

    // Uniform integer in [lo, hi].
    long long between(long long lo, long long hi) {
        return lo + static_cast<long long>(below(static_cast<std::uint64_t>(hi - lo) + 1));
    }

    // Independent child stream keyed by a label and an index.
    Rng split(std::string_view label, std::uint64_t index = 0) const {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (unsigned char c : label) h = (h ^ c) * 0x100000001b3ULL;
        return Rng(splitmix64(state_[0] ^ splitmix64(h ^ splitmix64(index))));
    }

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t k = items.size(); k > 1; --k) std::swap(items[k - 1], items[below(k)]);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t state_[4];
};

}  // namespace mplx
