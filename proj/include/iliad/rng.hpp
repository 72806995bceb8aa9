#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string_view>

namespace iliad {

// xoshiro256** seeded through splitmix64. All sampling primitives are
// implemented here rather than via <random> distributions so that runs are
// bit-reproducible across compilers and platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : root_seed_(seed) {
        std::uint64_t x = seed;
        for (auto& word : state_) word = splitmix64(x);
    }

    // Independent, named substream derived from the root seed. Streams with
    // different names never share state with each other or with the parent.
    Rng stream(std::string_view name) const {
        return Rng(root_seed_ ^ (fnv1a(name) | 1ull));
    }

    Rng stream(std::string_view name, std::uint64_t index) const {
        std::uint64_t h = fnv1a(name);
        h ^= (index + 0x9e3779b97f4a7c15ull) * 0xbf58476d1ce4e5b9ull;
        return Rng(root_seed_ ^ (h | 1ull));
    }

    std::uint64_t next_u64() {
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

    // Uniform in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return next_double() < p; }

    // Uniform integer in [0, n). Rejection sampling keeps it unbiased.
    std::uint64_t below(std::uint64_t n) {
        if (n <= 1) return 0;
        const std::uint64_t threshold = (0ull - n) % n;
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    // Index sampled proportionally to nonnegative weights (need not sum to 1).
    int categorical(std::span<const double> weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        double u = next_double() * total;
        for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
            u -= weights[i];
            if (u < 0.0) return static_cast<int>(i);
        }
        return static_cast<int>(weights.size()) - 1;
    }

    double exponential() { return -std::log1p(-next_double()); }

    std::uint64_t root_seed() const { return root_seed_; }

private:
    static std::uint64_t splitmix64(std::uint64_t& x) {
        x += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    static std::uint64_t fnv1a(std::string_view s) {
        std::uint64_t h = 0xcbf29ce484222325ull;
        for (unsigned char c : s) {
            h ^= c;
            h *= 0x100000001b3ull;
        }
        return h;
    }

    std::uint64_t root_seed_;
    std::uint64_t state_[4];
};

}  // namespace iliad
