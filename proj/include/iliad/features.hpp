#pragma once

// Hashed sparse features for log-linear policies: conjunctions of description
// unigrams/bigrams with environment-supplied state and action descriptor
// atoms, plus a bias group. Deterministic by construction. The context side
// (state atoms x description n-grams) is hashed once and crossed with each
// action's atoms, so scoring many actions at one (state, description) is
// cheap.

#include <cstdint>
#include <span>
#include <vector>

#include "iliad/types.hpp"

namespace iliad {

struct FeatureVec {
    std::vector<std::uint32_t> idx;

    void clear() { idx.clear(); }
    std::size_t size() const { return idx.size(); }
};

namespace feat {

inline std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
    h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    h *= 0xff51afd7ed558ccdull;
    h ^= h >> 33;
    return h;
}

inline std::uint32_t bucket(std::uint64_t h, std::uint32_t dim_mask) {
    return static_cast<std::uint32_t>(h ^ (h >> 32)) & dim_mask;
}

// feature namespaces
inline constexpr std::uint64_t kBias = 1;
inline constexpr std::uint64_t kState = 2;
inline constexpr std::uint64_t kUnigram = 3;
inline constexpr std::uint64_t kBigram = 4;
inline constexpr std::uint64_t kUnigramState = 5;
inline constexpr std::uint64_t kBigramState = 6;

}  // namespace feat

// Context half of every feature: bias, state atoms, description unigrams and
// bigrams, and unigram x state-atom conjunctions.
inline void featurize_context(std::span<const AtomId> state_atoms, const Description& description,
                              std::vector<std::uint64_t>& out) {
    out.clear();
    out.push_back(feat::mix(feat::kBias, 0));
    for (AtomId sa : state_atoms) out.push_back(feat::mix(feat::kState, sa));
    const auto& toks = description.tokens;
    for (std::size_t i = 0; i < toks.size(); ++i) {
        out.push_back(feat::mix(feat::kUnigram, static_cast<std::uint64_t>(toks[i])));
        for (AtomId sa : state_atoms)
            out.push_back(feat::mix(
                feat::mix(feat::kUnigramState, static_cast<std::uint64_t>(toks[i])), sa));
        if (i + 1 < toks.size()) {
            const std::uint64_t big = feat::mix(
                feat::mix(feat::kBigram, static_cast<std::uint64_t>(toks[i])),
                static_cast<std::uint64_t>(toks[i + 1]));
            out.push_back(big);
            for (AtomId sa : state_atoms)
                out.push_back(feat::mix(
                    feat::mix(feat::mix(feat::kBigramState, static_cast<std::uint64_t>(toks[i])),
                              static_cast<std::uint64_t>(toks[i + 1])),
                    sa));
        }
    }
}

// Full feature vector for one action: every context hash crossed with every
// action atom. dim must be a power of two; duplicates accumulate.
inline void featurize_action(std::span<const std::uint64_t> context,
                             std::span<const AtomId> action_atoms, std::uint32_t dim,
                             FeatureVec& out) {
    out.clear();
    const std::uint32_t mask = dim - 1;
    for (AtomId act : action_atoms) {
        const std::uint64_t a = feat::mix(0x5bd1e995, act);
        for (std::uint64_t c : context) out.idx.push_back(feat::bucket(feat::mix(c, a), mask));
    }
}

// One-shot form.
inline void featurize(std::span<const AtomId> state_atoms, const Description& description,
                      std::span<const AtomId> action_atoms, std::uint32_t dim, FeatureVec& out) {
    std::vector<std::uint64_t> ctx;
    featurize_context(state_atoms, description, ctx);
    featurize_action(ctx, action_atoms, dim, out);
}

}  // namespace iliad
