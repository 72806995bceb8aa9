#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace iliad {

using StateId = std::int32_t;
using ActionId = std::int32_t;
using TokenId = std::int32_t;
using AtomId = std::uint32_t;

struct Step {
    StateId state;
    ActionId action;
    bool operator==(const Step&) const = default;
};

// Ordered (state, action) pairs; the start state is the first step's state.
struct Execution {
    std::vector<Step> steps;

    StateId start_state() const { return steps.front().state; }
    std::size_t length() const { return steps.size(); }
    bool operator==(const Execution&) const = default;
};

// Token sequence in the shared teacher language; empty is the distinguished
// null description.
struct Description {
    std::vector<TokenId> tokens;

    bool is_empty() const { return tokens.empty(); }
    bool operator==(const Description&) const = default;
};

// A task as the environment sees it. goal_id is an opaque handle into the
// environment's private corpus; learners never receive a Task.
struct Task {
    StateId start_state = 0;
    Description request;
    std::int32_t goal_id = -1;
};

struct EpisodeRecord {
    Task task;
    Execution execution;
    Description teacher_description;
    double evaluation_return = 0.0;  // harness-side only
};

class ProtocolViolation : public std::runtime_error {
public:
    ProtocolViolation(const std::string& what, StateId state, ActionId action)
        : std::runtime_error(what + " (state " + std::to_string(state) + ", action " +
                             std::to_string(action) + ")"),
          state(state), action(action) {}
    StateId state;
    ActionId action;
};

// Dense word <-> token-id registry.
class Vocab {
public:
    TokenId intern(std::string_view word) {
        auto it = index_.find(std::string(word));
        if (it != index_.end()) return it->second;
        const TokenId id = static_cast<TokenId>(words_.size());
        words_.emplace_back(word);
        index_.emplace(words_.back(), id);
        return id;
    }

    TokenId lookup(std::string_view word) const {
        auto it = index_.find(std::string(word));
        return it == index_.end() ? -1 : it->second;
    }

    const std::string& word(TokenId id) const { return words_.at(id); }
    int size() const { return static_cast<int>(words_.size()); }

    Description tokenize(std::string_view sentence) {
        Description d;
        std::size_t i = 0;
        while (i < sentence.size()) {
            while (i < sentence.size() && sentence[i] == ' ') ++i;
            std::size_t j = i;
            while (j < sentence.size() && sentence[j] != ' ') ++j;
            if (j > i) d.tokens.push_back(intern(sentence.substr(i, j - i)));
            i = j;
        }
        return d;
    }

    // Tokenization against the frozen vocabulary; unknown words are an error.
    Description tokenize_existing(std::string_view sentence) const {
        Description d;
        std::size_t i = 0;
        while (i < sentence.size()) {
            while (i < sentence.size() && sentence[i] == ' ') ++i;
            std::size_t j = i;
            while (j < sentence.size() && sentence[j] != ' ') ++j;
            if (j > i) {
                const TokenId id = lookup(sentence.substr(i, j - i));
                if (id < 0) throw std::invalid_argument("unknown vocabulary word");
                d.tokens.push_back(id);
            }
            i = j;
        }
        return d;
    }

    std::string render(const Description& d) const {
        std::string s;
        for (std::size_t i = 0; i < d.tokens.size(); ++i) {
            if (i) s += ' ';
            s += word(d.tokens[i]);
        }
        return s;
    }

private:
    std::vector<std::string> words_;
    std::unordered_map<std::string, TokenId> index_;
};

enum class Split { Sim, Val, Test };

inline const char* split_name(Split s) {
    switch (s) {
        case Split::Sim: return "sim";
        case Split::Val: return "val";
        case Split::Test: return "test";
    }
    return "?";
}

}  // namespace iliad
