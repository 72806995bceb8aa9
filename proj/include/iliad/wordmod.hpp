#pragma once

// Word-modification environment: the agent emits a pattern@replace program
// token by token; the compiler applies it to the episode's input word. Also
// houses the synthetic corpus (program-template inventory with split-disjoint
// request phrasings), the unlabeled-program explorer pool, and the word
// transformation hypothesis space used by the simulated teacher's describer.

#include <algorithm>
#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "iliad/adel.hpp"
#include "iliad/protocol.hpp"
#include "iliad/regex.hpp"
#include "iliad/rng.hpp"
#include "iliad/types.hpp"

namespace iliad::wordmod {

inline bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

inline int levenshtein(std::string_view a, std::string_view b) {
    const std::size_t n = a.size(), m = b.size();
    std::vector<int> prev(m + 1), cur(m + 1);
    for (std::size_t j = 0; j <= m; ++j) prev[j] = static_cast<int>(j);
    for (std::size_t i = 1; i <= n; ++i) {
        cur[0] = static_cast<int>(i);
        for (std::size_t j = 1; j <= m; ++j) {
            const int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

// ---------------------------------------------------------------------------
// Program-template inventory. Each kind pairs a pattern template (X/Y slots)
// with four request phrasings: two for the simulation split, one each for
// validation and test. The split families are disjoint at template level but
// share role-marker words so slot fillers stay groundable.

struct KindSpec {
    const char* pattern;       // with X/Y placeholders
    const char* phrasings[4];  // sim, sim, val, test
};

inline const std::vector<KindSpec>& kind_inventory() {
    static const std::vector<KindSpec> kinds{
        {"()(X)()@Y",
         {"replace all X with Y", "substitute every X with Y", "swap all X with Y",
          "rewrite every X with Y"}},
        {"()(X)()@",
         {"delete all X", "remove every X", "erase all X", "drop every X"}},
        {"^()(.)()@Y",
         {"replace the first letter with Y", "change the first letter to Y",
          "turn the first letter into Y", "set the first letter to Y"}},
        {"()(.)()$@Y",
         {"replace the last letter with Y", "change the last letter to Y",
          "turn the last letter into Y", "set the last letter to Y"}},
        {"^()()()@Y",
         {"add Y to the start of the word", "put Y at the front of the word",
          "attach Y to the start of the word", "stick Y at the front of the word"}},
        {"()()()$@Y",
         {"add Y to the end of the word", "put Y at the back of the word",
          "attach Y to the end of the word", "stick Y at the back of the word"}},
        {"^()(.)()@",
         {"delete the first letter", "remove the first letter", "erase the first letter",
          "drop the first letter"}},
        {"()(.)()$@",
         {"delete the last letter", "remove the last letter", "erase the last letter",
          "drop the last letter"}},
        {"()(X)()@YX",
         {"add Y before every X", "insert Y before each X", "place Y before every X",
          "write Y before each X"}},
        {"()(X)()@XY",
         {"add Y after every X", "insert Y after each X", "place Y after every X",
          "write Y after each X"}},
        {"()(X.)()@Y",
         {"replace X and the letter after it with Y", "substitute X and the next letter with Y",
          "swap X and the letter after it with Y", "rewrite X and the next letter with Y"}},
        {"()([aeiou])()@Y",
         {"replace all vowels with Y", "substitute every vowel with Y", "swap all vowels with Y",
          "rewrite every vowel with Y"}},
        {"()([^aeiou])()@Y",
         {"replace all consonants with Y", "substitute every consonant with Y",
          "swap all consonants with Y", "rewrite every consonant with Y"}},
        {"()([aeiou])()@",
         {"delete all vowels", "remove every vowel", "erase all vowels", "drop every vowel"}},
        {"()([^aeiou])()@",
         {"delete all consonants", "remove every consonant", "erase all consonants",
          "drop every consonant"}},
        {"^()(..)()@Y",
         {"replace the first two letters with Y", "change the first two letters to Y",
          "turn the first two letters into Y", "set the first two letters to Y"}},
        {"()(..)()$@Y",
         {"replace the last two letters with Y", "change the last two letters to Y",
          "turn the last two letters into Y", "set the last two letters to Y"}},
        {"^()(X)()@Y",
         {"replace a starting X with Y", "change a leading X to Y", "turn a starting X into Y",
          "set a leading X to Y"}},
        {"()(X)()$@Y",
         {"replace a final X with Y", "change a trailing X to Y", "turn a final X into Y",
          "set a trailing X to Y"}},
        {"(X)(.)()@Y",
         {"replace the letter after every X with Y", "change the letter after each X to Y",
          "turn the letter after every X into Y", "set the letter after each X to Y"}},
        {"()(.)(X)@Y",
         {"replace the letter before every X with Y", "change the letter before each X to Y",
          "turn the letter before every X into Y", "set the letter before each X to Y"}},
        {"()(.X)()@X",
         {"delete the letter before every X", "remove the letter before each X",
          "erase the letter before every X", "drop the letter before each X"}},
        {"()(X.)()@X",
         {"delete the letter after every X", "remove the letter after each X",
          "erase the letter after every X", "drop the letter after each X"}},
        {"^()([aeiou])()@Y",
         {"replace a starting vowel with Y", "change a leading vowel to Y",
          "turn a starting vowel into Y", "set a leading vowel to Y"}},
        {"^()([^aeiou])()@Y",
         {"replace a starting consonant with Y", "change a leading consonant to Y",
          "turn a starting consonant into Y", "set a leading consonant to Y"}},
        {"()([aeiou])()$@Y",
         {"replace a final vowel with Y", "change a trailing vowel to Y",
          "turn a final vowel into Y", "set a trailing vowel to Y"}},
        {"()([^aeiou])()$@Y",
         {"replace a final consonant with Y", "change a trailing consonant to Y",
          "turn a final consonant into Y", "set a trailing consonant to Y"}},
        {"()(X)()@YY",
         {"replace every X with double Y", "substitute each X with two Y",
          "swap every X with double Y", "rewrite each X with two Y"}},
        {"()(X)()@XX",
         {"double every X", "duplicate each X", "repeat every X", "twin each X"}},
        {"^()()()@YY",
         {"add double Y to the start of the word", "put two Y at the front of the word",
          "attach double Y to the start of the word", "stick two Y at the front of the word"}},
        {"()()()$@YY",
         {"add double Y to the end of the word", "put two Y at the back of the word",
          "attach double Y to the end of the word", "stick two Y at the back of the word"}},
        {"^()(.)()@YY",
         {"replace the first letter with double Y", "change the first letter to two Y",
          "turn the first letter into double Y", "set the first letter to two Y"}},
        {"()(.)()$@YY",
         {"replace the last letter with double Y", "change the last letter to two Y",
          "turn the last letter into double Y", "set the last letter to two Y"}},
        {"()()([aeiou])@Y",
         {"add Y before every vowel", "insert Y before each vowel", "place Y before every vowel",
          "write Y before each vowel"}},
        {"([aeiou])()()@Y",
         {"add Y after every vowel", "insert Y after each vowel", "place Y after every vowel",
          "write Y after each vowel"}},
    };
    return kinds;
}

inline int kind_count() { return static_cast<int>(kind_inventory().size()); }

inline bool kind_uses_x(int kind) {
    return std::string_view(kind_inventory()[kind].pattern).find('X') != std::string_view::npos;
}
inline bool kind_uses_y(int kind) {
    return std::string_view(kind_inventory()[kind].pattern).find('Y') != std::string_view::npos;
}

// Characters used to fill X/Y program slots. A deliberately small pool keeps
// character-pair coverage dense at desk scale.
inline std::string_view slot_pool() { return "acdeilnorstu"; }

inline std::string instantiate(std::string_view tmpl, char x, char y) {
    std::string out;
    for (char c : tmpl) {
        if (c == 'X') out += x;
        else if (c == 'Y') out += y;
        else out += c;
    }
    return out;
}

inline std::string render_program(int kind, char x, char y) {
    return instantiate(kind_inventory()[kind].pattern, x, y);
}

inline std::string render_phrase(int kind, int variant, char x, char y) {
    return instantiate(kind_inventory()[kind].phrasings[variant], x, y);
}

// ---------------------------------------------------------------------------
// Transformation hypotheses: the observable signature space the teacher's
// describer reasons in. apply_hypothesis is an independent string-operation
// implementation of each kind's behavior (never touches the regex machinery).

struct Hypothesis {
    int kind;
    char x = 0, y = 0;
};

inline std::string apply_hypothesis(const Hypothesis& h, std::string_view w) {
    const char x = h.x, y = h.y;
    std::string out;
    auto scan2 = [&](auto pred, auto emit) {
        // leftmost non-overlapping two-character rewrites
        std::size_t i = 0;
        while (i < w.size()) {
            if (i + 1 < w.size() && pred(w[i], w[i + 1])) {
                emit(w[i], w[i + 1]);
                i += 2;
            } else {
                out += w[i];
                ++i;
            }
        }
    };
    switch (h.kind) {
        case 0:  // replace all x with y
            for (char c : w) out += (c == x ? y : c);
            return out;
        case 1:  // delete all x
            for (char c : w)
                if (c != x) out += c;
            return out;
        case 2: return w.empty() ? std::string(w) : std::string(1, y) + std::string(w.substr(1));
        case 3: return w.empty() ? std::string(w)
                                 : std::string(w.substr(0, w.size() - 1)) + std::string(1, y);
        case 4: return std::string(1, y) + std::string(w);
        case 5: return std::string(w) + std::string(1, y);
        case 6: return w.empty() ? std::string(w) : std::string(w.substr(1));
        case 7: return w.empty() ? std::string(w) : std::string(w.substr(0, w.size() - 1));
        case 8:  // insert y before every x
            for (char c : w) {
                if (c == x) out += y;
                out += c;
            }
            return out;
        case 9:  // insert y after every x
            for (char c : w) {
                out += c;
                if (c == x) out += y;
            }
            return out;
        case 10:  // replace x and the next letter with y
            scan2([&](char a, char) { return a == x; }, [&](char, char) { out += y; });
            return out;
        case 11:
            for (char c : w) out += (is_vowel(c) ? y : c);
            return out;
        case 12:
            for (char c : w) out += (!is_vowel(c) ? y : c);
            return out;
        case 13:
            for (char c : w)
                if (!is_vowel(c)) out += c;
            return out;
        case 14:
            for (char c : w)
                if (is_vowel(c)) out += c;
            return out;
        case 15: return w.size() < 2 ? std::string(w)
                                     : std::string(1, y) + std::string(w.substr(2));
        case 16: return w.size() < 2 ? std::string(w)
                                     : std::string(w.substr(0, w.size() - 2)) + std::string(1, y);
        case 17:
            return (!w.empty() && w[0] == x) ? std::string(1, y) + std::string(w.substr(1))
                                             : std::string(w);
        case 18:
            return (!w.empty() && w.back() == x)
                       ? std::string(w.substr(0, w.size() - 1)) + std::string(1, y)
                       : std::string(w);
        case 19:  // letter after every x becomes y
            scan2([&](char a, char) { return a == x; },
                  [&](char a, char) { out += a; out += y; });
            return out;
        case 20:  // letter before every x becomes y
            scan2([&](char, char b) { return b == x; },
                  [&](char, char b) { out += y; out += b; });
            return out;
        case 21:  // delete the letter before every x
            scan2([&](char, char b) { return b == x; }, [&](char, char b) { out += b; });
            return out;
        case 22:  // delete the letter after every x
            scan2([&](char a, char) { return a == x; }, [&](char a, char) { out += a; });
            return out;
        case 23:
            return (!w.empty() && is_vowel(w[0])) ? std::string(1, y) + std::string(w.substr(1))
                                                  : std::string(w);
        case 24:
            return (!w.empty() && !is_vowel(w[0])) ? std::string(1, y) + std::string(w.substr(1))
                                                   : std::string(w);
        case 25:
            return (!w.empty() && is_vowel(w.back()))
                       ? std::string(w.substr(0, w.size() - 1)) + std::string(1, y)
                       : std::string(w);
        case 26:
            return (!w.empty() && !is_vowel(w.back()))
                       ? std::string(w.substr(0, w.size() - 1)) + std::string(1, y)
                       : std::string(w);
        case 27:
            for (char c : w) {
                if (c == x) { out += y; out += y; }
                else out += c;
            }
            return out;
        case 28:
            for (char c : w) {
                out += c;
                if (c == x) out += c;
            }
            return out;
        case 29: return std::string(2, y) + std::string(w);
        case 30: return std::string(w) + std::string(2, y);
        case 31: return w.empty() ? std::string(w) : std::string(2, y) + std::string(w.substr(1));
        case 32: return w.empty() ? std::string(w)
                                  : std::string(w.substr(0, w.size() - 1)) + std::string(2, y);
        case 33:  // insert y before every vowel
            for (char c : w) {
                if (is_vowel(c)) out += y;
                out += c;
            }
            return out;
        case 34:  // insert y after every vowel
            for (char c : w) {
                out += c;
                if (is_vowel(c)) out += y;
            }
            return out;
        default: return std::string(w);
    }
}

// All hypothesis instances whose behavior matches every observed pair and
// actually fires on at least one of them. The describing teacher is trained
// on pairs where something changed, so a rule that is vacuous on every
// observed word is not a description it can produce.
inline std::vector<Hypothesis> consistent_hypotheses(
    std::span<const std::pair<std::string, std::string>> pairs) {
    std::vector<Hypothesis> result;
    const auto pool = slot_pool();
    auto check = [&](const Hypothesis& h) {
        bool fired = false;
        for (const auto& [win, wout] : pairs) {
            const std::string got = apply_hypothesis(h, win);
            if (got != wout) return false;
            fired |= (got != win);
        }
        if (!fired) return false;
        result.push_back(h);
        return true;
    };
    for (int kind = 0; kind < kind_count(); ++kind) {
        const bool ux = kind_uses_x(kind), uy = kind_uses_y(kind);
        if (ux && uy) {
            for (char x : pool)
                for (char y : pool)
                    if (x != y) check({kind, x, y});
        } else if (ux) {
            for (char x : pool) check({kind, x, 0});
        } else if (uy) {
            for (char y : pool) check({kind, 0, y});
        } else {
            check({kind, 0, 0});
        }
    }
    return result;
}

// ---------------------------------------------------------------------------

inline const std::vector<std::string>& dictionary() {
    static const std::vector<std::string> words{
        "embolden", "attendant", "stuccoing", "disclaims", "inculpating", "flanneling", "dhoti",
        "reappearances", "bigots", "now", "cow", "planet", "garden", "stable", "corner",
        "mention", "listen", "social", "notice", "animal", "carton", "stance", "linear", "monitor",
        "custard", "lantern", "crystal", "servant", "distance", "calendar", "radiant",
        "console", "astound", "central", "soldier", "natural", "seldom", "consult", "translate",
        "interval", "resonant", "solution", "constant", "integral", "relation", "national",
        "rational", "personal", "terminal", "granite", "sandal", "carnival", "electron",
        "colander", "tolerant", "dominant", "resident", "insolent", "adamant", "ornament",
        "testament", "sentinel", "continent", "listener", "salamander", "escalator", "generator",
        "moderator", "navigator", "spectator", "educator", "elevator", "indicator", "crocodile",
        "dandelion", "accordion", "direction", "selection", "reduction", "traction", "creation",
        "notation", "rotation", "station", "algorithm", "untangle", "rectangle", "triangle",
        "calculate", "regulate", "simulate", "insulate", "populate", "circulate", "granular",
        "cellular", "singular", "tubular", "regular", "secular", "consular", "particular",
        "molecular", "spectacular", "candle", "handle", "needle", "noodle", "saddle", "riddle",
        "cradle", "ladle", "idle", "bundle", "candor", "vendor", "tender", "slender", "cylinder",
        "thunder", "plunder", "wonder", "render", "gender", "lantana", "cantata", "sonata",
        "errand", "strand", "island", "inland", "upland", "garland", "starland", "analog",
        "catalog", "dialog", "unicorn", "acorn", "adorn", "inform", "reform", "conform",
        "perform", "platform", "transform", "uniform", "consider", "outsider", "insider",
        "recorder", "disorder", "reorder", "boulder", "shoulder", "smolder", "folder", "molder",
        "builder", "wilder", "colder", "older", "bolder", "solder", "launder", "rounder",
        "sounder", "founder", "pounder", "grounded", "astounded", "surrounded", "confounded",
        "redounded", "resounded", "unbounded", "radical", "critical", "identical", "nautical",
        "optical", "tropical", "topical", "typical", "logical", "magical", "musical", "clinical",
        "cynical", "technical", "ethical", "vertical", "cortical", "article", "particle",
        "tentacle", "obstacle", "miracle", "oracle", "spectacle", "receptacle", "barnacle",
        "canticle", "cubicle", "icicle", "vehicle", "chronicle", "monocle", "uncle", "circle",
    };
    return words;
}

inline const std::string kRegexChars = "abcdefghijklmnopqrstuvwxyz()[]^$.@";

struct CorpusItem {
    int id = 0;
    Split split = Split::Sim;
    int kind = 0;
    char x = 0, y = 0;
    std::string program;              // surface text
    std::vector<ActionId> program_tokens;
    std::string w_inp, w_out;
    std::vector<Description> requests;
};

struct WordModConfig {
    int horizon = 40;           // H
    int sim_items = 600;
    int val_items = 60;
    int test_items = 60;
    int pool_size = 120;        // unlabeled explorer programs
    // marginal mismatch knobs: the pool covers only a subset of kinds and
    // slot characters, mirroring partial coverage of the execution space
    int pool_kind_stride = 1;   // >1 excludes kinds with index % stride == stride-1
    int pool_char_count = 10;   // first k of slot_pool()
    std::uint64_t seed = 7;
};

class WordModEnv : public Environment {
public:
    explicit WordModEnv(WordModConfig cfg) : cfg_(cfg) {
        build_action_space();
        build_vocab();
        generate_corpus();
        build_pool();
    }

    // ---- EnvView ----
    int horizon() const override { return cfg_.horizon; }
    int num_actions() const override { return static_cast<int>(kRegexChars.size()) + 1; }
    ActionId stop_action() const override { return static_cast<int>(kRegexChars.size()); }

    void valid_actions(StateId /*s*/, std::vector<ActionId>& out) const override {
        out.resize(num_actions());
        for (int a = 0; a < num_actions(); ++a) out[a] = a;
    }

    StateId apply_action(StateId s, ActionId a) const override {
        if (a < 0 || a >= num_actions()) throw ProtocolViolation("invalid regex token", s, a);
        if (a == stop_action()) return s;
        return intern_child(s, a);
    }

    void state_atoms(StateId s, std::vector<AtomId>& out) const override {
        const NodeRec& n = nodes_[s];
        out.push_back(atom_last_ + static_cast<AtomId>(n.last_token + 1));
        out.push_back(atom_phase_ + static_cast<AtomId>(n.phase));
        out.push_back(atom_depth_ + static_cast<AtomId>(std::min<int>(n.depth, 63)));
    }

    void action_atoms(StateId /*s*/, ActionId a, std::vector<AtomId>& out) const override {
        out.push_back(atom_act_ + static_cast<AtomId>(a));
        const bool letter = a < 26;
        out.push_back(a == stop_action() ? atom_cls_ + 2 : (letter ? atom_cls_ : atom_cls_ + 1));
    }

    // ---- Environment ----
    const Vocab& vocab() const override { return vocab_; }

    Task sample_task(Split split, Rng& rng) const override {
        const auto& idx = split_index(split);
        const CorpusItem& item = items_[idx[rng.below(idx.size())]];
        return make_task(item, rng.below(item.requests.size()));
    }

    std::span<const Task> eval_tasks(Split split) const override {
        return split == Split::Val ? std::span<const Task>(val_tasks_)
                                   : std::span<const Task>(test_tasks_);
    }

    double evaluation_return(const Task& task, const Execution& e) const override {
        return reward_binary(task, e);
    }

    double reward_binary(const Task& task, const Execution& e) const override {
        const CorpusItem& item = items_[task.goal_id];
        return output_word(e, item.w_inp) == item.w_out ? 1.0 : 0.0;
    }

    double reward_continuous(const Task& task, const Execution& e) const override {
        const CorpusItem& item = items_[task.goal_id];
        if (item.w_out.empty()) throw std::runtime_error("empty target word");
        const int ed = levenshtein(output_word(e, item.w_inp), item.w_out);
        return (static_cast<double>(item.w_out.size()) - ed) /
               static_cast<double>(item.w_out.size());
    }

    // Positional token labels from the hidden ground-truth program.
    ActionId oracle_action(const Task& task, StateId s) const override {
        const CorpusItem& item = items_[task.goal_id];
        const int depth = nodes_[s].depth;
        if (depth < static_cast<int>(item.program_tokens.size()))
            return item.program_tokens[depth];
        return stop_action();
    }

    // ---- word-modification specifics ----
    const std::vector<CorpusItem>& items() const { return items_; }
    const std::vector<int>& split_index(Split split) const {
        switch (split) {
            case Split::Sim: return sim_idx_;
            case Split::Val: return val_idx_;
            default: return test_idx_;
        }
    }

    StateId root_state(const std::string& word) const {
        auto it = word_index_.find(word);
        const int wi = it == word_index_.end() ? intern_word(word) : it->second;
        return word_roots_[wi];
    }

    const std::string& state_word(StateId s) const { return words_[nodes_[s].word_idx]; }

    // Token sequence along the prefix chain of a state.
    std::vector<ActionId> prefix_tokens(StateId s) const {
        std::vector<ActionId> toks;
        for (StateId cur = s; nodes_[cur].parent >= 0; cur = nodes_[cur].parent)
            toks.push_back(nodes_[cur].last_token);
        std::reverse(toks.begin(), toks.end());
        return toks;
    }

    std::vector<ActionId> tokens_of(const Execution& e) const {
        std::vector<ActionId> toks;
        for (const Step& st : e.steps)
            if (st.action != stop_action()) toks.push_back(st.action);
        return toks;
    }

    std::string tokens_to_text(std::span<const ActionId> toks) const {
        std::string text;
        for (ActionId a : toks) text += kRegexChars[a];
        return text;
    }

    std::vector<ActionId> text_to_tokens(std::string_view text) const {
        std::vector<ActionId> toks;
        for (char c : text) {
            const std::size_t p = kRegexChars.find(c);
            if (p == std::string::npos) throw std::invalid_argument("bad regex character");
            toks.push_back(static_cast<ActionId>(p));
        }
        return toks;
    }

    // Output of the execution's program on a word; malformed programs leave
    // the word unchanged (the episode simply fails).
    std::string output_word(const Execution& e, const std::string& word) const {
        return apply_program_text(tokens_to_text(tokens_of(e)), word);
    }

    static std::string apply_program_text(const std::string& text, const std::string& word) {
        try {
            return regex::compile_apply(text, word);
        } catch (const regex::ParseError&) {
            return word;
        }
    }

    Execution execution_from_tokens(StateId start, std::span<const ActionId> toks) const {
        Execution e;
        StateId s = start;
        for (ActionId a : toks) {
            e.steps.push_back({s, a});
            s = apply_action(s, a);
            if (static_cast<int>(e.steps.size()) >= cfg_.horizon) return e;
        }
        e.steps.push_back({s, stop_action()});
        return e;
    }

    Task make_task(const CorpusItem& item, std::size_t request_idx) const {
        return Task{root_state(item.w_inp), item.requests[request_idx], item.id};
    }

    const std::vector<std::string>& pool_programs() const { return pool_; }
    const std::vector<std::vector<ActionId>>& pool_tokens() const { return pool_tokens_; }
    const WordModConfig& config() const { return cfg_; }

    // JSON-lines corpus dump: {id, split, requests[], execution[], goal}.
    std::string corpus_jsonl() const {
        std::string out;
        for (const auto& item : items_) {
            json rec{{"id", item.id},
                     {"split", split_name(item.split)},
                     {"requests", json::array()},
                     {"execution", json::array()},
                     {"goal", {{"program", item.program}, {"w_inp", item.w_inp},
                               {"w_out", item.w_out}}}};
            for (const auto& r : item.requests) rec["requests"].push_back(vocab_.render(r));
            for (ActionId a : item.program_tokens)
                rec["execution"].push_back(std::string(1, kRegexChars[a]));
            out += rec.dump();
            out += '\n';
        }
        return out;
    }

private:
    struct NodeRec {
        StateId parent = -1;
        ActionId last_token = -1;  // -1 at roots
        std::int16_t depth = 0;
        std::int8_t phase = 0;     // 0 pre, 1..6 group progress, 7 post-pattern, 8 replacement
        int word_idx = 0;
    };

    void build_action_space() {
        atom_last_ = 0;                                            // + (token+1): [0, 36]
        atom_phase_ = atom_last_ + num_actions() + 1;              // + phase: 9 values
        atom_depth_ = atom_phase_ + 16;                            // + min(depth, 63)
        atom_act_ = atom_depth_ + 72;
        atom_cls_ = atom_act_ + num_actions() + 1;
    }

    int intern_word(const std::string& w) const {
        words_.push_back(w);
        const int wi = static_cast<int>(words_.size()) - 1;
        word_index_.emplace(w, wi);
        NodeRec root;
        root.word_idx = wi;
        nodes_.push_back(root);
        word_roots_.push_back(static_cast<StateId>(nodes_.size()) - 1);
        return wi;
    }

    StateId intern_child(StateId parent, ActionId tok) const {
        const std::uint64_t key = (static_cast<std::uint64_t>(parent) << 8) |
                                  static_cast<std::uint64_t>(tok);
        auto it = children_.find(key);
        if (it != children_.end()) return it->second;
        NodeRec n;
        n.parent = parent;
        n.last_token = tok;
        n.depth = nodes_[parent].depth + 1;
        n.word_idx = nodes_[parent].word_idx;
        n.phase = next_phase(nodes_[parent].phase, tok);
        nodes_.push_back(n);
        const StateId id = static_cast<StateId>(nodes_.size()) - 1;
        children_.emplace(key, id);
        return id;
    }

    std::int8_t next_phase(std::int8_t phase, ActionId tok) const {
        const char c = kRegexChars[tok];
        if (phase == 8) return 8;
        if (c == '@') return 8;
        if (phase >= 7) return 7;
        if (c == '(') {
            if (phase == 0) return 1;
            if (phase == 2) return 3;
            if (phase == 4) return 5;
            return 7;
        }
        if (c == ')') {
            if (phase == 1) return 2;
            if (phase == 3) return 4;
            if (phase == 5) return 6;
            return 7;
        }
        if (phase == 6) return 7;
        return phase;
    }

    // Freeze the request vocabulary: every phrasing word plus all letters.
    void build_vocab() {
        for (const auto& kind : kind_inventory())
            for (const char* phrase : kind.phrasings) {
                std::string text;
                for (const char* p = phrase; *p; ++p)
                    if (*p != 'X' && *p != 'Y') text += *p;
                vocab_.tokenize(text);
            }
        for (char c = 'a'; c <= 'z'; ++c) vocab_.intern(std::string(1, c));
    }

    void generate_corpus() {
        Rng rng(cfg_.seed);
        Rng pick = rng.stream("corpus");
        const auto pool = slot_pool();
        int id = 0;
        auto gen_split = [&](Split split, int count) {
            for (int i = 0; i < count; ++i) {
                for (int attempt = 0;; ++attempt) {
                    if (attempt > 10000) throw std::runtime_error("corpus generation stuck");
                    CorpusItem item;
                    item.kind = static_cast<int>(pick.below(kind_count()));
                    item.x = pool[pick.below(pool.size())];
                    do {
                        item.y = pool[pick.below(pool.size())];
                    } while (item.y == item.x);
                    if (!kind_uses_x(item.kind)) item.x = 0;
                    if (!kind_uses_y(item.kind)) item.y = 0;
                    const auto& dict = dictionary();
                    item.w_inp = dict[pick.below(dict.size())];
                    item.program = render_program(item.kind, item.x, item.y);
                    item.w_out = apply_program_text(item.program, item.w_inp);
                    if (item.w_out == item.w_inp || item.w_out.empty() ||
                        item.w_out.size() > 18)
                        continue;
                    item.id = id;
                    item.split = split;
                    item.program_tokens = text_to_tokens(item.program);
                    // sim items carry both sim phrasings; val/test one held-out phrasing
                    if (split == Split::Sim) {
                        for (int variant : {0, 1})
                            item.requests.push_back(vocab_.tokenize(
                                render_phrase(item.kind, variant, item.x, item.y)));
                    } else {
                        const int variant = split == Split::Val ? 2 : 3;
                        item.requests.push_back(
                            vocab_.tokenize(render_phrase(item.kind, variant, item.x, item.y)));
                    }
                    items_.push_back(std::move(item));
                    ++id;
                    break;
                }
            }
        };
        gen_split(Split::Sim, cfg_.sim_items);
        gen_split(Split::Val, cfg_.val_items);
        gen_split(Split::Test, cfg_.test_items);
        for (const auto& item : items_) {
            switch (item.split) {
                case Split::Sim: sim_idx_.push_back(item.id); break;
                case Split::Val: val_idx_.push_back(item.id); break;
                case Split::Test: test_idx_.push_back(item.id); break;
            }
        }
        for (int i : val_idx_)
            for (std::size_t r = 0; r < items_[i].requests.size(); ++r)
                val_tasks_.push_back(make_task(items_[i], r));
        for (int i : test_idx_)
            for (std::size_t r = 0; r < items_[i].requests.size(); ++r)
                test_tasks_.push_back(make_task(items_[i], r));
    }

    void build_pool() {
        Rng rng(cfg_.seed);
        Rng pick = rng.stream("pool");
        const auto pool_chars = slot_pool().substr(0, cfg_.pool_char_count);
        std::vector<std::string> test_programs;
        for (int i : test_idx_) test_programs.push_back(items_[i].program);
        std::sort(test_programs.begin(), test_programs.end());
        int guard = 0;
        while (static_cast<int>(pool_.size()) < cfg_.pool_size) {
            if (++guard > 100000) throw std::runtime_error("pool generation stuck");
            int kind = static_cast<int>(pick.below(kind_count()));
            if (cfg_.pool_kind_stride > 1 &&
                kind % cfg_.pool_kind_stride == cfg_.pool_kind_stride - 1)
                continue;
            char x = pool_chars[pick.below(pool_chars.size())];
            char y;
            do {
                y = pool_chars[pick.below(pool_chars.size())];
            } while (y == x);
            if (!kind_uses_x(kind)) x = 0;
            if (!kind_uses_y(kind)) y = 0;
            std::string prog = render_program(kind, x, y);
            if (std::binary_search(test_programs.begin(), test_programs.end(), prog)) continue;
            if (std::find(pool_.begin(), pool_.end(), prog) != pool_.end()) continue;
            pool_.push_back(prog);
            pool_tokens_.push_back(text_to_tokens(prog));
        }
    }

    WordModConfig cfg_;
    Vocab vocab_;  // request-language vocabulary (mutable via tokenize at build)
    std::vector<CorpusItem> items_;
    std::vector<int> sim_idx_, val_idx_, test_idx_;
    std::vector<Task> val_tasks_, test_tasks_;
    std::vector<std::string> pool_;
    std::vector<std::vector<ActionId>> pool_tokens_;

    AtomId atom_last_ = 0, atom_phase_ = 0, atom_depth_ = 0, atom_act_ = 0, atom_cls_ = 0;

    mutable std::vector<NodeRec> nodes_;
    mutable std::vector<std::string> words_;
    mutable std::unordered_map<std::string, int> word_index_;
    mutable std::vector<StateId> word_roots_;
    mutable std::unordered_map<std::uint64_t, StateId> children_;
};

// Uniform draw from the unlabeled-program pool, materialized as an execution
// from the episode's start state.
class PoolExplorer : public adel::ExecutionSampler {
public:
    explicit PoolExplorer(const WordModEnv* env) : env_(env) {}

    Execution sample(const EnvView& /*env*/, StateId start, Rng& rng) const override {
        const auto& tokens = env_->pool_tokens();
        return env_->execution_from_tokens(start, tokens[rng.below(tokens.size())]);
    }

private:
    const WordModEnv* env_;
};

// ---------------------------------------------------------------------------
// The spec-level word state machine: (current word, emitted prefix), where
// compile fires only on stop or at the length limit.

struct WordState {
    std::string word;
    std::vector<ActionId> emitted;
};

inline WordState word_state_step(const WordModEnv& env, const WordState& s, ActionId a) {
    WordState next = s;
    next.emitted.push_back(a);
    const bool stopping =
        a == env.stop_action() || static_cast<int>(next.emitted.size()) >= env.horizon();
    if (stopping) {
        std::vector<ActionId> toks = next.emitted;
        if (!toks.empty() && toks.back() == env.stop_action()) toks.pop_back();
        next.word = WordModEnv::apply_program_text(env.tokens_to_text(toks), s.word);
    }
    return next;
}

}  // namespace iliad::wordmod
