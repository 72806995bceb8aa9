#pragma once

// Simulated describing teachers. Both environments share the same response
// rule: if the agent's execution is near optimal for the episode's task,
// answer with one of the task's own requests; otherwise generate candidate
// descriptions from a count-based describer, keep the ones the teacher's own
// execution policy can reproduce (pragmatic inference), and answer uniformly
// from that set plus the empty description.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "iliad/graph.hpp"
#include "iliad/loglinear.hpp"
#include "iliad/nav.hpp"
#include "iliad/protocol.hpp"
#include "iliad/rng.hpp"
#include "iliad/wordmod.hpp"

namespace iliad::teach {

// Smoothed count table over (frame key, template id) with a global back-off
// row for frames never seen in training. Greedy output is the argmax
// template (ties to the lowest id); sampling follows the normalized smoothed
// counts.
class CountDescriber {
public:
    explicit CountDescriber(int n_templates = 0, double alpha = 1.0)
        : n_templates_(n_templates), alpha_(alpha), global_(n_templates, 0.0) {}

    int n_templates() const { return n_templates_; }

    void observe(const std::string& frame_key, int template_id) {
        auto [it, inserted] = counts_.try_emplace(frame_key, n_templates_, 0.0);
        it->second[template_id] += 1.0;
        global_[template_id] += 1.0;
    }

    bool has_frame(const std::string& frame_key) const { return counts_.count(frame_key) > 0; }

    // Smoothed weights over applicable templates; unseen frames back off to
    // the global template distribution.
    std::vector<double> weights(const std::string& frame_key,
                                const std::vector<bool>& applicable) const {
        const auto it = counts_.find(frame_key);
        const std::vector<double>& row = it == counts_.end() ? global_ : it->second;
        std::vector<double> w(n_templates_, 0.0);
        for (int t = 0; t < n_templates_; ++t)
            if (applicable[t]) w[t] = row[t] + alpha_;
        return w;
    }

    int greedy(const std::string& frame_key, const std::vector<bool>& applicable) const {
        const auto w = weights(frame_key, applicable);
        int best = -1;
        for (int t = 0; t < n_templates_; ++t)
            if (w[t] > 0.0 && (best < 0 || w[t] > w[best])) best = t;
        return best;
    }

    int sample(const std::string& frame_key, const std::vector<bool>& applicable, Rng& rng) const {
        return rng.categorical(weights(frame_key, applicable));
    }

    json to_json() const {
        json frames = json::object();
        for (const auto& [k, row] : counts_) frames[k] = row;
        return json{{"n_templates", n_templates_}, {"alpha", alpha_},
                    {"global", global_}, {"frames", frames}};
    }

private:
    int n_templates_;
    double alpha_;
    std::vector<double> global_;
    std::unordered_map<std::string, std::vector<double>> counts_;
};

// Pragmatic filter over candidate descriptions: keep candidates whose
// simulated execution scores at least tau against the agent's execution.
// The simulation is supplied by the caller (the teacher's own policy).
inline std::vector<Description> pragmatic_set(
    std::span<const Description> candidates,
    const std::function<double(const Description&)>& simulated_perf, double tau) {
    std::vector<Description> kept;
    for (const auto& d : candidates)
        if (simulated_perf(d) >= tau) kept.push_back(d);
    return kept;
}

// The uniform draw over D_prag plus the empty description.
inline Description respond_from_pragmatic(const std::vector<Description>& prag, Rng& rng) {
    const std::size_t pick = rng.below(prag.size() + 1);
    if (pick < prag.size()) return prag[pick];
    return Description{};
}

inline void dedup_descriptions(std::vector<Description>& ds) {
    std::sort(ds.begin(), ds.end(), [](const Description& a, const Description& b) {
        return a.tokens < b.tokens;
    });
    ds.erase(std::unique(ds.begin(), ds.end()), ds.end());
}

// ---------------------------------------------------------------------------
// Navigation teacher.

struct NavTeacherConfig {
    double tau = 0.5;          // SDTW threshold
    int k_samples = 5;         // candidate samples beyond greedy
    int pi_t_passes = 8;
    double pi_t_step = 0.1;
    std::uint32_t feature_dim = 1u << 19;
};

class NavTeacher : public Teacher {
public:
    static NavTeacher train(const nav::NavEnv& env, NavTeacherConfig cfg, Rng rng) {
        NavTeacher t(env, cfg);
        const auto& templates = nav::template_inventory();
        t.describer_ = CountDescriber(static_cast<int>(templates.size()));
        t.sim_mask_.assign(templates.size(), false);
        for (const auto& tmpl : templates)
            if (tmpl.split == Split::Sim) t.sim_mask_[tmpl.id] = true;

        // count model over (frame of the ground-truth path, request template)
        const auto& sim = env.split_index(Split::Sim);
        for (int i : sim) {
            const auto& item = env.items()[i];
            const std::string key = env.frame_of(item.path).key();
            for (int tid : item.template_ids) t.describer_.observe(key, tid);
        }

        // teacher's own execution policy, MLE on the simulation pairs only
        Rng order_rng = rng.stream("pi-t-order");
        std::vector<int> order(sim.begin(), sim.end());
        for (int pass = 0; pass < cfg.pi_t_passes; ++pass) {
            for (int k = static_cast<int>(order.size()) - 1; k > 0; --k)
                std::swap(order[k], order[order_rng.below(k + 1)]);
            for (int i : order) {
                const auto& item = env.items()[i];
                const Execution e = env.execution_from_path(item.path);
                for (const auto& request : item.requests)
                    for (const Step& st : e.steps)
                        t.pi_t_.mle_step(env, st.state, request, st.action, cfg.pi_t_step);
            }
        }
        return t;
    }

    Description describe(const Task& task, const Execution& execution, Rng& rng) const override {
        const auto& item = env_->items()[task.goal_id];
        const auto path = env_->path_of(execution);
        const int radius = env_->config().radius;
        const double perf = nav::sdtw(env_->graph(), path, item.path, radius);
        if (perf >= cfg_.tau)  // near optimal: hand out one of the task's own requests
            return item.requests[rng.below(item.requests.size())];

        const nav::NavFrame frame = env_->frame_of(path);
        std::vector<bool> applicable = sim_mask_;
        if (frame.mids.empty())
            for (const auto& tmpl : nav::template_inventory())
                if (tmpl.needs_mid) applicable[tmpl.id] = false;

        const std::string key = frame.key();
        std::vector<Description> candidates;
        candidates.push_back(env_->render_template(describer_.greedy(key, applicable), frame));
        for (int k = 0; k < cfg_.k_samples; ++k)
            candidates.push_back(
                env_->render_template(describer_.sample(key, applicable, rng), frame));
        dedup_descriptions(candidates);

        auto prag = pragmatic_set(
            candidates,
            [&](const Description& d) {
                Rng dummy(0);
                const Execution sim = rollout_policy(*env_, pi_t_, execution.steps.front().state,
                                                     d, dummy, /*greedy=*/true);
                return nav::sdtw(env_->graph(), env_->path_of(sim), path, radius);
            },
            cfg_.tau);
        return respond_from_pragmatic(prag, rng);
    }

    const CountDescriber& describer() const { return describer_; }
    const LogLinearPolicy& execution_policy() const { return pi_t_; }

private:
    NavTeacher(const nav::NavEnv& env, NavTeacherConfig cfg)
        : env_(&env), cfg_(cfg), describer_(0), pi_t_(cfg.feature_dim) {}

    const nav::NavEnv* env_;
    NavTeacherConfig cfg_;
    CountDescriber describer_;
    LogLinearPolicy pi_t_;
    std::vector<bool> sim_mask_;
};

// ---------------------------------------------------------------------------
// Word-modification teacher.

// Teacher-internal emission world for the word task: the teacher's execution
// policy writes output words directly through edit operations over the input
// word. Actions: substitute-with-c (emit c, advance), insert-c (emit c,
// stay), copy (emit the cursor character, advance), delete (advance), stop.
// The cursor is part of the state, so per-position decisions stay crisp for
// every transformation family. Training scripts come from a canonical
// minimal edit alignment of (input, output) pairs alone.
class WordEmissionEnv : public EnvView {
public:
    static constexpr ActionId kCopy = 52, kDelete = 53, kStop = 54;
    static ActionId substitute_action(char c) { return c - 'a'; }
    static ActionId insert_action(char c) { return 26 + (c - 'a'); }

    int horizon() const override { return 40; }
    int num_actions() const override { return 55; }
    ActionId stop_action() const override { return kStop; }

    void valid_actions(StateId /*s*/, std::vector<ActionId>& out) const override {
        out.resize(55);
        for (int a = 0; a < 55; ++a) out[a] = a;
    }

    StateId apply_action(StateId s, ActionId a) const override {
        if (a < 0 || a >= 55) throw ProtocolViolation("invalid emission action", s, a);
        if (a == kStop) return s;
        const NodeRec& n = nodes_[s];
        const std::string& w = words_[n.word_idx];
        const bool at_end = n.cursor >= static_cast<int>(w.size());
        const bool advances = a == kCopy || a == kDelete || a < 26;
        const int cursor = (advances && !at_end) ? n.cursor + 1 : n.cursor;
        return intern(n.word_idx, cursor, act_kind(a));
    }

    void state_atoms(StateId s, std::vector<AtomId>& out) const override {
        const NodeRec& n = nodes_[s];
        const std::string& w = words_[n.word_idx];
        const bool at_end = n.cursor >= static_cast<int>(w.size());
        const char cur = at_end ? 0 : w[n.cursor];
        const char prev_in = n.cursor > 0 ? w[n.cursor - 1] : 0;
        out.push_back(100u + static_cast<AtomId>(cur));                     // cursor character
        out.push_back(200u + (at_end ? 2u : (is_vowel_char(cur) ? 1u : 0u)));  // class
        out.push_back(300u + static_cast<AtomId>(prev_in));                 // char before cursor
        out.push_back(400u + static_cast<AtomId>(std::min<int>(n.cursor, 15)));
        out.push_back(500u + static_cast<AtomId>(
                          std::min<int>(static_cast<int>(w.size()) - n.cursor, 15)));
        out.push_back(600u + static_cast<AtomId>(n.last_kind));            // last op kind
    }

    void action_atoms(StateId /*s*/, ActionId a, std::vector<AtomId>& out) const override {
        out.push_back(700u + static_cast<AtomId>(a));
        out.push_back(800u + static_cast<AtomId>(act_kind(a)));
    }

    StateId root(const std::string& word) const {
        auto it = word_index_.find(word);
        const int wi = it != word_index_.end() ? it->second : intern_word(word);
        return intern(wi, 0, 0);
    }

    const std::string& word_of(StateId s) const { return words_[nodes_[s].word_idx]; }
    int cursor_of(StateId s) const { return nodes_[s].cursor; }

    // Output word produced by an action sequence on the given input word.
    std::string apply_ops(const std::string& word, std::span<const ActionId> ops) const {
        std::string out;
        int cursor = 0;
        const int len = static_cast<int>(word.size());
        for (ActionId a : ops) {
            if (a == kStop) break;
            if (a < 26) {  // substitute
                out += static_cast<char>('a' + a);
                if (cursor < len) ++cursor;
            } else if (a < 52) {  // insert
                out += static_cast<char>('a' + (a - 26));
            } else if (a == kCopy) {
                if (cursor < len) out += word[cursor];
                if (cursor < len) ++cursor;
            } else if (a == kDelete) {
                if (cursor < len) ++cursor;
            }
        }
        return out;
    }

    // Canonical minimal edit script: copy preferred over substitute over
    // delete over insert at equal cost, scanning left to right.
    static std::vector<ActionId> edit_script(const std::string& win, const std::string& wout) {
        const int n = static_cast<int>(win.size()), m = static_cast<int>(wout.size());
        std::vector<int> dp((n + 1) * (m + 1), 0);
        auto at = [&](int i, int j) -> int& { return dp[i * (m + 1) + j]; };
        for (int i = n; i >= 0; --i)
            for (int j = m; j >= 0; --j) {
                if (i == n && j == m) continue;
                int best = 1 << 20;
                if (i < n && j < m) best = std::min(best, at(i + 1, j + 1) + (win[i] == wout[j] ? 0 : 1));
                if (i < n) best = std::min(best, at(i + 1, j) + 1);
                if (j < m) best = std::min(best, at(i, j + 1) + 1);
                at(i, j) = best;
            }
        std::vector<ActionId> ops;
        int i = 0, j = 0;
        while (i < n || j < m) {
            if (i < n && j < m && win[i] == wout[j] && at(i, j) == at(i + 1, j + 1)) {
                ops.push_back(kCopy);
                ++i; ++j;
            } else if (i < n && j < m && at(i, j) == at(i + 1, j + 1) + 1) {
                ops.push_back(substitute_action(wout[j]));
                ++i; ++j;
            } else if (i < n && at(i, j) == at(i + 1, j) + 1) {
                ops.push_back(kDelete);
                ++i;
            } else {
                ops.push_back(insert_action(wout[j]));
                ++j;
            }
        }
        ops.push_back(kStop);
        return ops;
    }

private:
    struct NodeRec {
        int word_idx = 0;
        std::int16_t cursor = 0;
        std::int8_t last_kind = 0;  // 0 BOS, 1 sub, 2 ins, 3 copy, 4 del
    };

    static bool is_vowel_char(char c) {
        return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
    }

    static std::int8_t act_kind(ActionId a) {
        if (a < 26) return 1;
        if (a < 52) return 2;
        if (a == kCopy) return 3;
        if (a == kDelete) return 4;
        return 0;
    }

    int intern_word(const std::string& word) const {
        words_.push_back(word);
        word_index_.emplace(word, static_cast<int>(words_.size()) - 1);
        return static_cast<int>(words_.size()) - 1;
    }

    StateId intern(int word_idx, int cursor, std::int8_t last_kind) const {
        const std::uint64_t key = (static_cast<std::uint64_t>(word_idx) << 24) |
                                  (static_cast<std::uint64_t>(cursor) << 8) |
                                  static_cast<std::uint64_t>(last_kind);
        auto it = states_.find(key);
        if (it != states_.end()) return it->second;
        nodes_.push_back({word_idx, static_cast<std::int16_t>(cursor), last_kind});
        const StateId id = static_cast<StateId>(nodes_.size()) - 1;
        states_.emplace(key, id);
        return id;
    }

    mutable std::vector<NodeRec> nodes_;
    mutable std::vector<std::string> words_;
    mutable std::unordered_map<std::string, int> word_index_;
    mutable std::unordered_map<std::uint64_t, StateId> states_;
};

struct RegexTeacherConfig {
    int j_words = 5;       // J
    int k_samples = 10;
    int pi_t_passes = 14;
    double pi_t_step = 0.1;
    std::uint32_t feature_dim = 1u << 19;

    double tau() const { return static_cast<double>(j_words); }
};

class RegexTeacher : public Teacher {
public:
    static RegexTeacher train(const wordmod::WordModEnv& env, RegexTeacherConfig cfg, Rng rng) {
        RegexTeacher t(env, cfg);
        // describer over (transformation kind, sim phrasing) counts; the
        // describer never sees a program, only word pairs
        const auto& sim = env.split_index(Split::Sim);
        for (int i : sim) {
            const auto& item = env.items()[i];
            const std::pair<std::string, std::string> pair{item.w_inp, item.w_out};
            const auto hyps = wordmod::consistent_hypotheses({&pair, 1});
            for (const auto& h : hyps)
                for (int variant : {0, 1})
                    t.describer_.observe(frame_key(h.kind), template_id(h.kind, variant));
        }

        // pi_T: edit-operation emission policy fit to the canonical edit
        // scripts of the (request, input, output) pairs; no program data
        Rng order_rng = rng.stream("pi-t-order");
        std::vector<int> order(sim.begin(), sim.end());
        for (int pass = 0; pass < cfg.pi_t_passes; ++pass) {
            for (int k = static_cast<int>(order.size()) - 1; k > 0; --k)
                std::swap(order[k], order[order_rng.below(k + 1)]);
            for (int i : order) {
                const auto& item = env.items()[i];
                const auto script = WordEmissionEnv::edit_script(item.w_inp, item.w_out);
                for (const auto& request : item.requests) {
                    StateId s = t.word_env_.root(item.w_inp);
                    for (ActionId a : script) {
                        t.pi_t_.mle_step(t.word_env_, s, request, a, cfg.pi_t_step);
                        if (a != WordEmissionEnv::kStop) s = t.word_env_.apply_action(s, a);
                    }
                }
            }
        }
        return t;
    }

    Description describe(const Task& task, const Execution& execution, Rng& rng) const override {
        const auto& env = *env_;
        const auto& item = env.items()[task.goal_id];

        // J word pairs: the episode's word plus J-1 dictionary draws, with the
        // agent's emitted program applied mechanically to each input
        const auto& dict = wordmod::dictionary();
        std::vector<std::string> inputs{item.w_inp};
        while (static_cast<int>(inputs.size()) < cfg_.j_words)
            inputs.push_back(dict[rng.below(dict.size())]);
        const std::string agent_program = env.tokens_to_text(env.tokens_of(execution));
        std::vector<std::pair<std::string, std::string>> pairs;
        int perf = 0;
        for (const auto& w : inputs) {
            std::string agent_out = wordmod::WordModEnv::apply_program_text(agent_program, w);
            if (agent_out == wordmod::WordModEnv::apply_program_text(item.program, w)) ++perf;
            pairs.emplace_back(w, std::move(agent_out));
        }
        if (perf >= cfg_.tau())
            return item.requests[rng.below(item.requests.size())];

        const auto candidates = make_candidates(pairs, rng);
        auto prag = pragmatic_set(
            candidates,
            [&](const Description& d) {
                int matches = 0;
                for (const auto& [win, wout] : pairs)
                    if (decode(d, win) == wout) ++matches;
                return static_cast<double>(matches);
            },
            cfg_.tau());
        return respond_from_pragmatic(prag, rng);
    }

    // Candidate descriptions for a set of observed pairs: greedy plus K
    // samples from the describer, rendered with the hypothesis' slot fillers.
    std::vector<Description> make_candidates(
        std::span<const std::pair<std::string, std::string>> pairs, Rng& rng) const {
        const auto& env = *env_;
        const auto hyps = wordmod::consistent_hypotheses(pairs);
        std::vector<Description> candidates;
        if (!hyps.empty()) {
            // weights over (hypothesis, sim phrasing of its kind)
            std::vector<double> weights;
            std::vector<std::pair<int, int>> entries;  // (hyp index, variant)
            for (std::size_t hi = 0; hi < hyps.size(); ++hi)
                for (int variant : {0, 1}) {
                    entries.emplace_back(static_cast<int>(hi), variant);
                    weights.push_back(
                        describer_weight(hyps[hi].kind, template_id(hyps[hi].kind, variant)));
                }
            int best = 0;
            for (std::size_t i = 1; i < entries.size(); ++i)
                if (weights[i] > weights[best]) best = static_cast<int>(i);
            auto render = [&](int entry) {
                const auto& h = hyps[entries[entry].first];
                return env.vocab().tokenize_existing(
                    wordmod::render_phrase(h.kind, entries[entry].second, h.x, h.y));
            };
            candidates.push_back(render(best));
            for (int k = 0; k < cfg_.k_samples; ++k)
                candidates.push_back(render(rng.categorical(weights)));
        } else {
            // back-off: global template distribution with fallback fillers
            const auto [x, y] = fallback_chars(pairs);
            const std::vector<bool> all(describer_.n_templates(), true);
            candidates.push_back(render_backoff(describer_.greedy("", all), x, y));
            for (int k = 0; k < cfg_.k_samples; ++k)
                candidates.push_back(render_backoff(describer_.sample("", all, rng), x, y));
        }
        dedup_descriptions(candidates);
        return candidates;
    }

    // Greedy decode of the teacher's execution policy on one input word.
    std::string decode(const Description& request, const std::string& word) const {
        std::string key = word;
        key += '|';
        for (TokenId t : request.tokens) {
            key += std::to_string(t);
            key += ',';
        }
        auto it = decode_cache_.find(key);
        if (it != decode_cache_.end()) return it->second;
        Rng dummy(0);
        const StateId root = word_env_.root(word);
        const Execution e = rollout_policy(word_env_, pi_t_, root, request, dummy, /*greedy=*/true);
        std::vector<ActionId> ops;
        for (const Step& st : e.steps) ops.push_back(st.action);
        std::string out = word_env_.apply_ops(word, ops);
        decode_cache_.emplace(std::move(key), out);
        return out;
    }

    const CountDescriber& describer() const { return describer_; }
    const LogLinearPolicy& execution_policy() const { return pi_t_; }
    const WordEmissionEnv& word_env() const { return word_env_; }

    static std::string frame_key(int kind) { return "k" + std::to_string(kind); }
    static int template_id(int kind, int variant) { return kind * 2 + variant; }

private:
    RegexTeacher(const wordmod::WordModEnv& env, RegexTeacherConfig cfg)
        : env_(&env), cfg_(cfg),
          describer_(2 * wordmod::kind_count()),
          pi_t_(cfg.feature_dim) {}

    double describer_weight(int kind, int tid) const {
        std::vector<bool> mask(describer_.n_templates(), false);
        mask[tid] = true;
        return describer_.weights(frame_key(kind), mask)[tid];
    }

    Description render_backoff(int tid, char x, char y) const {
        const int kind = tid / 2, variant = tid % 2;
        return env_->vocab().tokenize_existing(wordmod::render_phrase(kind, variant, x, y));
    }

    // Deterministic filler characters: the two most frequent letters across
    // the observed input words.
    static std::pair<char, char> fallback_chars(
        std::span<const std::pair<std::string, std::string>> pairs) {
        int freq[26] = {};
        for (const auto& [win, wout] : pairs)
            for (char c : win) freq[c - 'a']++;
        int first = 0, second = 1;
        for (int c = 0; c < 26; ++c)
            if (freq[c] > freq[first]) first = c;
        second = first == 0 ? 1 : 0;
        for (int c = 0; c < 26; ++c)
            if (c != first && freq[c] > freq[second]) second = c;
        return {static_cast<char>('a' + first), static_cast<char>('a' + second)};
    }

    const wordmod::WordModEnv* env_;
    RegexTeacherConfig cfg_;
    CountDescriber describer_;
    WordEmissionEnv word_env_;
    LogLinearPolicy pi_t_;
    mutable std::unordered_map<std::string, std::string> decode_cache_;
};

}  // namespace iliad::teach
