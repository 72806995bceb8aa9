#include <catch2/catch.hpp>

#include <set>

#include "iliad/nav.hpp"
#include "iliad/wordmod.hpp"

#include "test_oracles.hpp"

using namespace iliad;

namespace {

const nav::NavEnv& nav_env() {
    static nav::NavConfig cfg;
    static nav::NavEnv env(cfg);
    return env;
}

const wordmod::WordModEnv& word_env() {
    static wordmod::WordModConfig cfg;
    static wordmod::WordModEnv env(cfg);
    return env;
}

}  // namespace

TEST_CASE("generated graph is connected with distinct attribute pairs") {
    const auto& g = nav_env().graph();
    REQUIRE(g.size() == 60);
    std::set<std::pair<int, int>> pairs;
    for (int v = 0; v < g.size(); ++v) {
        REQUIRE(g.distance(0, v) < nav::NavGraph::kUnreachable);
        pairs.insert({g.node(v).room, g.node(v).color});
    }
    REQUIRE(static_cast<int>(pairs.size()) == g.size());
}

TEST_CASE("nav step semantics") {
    const auto& env = nav_env();
    const auto& g = env.graph();
    const int u = 0;
    const int v = g.neighbors(u).front();

    // move along an edge lands on that neighbor
    REQUIRE(env.apply_action(u, 1 + v) == v);
    // non-adjacent action is a protocol violation
    int far = -1;
    for (int w = 0; w < g.size(); ++w)
        if (w != u && !g.has_edge(u, w)) { far = w; break; }
    REQUIRE_THROWS_AS(env.apply_action(u, 1 + far), ProtocolViolation);

    // stop at t=1 gives an execution of length 1; the horizon caps rollouts
    struct StopPolicy : ConditionalPolicy {
        void action_distribution(const EnvView&, StateId, const Description&,
                                 std::span<const ActionId> valid,
                                 std::vector<double>& probs) const override {
            probs.assign(valid.size(), 0.0);
            probs[0] = 1.0;  // stop is always the first valid action
        }
    } stop_policy;
    Rng rng(1);
    const auto e = rollout_policy(env, stop_policy, u, Description{}, rng);
    REQUIRE(e.length() == 1);
    REQUIRE(e.steps[0].action == env.stop_action());

    struct WalkPolicy : ConditionalPolicy {
        void action_distribution(const EnvView&, StateId, const Description&,
                                 std::span<const ActionId> valid,
                                 std::vector<double>& probs) const override {
            probs.assign(valid.size(), 0.0);
            probs[1] = 1.0;  // always move to the first neighbor
        }
    } walk_policy;
    const auto e2 = rollout_policy(env, walk_policy, u, Description{}, rng);
    REQUIRE(static_cast<int>(e2.length()) == env.horizon());
}

TEST_CASE("nav oracle follows BFS with lowest-id ties and stops inside the radius") {
    const auto& env = nav_env();
    const auto& g = env.graph();
    const auto& item = env.items()[env.split_index(Split::Sim)[0]];
    const Task task = env.make_task(item, 0);

    // at the goal (and within the radius) the oracle stops
    REQUIRE(env.oracle_action(task, item.goal) == env.stop_action());
    for (int v : g.neighbors(item.goal)) REQUIRE(env.oracle_action(task, v) == env.stop_action());

    // outside the radius it takes a first hop that strictly reduces distance,
    // and no smaller-id neighbor does as well
    for (int v = 0; v < g.size(); ++v) {
        if (g.distance(v, item.goal) <= env.config().radius) continue;
        const ActionId a = env.oracle_action(task, v);
        const int hop = a - 1;
        REQUIRE(g.distance(hop, item.goal) == g.distance(v, item.goal) - 1);
        for (int w : g.neighbors(v)) {
            if (w >= hop) break;
            REQUIRE(g.distance(w, item.goal) != g.distance(v, item.goal) - 1);
        }
    }
}

TEST_CASE("nav rewards match the distance formula") {
    const auto& env = nav_env();
    const auto& g = env.graph();
    const auto& item = env.items()[env.split_index(Split::Val)[0]];
    const Task task = env.make_task(item, 0);

    // the ground-truth path scores binary 1 and continuous 1
    const Execution star = env.execution_from_path(item.path);
    REQUIRE(env.reward_binary(task, star) == 1.0);
    REQUIRE(env.reward_continuous(task, star) == Approx(1.0));

    // immediate stop: continuous (d1 - d1)/d1 = 0
    Execution stay;
    stay.steps.push_back({item.start, env.stop_action()});
    REQUIRE(env.reward_continuous(task, stay) == Approx(0.0));

    // one hop toward the goal scores 1/d1
    const double d1 = g.distance(item.start, item.goal);
    Execution hop;
    const int first = g.first_hop(item.start, item.goal);
    hop.steps.push_back({item.start, 1 + first});
    hop.steps.push_back({first, env.stop_action()});
    REQUIRE(env.reward_continuous(task, hop) == Approx(1.0 / d1));
}

TEST_CASE("sdtw matches the exhaustive alignment oracle and its bounds") {
    nav::NavConfig cfg;
    cfg.nodes = 12;
    cfg.sim_items = 1;
    cfg.val_items = 1;
    cfg.test_items = 1;
    cfg.seed = 3;
    const nav::NavEnv env(cfg);
    const auto& g = env.graph();

    // pool: every deterministic shortest path between node pairs within 6 hops
    std::vector<std::vector<int>> pool;
    for (int u = 0; u < g.size(); ++u)
        for (int v = 0; v < g.size(); ++v)
            if (g.distance(u, v) <= 6) pool.push_back(g.shortest_path(u, v));

    int identical_checked = 0;
    for (std::size_t i = 0; i < pool.size(); i += 7)
        for (std::size_t j = 0; j < pool.size(); j += 5) {
            const auto& a = pool[i];
            const auto& b = pool[j];
            const double got = nav::dtw_cost(g, a, b);
            const double want = oracles::brute_dtw(g, a, b, a.size() - 1, b.size() - 1);
            REQUIRE(got == Approx(want).margin(1e-9));
            const double s = nav::sdtw(g, a, b);
            REQUIRE(s >= 0.0);
            REQUIRE(s <= 1.0);
            if (a == b) {
                REQUIRE(s == Approx(1.0));
                ++identical_checked;
            }
            if (g.distance(a.back(), b.back()) > 1) REQUIRE(s == 0.0);
        }
    REQUIRE(identical_checked > 0);
    REQUIRE_THROWS_AS(nav::sdtw(g, {}, {0}), std::invalid_argument);
}

TEST_CASE("nav corpus: counts, split-disjoint templates, self-consistency") {
    const auto& env = nav_env();
    REQUIRE(env.split_index(Split::Sim).size() == 400);
    REQUIRE(env.split_index(Split::Val).size() == 60);
    REQUIRE(env.split_index(Split::Test).size() == 60);

    std::set<int> sim_templates, val_templates, test_templates;
    for (const auto& item : env.items()) {
        // every ground-truth execution satisfies its own task
        const Task task = env.make_task(item, 0);
        REQUIRE(env.reward_binary(task, env.execution_from_path(item.path)) == 1.0);
        const int len = static_cast<int>(item.path.size()) - 1;
        REQUIRE(len >= env.config().min_len);
        REQUIRE(len <= env.config().max_len);
        REQUIRE(item.requests.size() == (item.split == Split::Sim ? 3u : 1u));
        for (int t : item.template_ids) {
            if (item.split == Split::Sim) sim_templates.insert(t);
            if (item.split == Split::Val) val_templates.insert(t);
            if (item.split == Split::Test) test_templates.insert(t);
        }
    }
    for (int t : val_templates) {
        REQUIRE(sim_templates.count(t) == 0);
        REQUIRE(test_templates.count(t) == 0);
    }
    for (int t : test_templates) REQUIRE(sim_templates.count(t) == 0);
}

TEST_CASE("corpus generation is deterministic") {
    nav::NavConfig cfg;
    cfg.sim_items = 20;
    cfg.val_items = 5;
    cfg.test_items = 5;
    const nav::NavEnv a(cfg), b(cfg);
    REQUIRE(a.corpus_jsonl() == b.corpus_jsonl());

    wordmod::WordModConfig wcfg;
    wcfg.sim_items = 20;
    wcfg.val_items = 5;
    wcfg.test_items = 5;
    const wordmod::WordModEnv wa(wcfg), wb(wcfg);
    REQUIRE(wa.corpus_jsonl() == wb.corpus_jsonl());
}

TEST_CASE("nav explorer samples stay within the length band") {
    const auto& env = nav_env();
    const nav::ShortestPathExplorer explorer(&env);
    Rng rng(5);
    for (int i = 0; i < 200; ++i) {
        const StateId start = static_cast<StateId>(rng.below(env.graph().size()));
        const Execution e = explorer.sample(env, start, rng);
        const auto path = env.path_of(e);
        const int len = static_cast<int>(path.size()) - 1;
        REQUIRE(len >= 2);
        REQUIRE(len <= 6);
        // a sampled path is a shortest path to its endpoint
        REQUIRE(env.graph().distance(path.front(), path.back()) == len);
    }
}

// ---------------------------------------------------------------------------

TEST_CASE("word env transitions follow the program state machine") {
    const auto& env = word_env();
    // applying tokens one at a time through WordState, then stopping, equals
    // compiling the whole sequence
    const std::string program = "()(n)()@c";
    wordmod::WordState ws{"embolden", {}};
    for (ActionId a : env.text_to_tokens(program)) ws = wordmod::word_state_step(env, ws, a);
    REQUIRE(ws.word == "embolden");  // compile fires only on stop
    ws = wordmod::word_state_step(env, ws, env.stop_action());
    REQUIRE(ws.word == "emboldec");
    REQUIRE(ws.word == wordmod::WordModEnv::apply_program_text(program, "embolden"));
}

TEST_CASE("word env rewards") {
    const auto& env = word_env();
    const auto& item = env.items()[env.split_index(Split::Val)[0]];
    const Task task = env.make_task(item, 0);

    // the hidden program scores exactly
    const Execution star = env.execution_from_tokens(task.start_state, item.program_tokens);
    REQUIRE(env.reward_binary(task, star) == 1.0);
    REQUIRE(env.reward_continuous(task, star) == Approx(1.0));

    // stopping immediately leaves the word unchanged
    Execution stop_only;
    stop_only.steps.push_back({task.start_state, env.stop_action()});
    REQUIRE(env.reward_binary(task, stop_only) == 0.0);
    const double cont = env.reward_continuous(task, stop_only);
    const int ed = wordmod::levenshtein(item.w_inp, item.w_out);
    REQUIRE(cont == Approx((static_cast<double>(item.w_out.size()) - ed) / item.w_out.size()));
}

TEST_CASE("regex reward fixtures") {
    REQUIRE(wordmod::levenshtein("embolden", "emboldec") == 1);
    // (|w_out| - ed) / |w_out| with ed = 1 and |w_out| = 8
    const double cont = (8.0 - 1.0) / 8.0;
    REQUIRE(cont == Approx(0.875));
    // a prediction much longer than the target can push the formula negative
    const std::string target = "cat";
    const std::string pred = "catcatcat";
    const double neg = (3.0 - wordmod::levenshtein(pred, target)) / 3.0;
    REQUIRE(neg < 0.0);
}

TEST_CASE("word corpus: counts, split phrasings, self-consistency") {
    const auto& env = word_env();
    REQUIRE(env.split_index(Split::Sim).size() == 600);
    REQUIRE(env.split_index(Split::Val).size() == 60);
    REQUIRE(env.split_index(Split::Test).size() == 60);
    for (const auto& item : env.items()) {
        REQUIRE(item.w_out ==
                wordmod::WordModEnv::apply_program_text(item.program, item.w_inp));
        REQUIRE(item.w_out != item.w_inp);
        REQUIRE_FALSE(item.w_out.empty());
        REQUIRE(item.requests.size() == (item.split == Split::Sim ? 2u : 1u));
        // program fits in the horizon with room for <stop>
        REQUIRE(static_cast<int>(item.program_tokens.size()) < env.horizon());
    }
}

TEST_CASE("request phrasing families are split-disjoint but rewire shared role words") {
    // template families: sim uses variants {0,1}, val {2}, test {3};
    // the surfaces must differ while sharing the slot vocabulary
    for (int kind = 0; kind < wordmod::kind_count(); ++kind) {
        std::set<std::string> surfaces;
        for (int variant = 0; variant < 4; ++variant)
            surfaces.insert(wordmod::render_phrase(kind, variant, 'n', 'c'));
        REQUIRE(surfaces.size() == 4);
    }
}

TEST_CASE("hypothesis executor agrees with the compiled program on every kind") {
    Rng rng(424242);
    const auto pool = wordmod::slot_pool();
    const auto& dict = wordmod::dictionary();
    for (int kind = 0; kind < wordmod::kind_count(); ++kind) {
        for (int trial = 0; trial < 60; ++trial) {
            wordmod::Hypothesis h{kind, 0, 0};
            if (wordmod::kind_uses_x(kind)) h.x = pool[rng.below(pool.size())];
            if (wordmod::kind_uses_y(kind)) {
                do {
                    h.y = pool[rng.below(pool.size())];
                } while (h.y == h.x);
            }
            const auto& word = dict[rng.below(dict.size())];
            const std::string program = wordmod::render_program(kind, h.x, h.y);
            INFO("kind " << kind << " program " << program << " word " << word);
            REQUIRE(wordmod::apply_hypothesis(h, word) ==
                    wordmod::WordModEnv::apply_program_text(program, word));
        }
    }
}

TEST_CASE("consistent hypotheses shrink as pairs disambiguate") {
    // single pair: ambiguous between replace-all and replace-last
    std::vector<std::pair<std::string, std::string>> pairs{{"embolden", "emboldec"}};
    auto hyps = wordmod::consistent_hypotheses(pairs);
    auto has = [&](int kind, char x, char y) {
        for (const auto& h : hyps)
            if (h.kind == kind && h.x == x && h.y == y) return true;
        return false;
    };
    REQUIRE(has(0, 'n', 'c'));  // replace all n with c
    REQUIRE(has(3, 0, 'c'));    // replace the last letter with c

    // the second pair kills the replace-last reading
    pairs.push_back({"now", "cow"});
    hyps = wordmod::consistent_hypotheses(pairs);
    REQUIRE(has(0, 'n', 'c'));
    REQUIRE_FALSE(has(3, 0, 'c'));
}

TEST_CASE("explorer pool: skewed coverage, disjoint from test programs") {
    const auto& env = word_env();
    const auto& pool = env.pool_programs();
    REQUIRE(static_cast<int>(pool.size()) == env.config().pool_size);
    std::set<std::string> test_programs;
    for (int i : env.split_index(Split::Test)) test_programs.insert(env.items()[i].program);
    for (const auto& p : pool) REQUIRE(test_programs.count(p) == 0);

    // uniform sampling frequency over the pool
    const wordmod::PoolExplorer explorer(&env);
    Rng rng(77);
    std::unordered_map<std::string, int> freq;
    const int draws = 100000;
    const StateId start = env.root_state("embolden");
    for (int i = 0; i < draws; ++i) {
        const Execution e = explorer.sample(env, start, rng);
        freq[env.tokens_to_text(env.tokens_of(e))]++;
    }
    const double expect = static_cast<double>(draws) / pool.size();
    const double sigma = std::sqrt(expect * (1.0 - 1.0 / pool.size()));
    for (const auto& p : pool) {
        REQUIRE(freq[p] > expect - 3.5 * sigma);
        REQUIRE(freq[p] < expect + 3.5 * sigma);
    }
}
