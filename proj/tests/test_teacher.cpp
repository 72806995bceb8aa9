#include <catch2/catch.hpp>

#include <map>

#include "iliad/teacher.hpp"

using namespace iliad;
using namespace iliad::teach;

namespace {

const nav::NavEnv& nav_fixture() {
    static nav::NavEnv* env = [] {
        nav::NavConfig cfg;
        cfg.nodes = 24;
        cfg.sim_items = 80;
        cfg.val_items = 10;
        cfg.test_items = 10;
        cfg.seed = 33;
        return new nav::NavEnv(cfg);
    }();
    return *env;
}

const wordmod::WordModEnv& word_fixture() {
    static wordmod::WordModEnv* env = [] {
        wordmod::WordModConfig cfg;
        cfg.sim_items = 300;
        cfg.val_items = 30;
        cfg.test_items = 30;
        cfg.seed = 44;
        return new wordmod::WordModEnv(cfg);
    }();
    return *env;
}

const RegexTeacher& word_teacher() {
    static RegexTeacher* t = [] {
        RegexTeacherConfig cfg;
        cfg.feature_dim = 1u << 18;
        return new RegexTeacher(RegexTeacher::train(word_fixture(), cfg, Rng(5)));
    }();
    return *t;
}

}  // namespace

TEST_CASE("count describer: single pair, two frames, back-off") {
    CountDescriber d(3);
    const std::vector<bool> all{true, true, true};

    // single training pair: greedy output is that template
    d.observe("frameA", 1);
    REQUIRE(d.greedy("frameA", all) == 1);

    // two frames with one template each map to their own template
    d.observe("frameB", 2);
    REQUIRE(d.greedy("frameB", all) == 2);

    // held-out frame backs off to the global distribution
    d.observe("frameA", 1);  // global counts now: t1 -> 2, t2 -> 1
    const auto w = d.weights("unseen", all);
    REQUIRE(w[0] == Approx(1.0));  // smoothing only
    REQUIRE(w[1] == Approx(3.0));
    REQUIRE(w[2] == Approx(2.0));
    REQUIRE(d.greedy("unseen", all) == 1);
    REQUIRE_FALSE(d.has_frame("unseen"));

    // greedy ties break to the lowest template id
    CountDescriber tie(2);
    REQUIRE(tie.greedy("x", {true, true}) == 0);
}

TEST_CASE("pragmatic set keeps candidates at or above the threshold") {
    std::vector<Description> cands(3);
    cands[0].tokens = {1};
    cands[1].tokens = {2};
    cands[2].tokens = {3};
    std::map<std::vector<TokenId>, double> perf{
        {{1}, 1.0}, {{2}, 0.5}, {{3}, 0.49}};
    const auto prag = pragmatic_set(
        cands, [&](const Description& d) { return perf.at(d.tokens); }, 0.5);
    REQUIRE(prag.size() == 2);  // boundary value is included (>= is inclusive)

    const auto none = pragmatic_set(
        cands, [&](const Description& d) { return perf.at(d.tokens); }, 2.0);
    REQUIRE(none.empty());

    // empty pragmatic set: the response is the empty description w.p. 1
    Rng rng(3);
    for (int i = 0; i < 20; ++i) REQUIRE(respond_from_pragmatic({}, rng).is_empty());

    // one survivor: that description or the empty one, each about half
    std::vector<Description> one{cands[0]};
    int empty = 0;
    const int n = 40000;
    for (int i = 0; i < n; ++i)
        if (respond_from_pragmatic(one, rng).is_empty()) ++empty;
    REQUIRE(std::abs(empty - n / 2) < 3 * std::sqrt(n * 0.25));
}

TEST_CASE("nav teacher: near-optimal executions get the task's own requests") {
    const auto& env = nav_fixture();
    NavTeacherConfig cfg;
    cfg.feature_dim = 1u << 18;
    const NavTeacher teacher = NavTeacher::train(env, cfg, Rng(2));

    const auto& item = env.items()[env.split_index(Split::Sim)[3]];
    const Task task = env.make_task(item, 0);
    const Execution star = env.execution_from_path(item.path);
    Rng rng(7);
    std::map<std::vector<TokenId>, int> freq;
    const int n = 6000;
    for (int i = 0; i < n; ++i) {
        const Description d = teacher.describe(task, star, rng);
        REQUIRE_FALSE(d.is_empty());
        bool is_request = false;
        for (const auto& r : item.requests) is_request |= (r == d);
        REQUIRE(is_request);  // first branch draws from the task's request set
        freq[d.tokens]++;
    }
    // uniform over the M = 3 requests
    for (const auto& [tokens, count] : freq)
        REQUIRE(std::abs(count - n / 3.0) < 4 * std::sqrt(n * (1.0 / 3) * (2.0 / 3)));
}

TEST_CASE("nav teacher second branch: support within candidates plus empty") {
    const auto& env = nav_fixture();
    NavTeacherConfig cfg;
    cfg.feature_dim = 1u << 18;
    const NavTeacher teacher = NavTeacher::train(env, cfg, Rng(2));

    const auto& item = env.items()[env.split_index(Split::Sim)[4]];
    const Task task = env.make_task(item, 0);
    // a deliberately wrong execution: immediate stop at the start
    Execution wrong;
    wrong.steps.push_back({item.start, 0});
    REQUIRE(nav::sdtw(env.graph(), env.path_of(wrong), item.path, env.config().radius) < cfg.tau);

    Rng rng(8);
    for (int i = 0; i < 200; ++i) {
        const Description d = teacher.describe(task, wrong, rng);
        if (d.is_empty()) continue;
        // anything non-empty must be a description the describer could render
        // for the agent's own frame, never one of the task's requests copied in
        const auto frame = env.frame_of(env.path_of(wrong));
        bool renderable = false;
        for (const auto& t : nav::template_inventory()) {
            if (t.split != Split::Sim) continue;
            if (t.needs_mid && frame.mids.empty()) continue;
            renderable |= (env.render_template(t.id, frame) == d);
        }
        REQUIRE(renderable);
    }
}

TEST_CASE("regex teacher: multi-pair threshold and the ambiguity fixture") {
    const auto& env = word_fixture();
    const auto& teacher = word_teacher();

    // find a sim item whose program is the plain replace-all kind
    const wordmod::CorpusItem* item = nullptr;
    for (int i : env.split_index(Split::Sim))
        if (env.items()[i].kind == 0) {
            item = &env.items()[i];
            break;
        }
    REQUIRE(item != nullptr);
    const Task task = env.make_task(*item, 0);

    // the exact hidden program matches all J pairs: first branch
    Rng rng(9);
    const Execution star = env.execution_from_tokens(task.start_state, item->program_tokens);
    for (int i = 0; i < 50; ++i) {
        const Description d = teacher.describe(task, star, rng);
        bool is_request = false;
        for (const auto& r : item->requests) is_request |= (r == d);
        REQUIRE(is_request);
    }

    // J-1 of J is still the second branch: tau = J is strict. A program that
    // differs only on rare words cannot clear the threshold when one of the
    // extra draws exposes it; easier to check with a plainly wrong program.
    const Execution wrong = env.execution_from_tokens(
        task.start_state, env.text_to_tokens("()(q)()@z"));
    int first_branch = 0;
    for (int i = 0; i < 200; ++i) {
        const Description d = teacher.describe(task, wrong, rng);
        for (const auto& r : item->requests)
            if (r == d) ++first_branch;
    }
    REQUIRE(first_branch == 0);
}

TEST_CASE("the paper's ambiguity case resolves with a second word pair") {
    const auto& env = word_fixture();
    const auto& vocab = env.vocab();

    const Description d_all = vocab.tokenize_existing("replace all n with c");
    const Description d_last = vocab.tokenize_existing("replace the last letter with c");

    // a fixture execution policy that executes exactly the described rule
    auto fixture_outputs = [&](const Description& d, const std::string& w) -> std::string {
        if (d == d_all) return wordmod::apply_hypothesis({0, 'n', 'c'}, w);
        if (d == d_last) return wordmod::apply_hypothesis({3, 0, 'c'}, w);
        return w;
    };
    const std::vector<Description> candidates{d_all, d_last};

    // one pair: both readings reproduce the agent's outputs
    std::vector<std::pair<std::string, std::string>> pairs{{"embolden", "emboldec"}};
    auto perf1 = [&](const Description& d) {
        int m = 0;
        for (const auto& [win, wout] : pairs)
            if (fixture_outputs(d, win) == wout) ++m;
        return static_cast<double>(m);
    };
    auto prag = pragmatic_set(candidates, perf1, static_cast<double>(pairs.size()));
    REQUIRE(prag.size() == 2);

    // adding now -> cow filters the replace-the-last-letter reading
    pairs.push_back({"now", "cow"});
    prag = pragmatic_set(candidates, perf1, static_cast<double>(pairs.size()));
    REQUIRE(prag.size() == 1);
    REQUIRE(prag[0] == d_all);
}

TEST_CASE("first-branch frequency tracks the fraction of near-optimal executions") {
    const auto& env = word_fixture();
    const auto& teacher = word_teacher();
    const auto& item = env.items()[env.split_index(Split::Sim)[1]];
    const Task task = env.make_task(item, 0);
    const Execution star = env.execution_from_tokens(task.start_state, item.program_tokens);
    const Execution junk = env.execution_from_tokens(task.start_state, env.text_to_tokens("((("));

    Rng rng(11);
    const double p_opt = 0.3;
    const int n = 20000;
    int first_branch = 0;
    int near_optimal = 0;
    for (int i = 0; i < n; ++i) {
        const bool optimal = rng.bernoulli(p_opt);
        near_optimal += optimal;
        const Description d = teacher.describe(task, optimal ? star : junk, rng);
        for (const auto& r : item.requests)
            if (r == d) {
                ++first_branch;
                break;
            }
    }
    // junk programs can at most echo a request if the back-off happens to
    // render the item's own phrasing with its own characters; the chance is
    // negligible, so first-branch responses track near-optimal episodes
    REQUIRE(std::abs(first_branch - near_optimal) <=
            3.0 * std::sqrt(n * p_opt * (1 - p_opt)) + 0.001 * n);
}

TEST_CASE("regex describer is trained from word pairs only") {
    // the describer input type carries no program field: it is built from
    // (input, output) pairs alone
    std::vector<std::pair<std::string, std::string>> pairs{{"now", "cow"}};
    const auto hyps = wordmod::consistent_hypotheses(pairs);
    REQUIRE_FALSE(hyps.empty());
    // teacher isolation at the interface: describe() receives the task and
    // the execution, never an agent policy
    static_assert(std::is_invocable_r_v<Description, decltype(&Teacher::describe),
                                        const Teacher&, const Task&, const Execution&, Rng&>);
}
