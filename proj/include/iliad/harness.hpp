#pragma once

// Experiment harness: validated run configurations with the paper-scale
// hyperparameter defaults, per-seed drivers for every algorithm, metric
// aggregation across seeds, and report emission.

#include <cmath>
#include <limits>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "iliad/adel.hpp"
#include "iliad/baselines.hpp"
#include "iliad/nav.hpp"
#include "iliad/protocol.hpp"
#include "iliad/teacher.hpp"
#include "iliad/wordmod.hpp"

namespace iliad::harness {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct RunConfig {
    std::string env_kind = "nav";  // nav | regex
    std::string algo = "adel";     // adel | adel-alg3 | dagger | reinforce-binary | reinforce-cont
    long episodes = 20000;
    std::vector<int> seeds{1, 2, 3, 4, 5};
    long eval_every = 1000;
    int eval_max_tasks = 0;
    double success_c = 0.5;  // threshold c for sample complexity

    // mixture (ADEL)
    double lambda = 0.5;
    double beta = 0.5;
    double lambda_min = 0.1;
    long anneal_every = 0;  // 0 = never (the main-experiment setting)
    bool drop_empty = true;

    // optimization
    std::uint32_t feature_dim = 1u << 19;
    double step_size = 0.1;
    int grad_steps = 4;
    int batch_size = 32;
    std::size_t buffer_capacity = 0;
    double reinforce_step = 0.05;
    double baseline_decay = 0.05;

    // teacher
    double tau = 0.5;  // nav; regex uses j_words
    int k_samples = 5;
    int j_words = 5;

    // environment
    int horizon = 10;
    int nav_nodes = 60;
    int sim_items = 400;
    int val_items = 60;
    int test_items = 60;
    std::uint64_t env_seed = 11;

    static RunConfig defaults(const std::string& env_kind) {
        RunConfig cfg;
        cfg.env_kind = env_kind;
        if (env_kind == "regex") {
            cfg.horizon = 40;
            cfg.k_samples = 10;
            cfg.j_words = 5;  // tau = J
            cfg.sim_items = 600;
            cfg.val_items = 60;
            cfg.test_items = 60;
            cfg.env_seed = 7;
            cfg.episodes = 60000;
            cfg.step_size = 0.15;
            cfg.success_c = 0.5;
        } else if (env_kind == "nav") {
            cfg.horizon = 10;
            cfg.tau = 0.5;
            cfg.k_samples = 5;
            cfg.episodes = 20000;
            cfg.step_size = 0.1;
            cfg.success_c = 0.5;
        } else {
            throw std::invalid_argument("unknown environment kind: " + env_kind);
        }
        return cfg;
    }

    json to_json() const {
        return json{{"env", env_kind},
                    {"algo", algo},
                    {"episodes", episodes},
                    {"seeds", seeds},
                    {"eval_every", eval_every},
                    {"eval_max_tasks", eval_max_tasks},
                    {"success_c", success_c},
                    {"lambda", lambda},
                    {"beta", beta},
                    {"lambda_min", lambda_min},
                    {"anneal_every", anneal_every},
                    {"drop_empty", drop_empty},
                    {"feature_dim", feature_dim},
                    {"step_size", step_size},
                    {"grad_steps", grad_steps},
                    {"batch_size", batch_size},
                    {"buffer_capacity", buffer_capacity},
                    {"reinforce_step", reinforce_step},
                    {"baseline_decay", baseline_decay},
                    {"tau", tau},
                    {"k_samples", k_samples},
                    {"j_words", j_words},
                    {"horizon", horizon},
                    {"nav_nodes", nav_nodes},
                    {"sim_items", sim_items},
                    {"val_items", val_items},
                    {"test_items", test_items},
                    {"env_seed", env_seed}};
    }

    // Parses a JSON document on top of the per-environment defaults. Keys are
    // validated against the chosen algorithm; unknown keys are an error.
    static RunConfig from_json(const json& j) {
        const std::string env_kind = j.value("env", std::string("nav"));
        RunConfig cfg = defaults(env_kind);
        const std::string algo = j.value("algo", cfg.algo);
        cfg.algo = algo;

        const std::set<std::string> common{
            "env",       "algo",        "episodes",  "seeds",      "eval_every",
            "eval_max_tasks", "success_c", "feature_dim", "step_size", "horizon",
            "nav_nodes", "sim_items",   "val_items", "test_items", "env_seed"};
        std::set<std::string> accepted = common;
        const bool is_adel = algo == "adel" || algo == "adel-alg3";
        const bool is_reinforce = algo == "reinforce-binary" || algo == "reinforce-cont";
        if (is_adel) {
            accepted.insert({"lambda", "beta", "lambda_min", "anneal_every", "drop_empty",
                             "buffer_capacity", "grad_steps", "batch_size", "tau", "k_samples",
                             "j_words"});
        } else if (algo == "dagger") {
            accepted.insert({"grad_steps", "batch_size"});
        } else if (is_reinforce) {
            accepted.insert({"reinforce_step", "baseline_decay"});
        } else {
            throw std::invalid_argument("unknown algorithm: " + algo);
        }
        for (const auto& [key, value] : j.items())
            if (!accepted.count(key))
                throw std::invalid_argument("config key '" + key + "' is not accepted by algorithm '" +
                                            algo + "'");

        auto get = [&](const char* key, auto& field) {
            if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
        };
        get("episodes", cfg.episodes);
        get("seeds", cfg.seeds);
        get("eval_every", cfg.eval_every);
        get("eval_max_tasks", cfg.eval_max_tasks);
        get("success_c", cfg.success_c);
        get("lambda", cfg.lambda);
        get("beta", cfg.beta);
        get("lambda_min", cfg.lambda_min);
        get("anneal_every", cfg.anneal_every);
        get("drop_empty", cfg.drop_empty);
        get("feature_dim", cfg.feature_dim);
        get("step_size", cfg.step_size);
        get("grad_steps", cfg.grad_steps);
        get("batch_size", cfg.batch_size);
        get("buffer_capacity", cfg.buffer_capacity);
        get("reinforce_step", cfg.reinforce_step);
        get("baseline_decay", cfg.baseline_decay);
        get("tau", cfg.tau);
        get("k_samples", cfg.k_samples);
        get("j_words", cfg.j_words);
        get("horizon", cfg.horizon);
        get("nav_nodes", cfg.nav_nodes);
        get("sim_items", cfg.sim_items);
        get("val_items", cfg.val_items);
        get("test_items", cfg.test_items);
        get("env_seed", cfg.env_seed);
        if (cfg.episodes < 1) throw std::invalid_argument("episodes must be >= 1");
        if (cfg.seeds.empty()) throw std::invalid_argument("at least one seed required");
        return cfg;
    }
};

// Per-seed learning-curve record.
struct MetricsLog {
    int seed = 0;
    struct Point {
        long episode;
        double val_success;
        double train_success_cum;
    };
    std::vector<Point> points;
    double final_test = 0.0;
    double complexity = kInf;

    void validate() const {
        long prev = 0;
        for (const auto& p : points) {
            if (p.episode <= prev) throw std::runtime_error("episodes must be strictly increasing");
            if (p.val_success < 0.0 || p.val_success > 1.0 || p.train_success_cum < 0.0 ||
                p.train_success_cum > 1.0)
                throw std::runtime_error("rates must be within [0, 1]");
            prev = p.episode;
        }
    }

    json to_json() const {
        json pts = json::array();
        for (const auto& p : points)
            pts.push_back({{"episode", p.episode},
                           {"val_success", p.val_success},
                           {"train_success_cum", p.train_success_cum}});
        return json{{"seed", seed},
                    {"points", pts},
                    {"final_test", final_test},
                    {"complexity", std::isinf(complexity) ? json("inf") : json(complexity)}};
    }

    static MetricsLog from_json(const json& j) {
        MetricsLog log;
        log.seed = j.at("seed").get<int>();
        for (const auto& p : j.at("points"))
            log.points.push_back({p.at("episode").get<long>(), p.at("val_success").get<double>(),
                                  p.at("train_success_cum").get<double>()});
        log.final_test = j.at("final_test").get<double>();
        log.complexity = j.at("complexity").is_string() ? kInf : j.at("complexity").get<double>();
        return log;
    }
};

// First evaluation episode whose validation rate reaches c; +infinity if the
// curve never gets there.
inline double sample_complexity(std::span<const MetricsLog::Point> curve, double c) {
    if (curve.empty()) throw std::invalid_argument("sample_complexity of an empty curve");
    for (const auto& p : curve)
        if (p.val_success >= c) return static_cast<double>(p.episode);
    return kInf;
}

struct Aggregate {
    double mean = 0.0;
    double stddev = 0.0;  // population standard deviation
    int finite_count = 0;

    json to_json() const {
        return json{{"mean", std::isinf(mean) ? json("inf") : json(mean)},
                    {"std", std::isinf(stddev) ? json("inf") : json(stddev)},
                    {"finite_count", finite_count}};
    }
};

// Mean and population std over seeds; any +infinity makes the aggregate
// +infinity while finite_count reports how many seeds finished.
inline Aggregate aggregate_seeds(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("aggregate of zero runs");
    Aggregate agg;
    double sum = 0.0, sq = 0.0;
    bool any_inf = false;
    for (double v : values) {
        if (std::isinf(v)) {
            any_inf = true;
            continue;
        }
        agg.finite_count++;
        sum += v;
        sq += v * v;
    }
    if (any_inf) {
        agg.mean = kInf;
        agg.stddev = kInf;
        return agg;
    }
    agg.mean = sum / values.size();
    agg.stddev = std::sqrt(std::max(0.0, sq / values.size() - agg.mean * agg.mean));
    return agg;
}

// ---------------------------------------------------------------------------
// Environment bundles and per-seed drivers. Each run owns a private bundle so
// seeds can execute in parallel without sharing mutable state.

struct EnvBundle {
    std::unique_ptr<Environment> env;
    std::unique_ptr<adel::ExecutionSampler> explorer;
    std::unique_ptr<Teacher> teacher;
    nav::NavEnv* nav = nullptr;
    wordmod::WordModEnv* word = nullptr;
};

inline EnvBundle make_bundle(const RunConfig& cfg, bool need_teacher) {
    EnvBundle bundle;
    if (cfg.env_kind == "nav") {
        nav::NavConfig ncfg;
        ncfg.nodes = cfg.nav_nodes;
        ncfg.horizon = cfg.horizon;
        ncfg.sim_items = cfg.sim_items;
        ncfg.val_items = cfg.val_items;
        ncfg.test_items = cfg.test_items;
        ncfg.seed = cfg.env_seed;
        auto env = std::make_unique<nav::NavEnv>(ncfg);
        bundle.nav = env.get();
        bundle.explorer = std::make_unique<nav::ShortestPathExplorer>(env.get());
        if (need_teacher) {
            teach::NavTeacherConfig tcfg;
            tcfg.tau = cfg.tau;
            tcfg.k_samples = cfg.k_samples;
            tcfg.feature_dim = cfg.feature_dim;
            bundle.teacher = std::make_unique<teach::NavTeacher>(
                teach::NavTeacher::train(*env, tcfg, Rng(cfg.env_seed).stream("teacher")));
        }
        bundle.env = std::move(env);
    } else if (cfg.env_kind == "regex") {
        wordmod::WordModConfig wcfg;
        wcfg.horizon = cfg.horizon;
        wcfg.sim_items = cfg.sim_items;
        wcfg.val_items = cfg.val_items;
        wcfg.test_items = cfg.test_items;
        wcfg.seed = cfg.env_seed;
        auto env = std::make_unique<wordmod::WordModEnv>(wcfg);
        bundle.word = env.get();
        bundle.explorer = std::make_unique<wordmod::PoolExplorer>(env.get());
        if (need_teacher) {
            teach::RegexTeacherConfig tcfg;
            tcfg.j_words = cfg.j_words;
            tcfg.k_samples = cfg.k_samples;
            tcfg.feature_dim = cfg.feature_dim;
            bundle.teacher = std::make_unique<teach::RegexTeacher>(
                teach::RegexTeacher::train(*env, tcfg, Rng(cfg.env_seed).stream("teacher")));
        }
        bundle.env = std::move(env);
    } else {
        throw std::invalid_argument("unknown environment kind: " + cfg.env_kind);
    }
    return bundle;
}

namespace detail {

// Shared evaluation/trace scaffolding for the non-protocol baselines.
template <typename StepFn>
RunTrace run_with_snapshots(const Environment& env, const RunConfig& cfg, Rng root, StepFn step,
                            const ConditionalPolicy& policy) {
    Rng task_rng = root.stream("task-sampling");
    Rng policy_rng = root.stream("policy-sampling");
    RunTrace trace;
    trace.train_returns.reserve(cfg.episodes);
    double train_sum = 0.0;
    for (long n = 1; n <= cfg.episodes; ++n) {
        const Task task = env.sample_task(Split::Sim, task_rng);
        const double r = step(task, policy_rng);
        train_sum += r;
        trace.train_returns.push_back(static_cast<float>(r));
        if ((cfg.eval_every > 0 && n % cfg.eval_every == 0) || n == cfg.episodes) {
            if (!trace.snapshots.empty() && trace.snapshots.back().episode == n) continue;
            EvalSnapshot snap;
            snap.episode = n;
            snap.val_success =
                evaluate_success(env, policy, env.eval_tasks(Split::Val), cfg.eval_max_tasks);
            snap.train_success_cum = train_sum / n;
            trace.snapshots.push_back(snap);
        }
    }
    return trace;
}

}  // namespace detail

struct SeedRun {
    MetricsLog log;
    json checkpoint;
};

// One full run of one algorithm with one seed. Deterministic given (cfg, seed).
inline SeedRun run_single(const RunConfig& cfg, int seed) {
    const bool is_iliad = cfg.algo == "adel" || cfg.algo == "adel-alg3";
    EnvBundle bundle = make_bundle(cfg, is_iliad);
    const Environment& env = *bundle.env;
    Rng root = Rng(static_cast<std::uint64_t>(seed)).stream("run");

    RunTrace trace;
    json checkpoint;
    double lambda_final = cfg.lambda;

    if (is_iliad) {
        adel::AdelOptions opt;
        opt.feature_dim = cfg.feature_dim;
        opt.step_size = cfg.step_size;
        opt.grad_steps = cfg.grad_steps;
        opt.batch_size = cfg.batch_size;
        opt.drop_empty = cfg.drop_empty;
        opt.buffer_capacity = cfg.buffer_capacity;
        opt.mixture.lambda = cfg.lambda;
        opt.mixture.beta = cfg.beta;
        opt.mixture.lambda_min = cfg.lambda_min;
        opt.mixture.anneal_every = cfg.anneal_every;
        if (cfg.algo == "adel") {
            adel::AdelPracticalLearner learner(bundle.explorer.get(), opt);
            trace = run_protocol(env, *bundle.teacher, learner, cfg.episodes, cfg.eval_every, root,
                                 Split::Val, cfg.eval_max_tasks);
            checkpoint = learner.theta().checkpoint(learner.lambda(), cfg.episodes);
            lambda_final = learner.lambda();
        } else {
            adel::AdelLearner learner(bundle.explorer.get(), opt);
            trace = run_protocol(env, *bundle.teacher, learner, cfg.episodes, cfg.eval_every, root,
                                 Split::Val, cfg.eval_max_tasks);
            checkpoint = learner.theta().checkpoint(learner.lambda(), cfg.episodes);
            lambda_final = learner.lambda();
        }
        (void)lambda_final;
    } else if (cfg.algo == "dagger") {
        baselines::DaggerOptions opt;
        opt.feature_dim = cfg.feature_dim;
        opt.step_size = cfg.step_size;
        opt.grad_steps = cfg.grad_steps;
        opt.batch_size = cfg.batch_size;
        baselines::DaggerLearner learner(opt);
        trace = detail::run_with_snapshots(
            env, cfg, root,
            [&](const Task& task, Rng& rng) {
                const Execution e =
                    learner.generate_execution(env, task.start_state, task.request, rng);
                learner.dagger_step(env, task, e, rng);
                return env.reward_binary(task, e);
            },
            learner.policy());
        checkpoint = learner.theta().checkpoint(0.0, cfg.episodes);
    } else if (cfg.algo == "reinforce-binary" || cfg.algo == "reinforce-cont") {
        baselines::ReinforceOptions opt;
        opt.feature_dim = cfg.feature_dim;
        opt.step_size = cfg.reinforce_step;
        opt.baseline_decay = cfg.baseline_decay;
        opt.reward_kind = cfg.algo == "reinforce-binary" ? baselines::RewardKind::Binary
                                                         : baselines::RewardKind::Continuous;
        baselines::ReinforceLearner learner(opt);
        trace = detail::run_with_snapshots(
            env, cfg, root,
            [&](const Task& task, Rng& rng) {
                const Execution e =
                    learner.generate_execution(env, task.start_state, task.request, rng);
                learner.reinforce_step(env, task, e);
                return env.reward_binary(task, e);
            },
            learner.policy());
        checkpoint = learner.theta().checkpoint(0.0, cfg.episodes);
    } else {
        throw std::invalid_argument("unknown algorithm: " + cfg.algo);
    }

    SeedRun run;
    run.log.seed = seed;
    for (const auto& s : trace.snapshots)
        run.log.points.push_back({s.episode, s.val_success, s.train_success_cum});
    // final test success with the final policy requires re-running; the
    // drivers above keep the learner in scope, so evaluate before returning
    run.checkpoint = std::move(checkpoint);
    run.log.complexity = sample_complexity(run.log.points, cfg.success_c);
    run.log.validate();
    return run;
}

// Runs every seed (in parallel up to the hardware thread count) and fills the
// final test success from a fresh greedy evaluation per seed.
struct ExperimentResult {
    std::string setting;
    std::string algorithm;
    RunConfig config;
    std::vector<MetricsLog> seeds;
    std::vector<json> checkpoints;

    Aggregate val_aggregate() const {
        std::vector<double> v;
        for (const auto& log : seeds) v.push_back(log.points.back().val_success);
        return aggregate_seeds(v);
    }
    Aggregate test_aggregate() const {
        std::vector<double> v;
        for (const auto& log : seeds) v.push_back(log.final_test);
        return aggregate_seeds(v);
    }
    Aggregate complexity_aggregate() const {
        std::vector<double> v;
        for (const auto& log : seeds) v.push_back(log.complexity);
        return aggregate_seeds(v);
    }
};

inline ExperimentResult run_experiment(const RunConfig& cfg, bool parallel = true) {
    ExperimentResult result;
    result.setting = cfg.env_kind;
    result.algorithm = cfg.algo;
    result.config = cfg;
    result.seeds.resize(cfg.seeds.size());
    result.checkpoints.resize(cfg.seeds.size());

    auto worker = [&](std::size_t idx) {
        SeedRun run = run_single(cfg, cfg.seeds[idx]);
        // final test success from the checkpointed policy
        EnvBundle bundle = make_bundle(cfg, false);
        const LogLinearPolicy policy = LogLinearPolicy::from_checkpoint(run.checkpoint);
        run.log.final_test = evaluate_success(*bundle.env, policy,
                                              bundle.env->eval_tasks(Split::Test),
                                              cfg.eval_max_tasks);
        result.seeds[idx] = std::move(run.log);
        result.checkpoints[idx] = std::move(run.checkpoint);
    };

    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (!parallel || hw <= 1 || cfg.seeds.size() <= 1) {
        for (std::size_t i = 0; i < cfg.seeds.size(); ++i) worker(i);
        return result;
    }
    std::vector<std::thread> threads;
    std::size_t next = 0;
    const unsigned n_workers = std::min<std::size_t>(hw, cfg.seeds.size());
    std::mutex mu;
    for (unsigned t = 0; t < n_workers; ++t)
        threads.emplace_back([&] {
            for (;;) {
                std::size_t idx;
                {
                    std::lock_guard<std::mutex> lock(mu);
                    if (next >= cfg.seeds.size()) return;
                    idx = next++;
                }
                worker(idx);
            }
        });
    for (auto& th : threads) th.join();
    return result;
}

}  // namespace iliad::harness
