#include <catch2/catch.hpp>

#include "iliad/harness.hpp"
#include "iliad/reports.hpp"

using namespace iliad;
using namespace iliad::harness;

namespace {

MetricsLog make_log(int seed, std::vector<std::pair<long, double>> curve) {
    MetricsLog log;
    log.seed = seed;
    double cum = 0.0;
    for (auto [ep, val] : curve) {
        cum = 0.5 * val;  // arbitrary valid rate
        log.points.push_back({ep, val, cum});
    }
    return log;
}

}  // namespace

TEST_CASE("sample complexity rules") {
    const auto log = make_log(1, {{10000, 0.10}, {20000, 0.32}});
    REQUIRE(sample_complexity(log.points, 0.30) == 20000.0);
    REQUIRE(std::isinf(sample_complexity(log.points, 0.5)));

    const auto first = make_log(1, {{500, 0.9}, {1000, 0.95}});
    REQUIRE(sample_complexity(first.points, 0.3) == 500.0);

    REQUIRE_THROWS_AS(sample_complexity(std::span<const MetricsLog::Point>{}, 0.3),
                      std::invalid_argument);
}

TEST_CASE("seed aggregation") {
    const std::vector<double> identical{0.4, 0.4, 0.4};
    auto agg = aggregate_seeds(identical);
    REQUIRE(agg.mean == Approx(0.4));
    REQUIRE(agg.stddev == Approx(0.0).margin(1e-12));

    const std::vector<double> pair{0.2, 0.4};
    agg = aggregate_seeds(pair);
    REQUIRE(agg.mean == Approx(0.3));
    REQUIRE(agg.stddev == Approx(0.1));

    const std::vector<double> with_inf{100.0, kInf};
    agg = aggregate_seeds(with_inf);
    REQUIRE(std::isinf(agg.mean));
    REQUIRE(agg.finite_count == 1);

    REQUIRE_THROWS_AS(aggregate_seeds(std::span<const double>{}), std::invalid_argument);
}

TEST_CASE("run csv schema and round trip") {
    std::vector<MetricsLog> logs{make_log(1, {{10, 0.1}, {20, 0.2}, {30, 0.25}}),
                                 make_log(2, {{10, 0.15}, {20, 0.22}, {30, 0.3}})};
    const std::string csv = emit_run_csv(logs);
    // 2 seeds x 3 evals x 2 metrics = 12 data rows
    REQUIRE(std::count(csv.begin(), csv.end(), '\n') == 13);
    REQUIRE(csv.rfind("seed,episode,metric,value\n", 0) == 0);

    const auto parsed = parse_run_csv(csv);
    REQUIRE(parsed.size() == logs.size());
    for (std::size_t i = 0; i < logs.size(); ++i) {
        REQUIRE(parsed[i].seed == logs[i].seed);
        REQUIRE(parsed[i].points.size() == logs[i].points.size());
        for (std::size_t k = 0; k < logs[i].points.size(); ++k) {
            REQUIRE(parsed[i].points[k].episode == logs[i].points[k].episode);
            REQUIRE(parsed[i].points[k].val_success == logs[i].points[k].val_success);
            REQUIRE(parsed[i].points[k].train_success_cum == logs[i].points[k].train_success_cum);
        }
    }
    // emitted CSV is byte-stable
    REQUIRE(emit_run_csv(parsed) == csv);
}

TEST_CASE("summary csv carries infinity cells") {
    ExperimentResult r;
    r.setting = "regex";
    r.algorithm = "reinforce-binary";
    r.seeds = {make_log(1, {{10, 0.0}}), make_log(2, {{10, 0.0}})};
    for (auto& log : r.seeds) log.complexity = kInf;
    const std::vector<ExperimentResult> results{r};
    const std::string csv = emit_summary_csv(results);
    REQUIRE(csv.find(",inf,inf\n") != std::string::npos);
}

TEST_CASE("metrics log validation") {
    MetricsLog bad = make_log(1, {{10, 0.5}, {10, 0.6}});
    REQUIRE_THROWS(bad.validate());
    MetricsLog neg = make_log(1, {{10, -0.5}});
    REQUIRE_THROWS(neg.validate());
    MetricsLog ok = make_log(1, {{10, 0.5}, {20, 0.6}});
    REQUIRE_NOTHROW(ok.validate());

    // json round trip including the infinity sentinel
    ok.complexity = kInf;
    const auto back = MetricsLog::from_json(ok.to_json());
    REQUIRE(std::isinf(back.complexity));
    REQUIRE(back.points.size() == ok.points.size());
}

TEST_CASE("config validation accepts only the algorithm's keys") {
    json good{{"env", "regex"}, {"algo", "adel"}, {"lambda", 0.3}, {"episodes", 100}};
    const auto cfg = RunConfig::from_json(good);
    REQUIRE(cfg.lambda == 0.3);
    REQUIRE(cfg.horizon == 40);  // regex Table default
    REQUIRE(cfg.j_words == 5);
    REQUIRE(cfg.k_samples == 10);

    const auto nav_cfg = RunConfig::defaults("nav");
    REQUIRE(nav_cfg.horizon == 10);
    REQUIRE(nav_cfg.tau == 0.5);
    REQUIRE(nav_cfg.k_samples == 5);
    REQUIRE(nav_cfg.seeds == std::vector<int>{1, 2, 3, 4, 5});

    json unknown{{"env", "nav"}, {"algo", "adel"}, {"warp_speed", 9}};
    REQUIRE_THROWS_AS(RunConfig::from_json(unknown), std::invalid_argument);

    // a mixing weight is not an accepted key for the IL baseline
    json wrong_algo{{"env", "nav"}, {"algo", "dagger"}, {"lambda", 0.5}};
    REQUIRE_THROWS_AS(RunConfig::from_json(wrong_algo), std::invalid_argument);

    json bad_algo{{"env", "nav"}, {"algo", "sarsa"}};
    REQUIRE_THROWS_AS(RunConfig::from_json(bad_algo), std::invalid_argument);

    json zero_episodes{{"env", "nav"}, {"algo", "adel"}, {"episodes", 0}};
    REQUIRE_THROWS_AS(RunConfig::from_json(zero_episodes), std::invalid_argument);
}

TEST_CASE("empty format list writes nothing") {
    ExperimentResult r;
    r.setting = "nav";
    r.algorithm = "adel";
    r.seeds = {make_log(1, {{10, 0.5}})};
    const std::vector<ExperimentResult> results{r};
    const std::vector<std::string> none;
    const auto files = emit_reports(results, "/tmp/iliad-test-empty", none);
    REQUIRE(files.empty());
}

TEST_CASE("svg output is self-contained and carries every algorithm") {
    ExperimentResult a, b;
    a.setting = b.setting = "nav";
    a.algorithm = "adel";
    b.algorithm = "dagger";
    a.seeds = {make_log(1, {{10, 0.2}, {20, 0.4}}), make_log(2, {{10, 0.3}, {20, 0.5}})};
    b.seeds = {make_log(1, {{10, 0.6}, {20, 0.8}})};
    const std::vector<ExperimentResult> results{a, b};
    const std::string svg = emit_svg(results, "nav validation success");
    REQUIRE(svg.rfind("<svg", 0) == 0);
    REQUIRE(svg.find("</svg>") != std::string::npos);
    REQUIRE(svg.find("adel") != std::string::npos);
    REQUIRE(svg.find("dagger") != std::string::npos);
    REQUIRE(svg.find("polyline") != std::string::npos);
    REQUIRE(svg.find("polygon") != std::string::npos);  // the std band
}

TEST_CASE("small protocol run is reproducible through the harness") {
    RunConfig cfg = RunConfig::defaults("nav");
    cfg.algo = "adel";
    cfg.nav_nodes = 12;
    cfg.sim_items = 12;
    cfg.val_items = 4;
    cfg.test_items = 4;
    cfg.episodes = 40;
    cfg.eval_every = 20;
    cfg.seeds = {1, 2};
    cfg.feature_dim = 1u << 14;

    const auto a = run_experiment(cfg, /*parallel=*/true);
    const auto b = run_experiment(cfg, /*parallel=*/false);
    REQUIRE(a.seeds.size() == 2);
    for (int i = 0; i < 2; ++i) {
        REQUIRE(a.seeds[i].to_json().dump() == b.seeds[i].to_json().dump());
        REQUIRE(a.seeds[i].points.size() == 2);
    }
    REQUIRE(emit_run_csv(a.seeds) == emit_run_csv(b.seeds));
}
