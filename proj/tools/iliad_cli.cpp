// Command-line front end: theory verification, experiment runs, the mixing
// ablation, and report emission.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "iliad/harness.hpp"
#include "iliad/reports.hpp"
#include "iliad/theory.hpp"
#include "iliad/theory_env.hpp"

namespace fs = std::filesystem;
using namespace iliad;

namespace {

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    json j;
    in >> j;
    return j;
}

void write_text(const std::string& path, const std::string& content) {
    fs::create_directories(fs::path(path).parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

int theory_verify(int instances, int epochs, const std::string& mode, int samples,
                  std::uint64_t seed, double sigma_floor, const std::string& out_dir) {
    using namespace iliad::theory;
    Rng rng(seed);
    InstanceGenOptions gen;
    gen.sigma_floor = sigma_floor;

    json report;
    report["mode"] = mode;
    report["instances"] = instances;
    report["epochs"] = epochs;
    json checks = json::array();
    int violations = 0;

    CheckReport t6_total{.name = "theorem6"}, l5_total{.name = "lemma5"};
    double w_fixed_worst = 0.0;
    double sampled_error_mean = 0.0;

    for (int i = 0; i < instances; ++i) {
        const CBInstance inst = random_instance(rng.stream("instance", i), gen);
        const DerivedDistributions derived = derive_conditionals(inst);
        EpochAdelOptions opt;
        opt.epochs = epochs;
        opt.exact = mode == "exact";
        opt.samples_per_epoch = samples;
        opt.seed = seed + i;
        const TheoryTrace trace = run_epoch_adel(inst, opt);

        json entry;
        entry["instance"] = inst.to_json();
        if (opt.exact) {
            const CheckReport t6 = verify_theorem6(trace, derived);
            const CheckReport l5 = verify_lemma5(trace);
            entry["theorem6"] = t6.to_json();
            entry["lemma5"] = l5.to_json();
            violations += t6.violations + l5.violations;
            t6_total.checks += t6.checks;
            t6_total.violations += t6.violations;
            t6_total.skipped += t6.skipped;
            t6_total.min_slack = std::min(t6_total.min_slack, t6.min_slack);
            l5_total.checks += l5.checks;
            l5_total.violations += l5.violations;
            l5_total.min_slack = std::min(l5_total.min_slack, l5.min_slack);

            const TablePolicy star = optimal_policy_table(derived);
            const double fixed_gap = policy_l1_max(derived, w_operator(derived, star), star);
            w_fixed_worst = std::max(w_fixed_worst, fixed_gap);
            entry["w_fixed_point_gap"] = fixed_gap;
        } else {
            double mean = 0.0;
            for (const auto& st : trace.stats) mean += st.sampled_l1_error;
            mean /= trace.stats.size();
            entry["mean_l1_error"] = mean;
            sampled_error_mean += mean / instances;
        }
        checks.push_back(std::move(entry));
    }
    report["per_instance"] = std::move(checks);
    if (mode == "exact") {
        report["theorem6_total"] = t6_total.to_json();
        report["lemma5_total"] = l5_total.to_json();
        report["w_fixed_point_worst"] = w_fixed_worst;
        std::cout << "theorem6: " << t6_total.checks << " checks, " << t6_total.violations
                  << " violations, min slack " << t6_total.min_slack << "\n";
        std::cout << "lemma5:   " << l5_total.checks << " checks, " << l5_total.violations
                  << " violations, min slack " << l5_total.min_slack << "\n";
        std::cout << "W fixed point worst L1 gap: " << w_fixed_worst << "\n";
    } else {
        report["sampled_error_mean"] = sampled_error_mean;
        std::cout << "sampled mode mean L1 error vs Bayes-optimal: " << sampled_error_mean << "\n";
    }
    if (!out_dir.empty()) {
        write_text(out_dir + "/theory_report.json", report.dump(2) + "\n");
        std::cout << "report written to " << out_dir << "/theory_report.json\n";
    }
    return violations == 0 ? 0 : 1;
}

harness::RunConfig config_from_cli(const std::string& config_path, const std::string& env_kind,
                                   const std::string& algo, long episodes,
                                   const std::vector<int>& seeds) {
    json j = config_path.empty() ? json::object() : load_json(config_path);
    if (!env_kind.empty()) j["env"] = env_kind;
    if (!algo.empty()) j["algo"] = algo;
    if (episodes > 0) j["episodes"] = episodes;
    if (!seeds.empty()) j["seeds"] = seeds;
    return harness::RunConfig::from_json(j);
}

void write_run_outputs(const harness::ExperimentResult& result, const std::string& out_dir) {
    json logs = json::array();
    for (const auto& log : result.seeds) logs.push_back(log.to_json());
    json doc{{"config", result.config.to_json()},
             {"setting", result.setting},
             {"algorithm", result.algorithm},
             {"seeds", logs}};
    write_text(out_dir + "/logs.json", doc.dump(2) + "\n");
    for (std::size_t i = 0; i < result.checkpoints.size(); ++i)
        write_text(out_dir + "/checkpoint_seed" + std::to_string(result.config.seeds[i]) + ".json",
                   result.checkpoints[i].dump() + "\n");
    const std::vector<std::string> formats{"csv", "svg"};
    const std::vector<harness::ExperimentResult> results{result};
    harness::emit_reports(results, out_dir, formats);
}

harness::ExperimentResult load_logs(const std::string& path) {
    const json doc = load_json(path);
    harness::ExperimentResult result;
    result.setting = doc.at("setting").get<std::string>();
    result.algorithm = doc.at("algorithm").get<std::string>();
    result.config = harness::RunConfig::from_json(doc.at("config"));
    for (const auto& j : doc.at("seeds"))
        result.seeds.push_back(harness::MetricsLog::from_json(j));
    return result;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Interactive learning from activity descriptions: desk-scale lab"};
    app.require_subcommand(1);

    // --- theory ---
    auto* theory_cmd = app.add_subcommand("theory", "convergence-theory verification");
    auto* verify_cmd = theory_cmd->add_subcommand("verify", "run the bound suite");
    int instances = 100, epochs = 64, samples = 1000;
    std::string mode = "exact", theory_out;
    std::uint64_t theory_seed = 1;
    double sigma_floor = 1e-3;
    verify_cmd->add_option("--instances", instances, "number of random instances");
    verify_cmd->add_option("--epochs", epochs, "epochs per instance");
    verify_cmd->add_option("--mode", mode, "exact or sampled")
        ->check(CLI::IsMember({"exact", "sampled"}));
    verify_cmd->add_option("--samples", samples, "samples per epoch (sampled mode)");
    verify_cmd->add_option("--seed", theory_seed, "suite seed");
    verify_cmd->add_option("--sigma-floor", sigma_floor, "minimum singular value floor");
    verify_cmd->add_option("--out", theory_out, "output directory for the JSON report");

    // --- run ---
    auto* run_cmd = app.add_subcommand("run", "train one algorithm on one environment");
    std::string run_config, run_env, run_algo, run_out = "out/run";
    long run_episodes = 0;
    std::vector<int> run_seeds;
    run_cmd->add_option("--config", run_config, "JSON config file");
    run_cmd->add_option("--env", run_env, "nav or regex");
    run_cmd->add_option("--algo", run_algo,
                        "adel | adel-alg3 | dagger | reinforce-binary | reinforce-cont");
    run_cmd->add_option("--episodes", run_episodes, "training episodes");
    run_cmd->add_option("--seeds", run_seeds, "random seeds");
    run_cmd->add_option("--out", run_out, "output directory");
    bool dump_corpus = false;
    run_cmd->add_flag("--dump-corpus", dump_corpus, "also write corpus.jsonl (and graph.json)");

    // --- ablate ---
    auto* ablate_cmd = app.add_subcommand("ablate", "mixing-weight ablation for adel");
    std::string ablate_config, ablate_env = "regex", ablate_out = "out/ablate";
    std::vector<double> lambdas{0.0, 0.5, 1.0};
    long ablate_episodes = 0;
    std::vector<int> ablate_seeds;
    ablate_cmd->add_option("--config", ablate_config, "JSON config file");
    ablate_cmd->add_option("--env", ablate_env, "nav or regex");
    ablate_cmd->add_option("--lambdas", lambdas, "comma list of mixing weights")->delimiter(',');
    ablate_cmd->add_option("--episodes", ablate_episodes, "training episodes");
    ablate_cmd->add_option("--seeds", ablate_seeds, "random seeds");
    ablate_cmd->add_option("--out", ablate_out, "output directory");

    // --- report ---
    auto* report_cmd = app.add_subcommand("report", "re-emit reports from logs.json files");
    std::vector<std::string> report_in, report_formats{"csv", "svg"};
    std::string report_out = "out/report";
    report_cmd->add_option("--in", report_in, "logs.json files")->required();
    report_cmd->add_option("--formats", report_formats, "csv,svg")->delimiter(',');
    report_cmd->add_option("--out", report_out, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (verify_cmd->parsed())
            return theory_verify(instances, epochs, mode, samples, theory_seed, sigma_floor,
                                 theory_out);

        if (run_cmd->parsed()) {
            const harness::RunConfig cfg =
                config_from_cli(run_config, run_env, run_algo, run_episodes, run_seeds);
            if (dump_corpus) {
                const auto bundle = harness::make_bundle(cfg, false);
                if (bundle.nav) {
                    write_text(run_out + "/corpus.jsonl", bundle.nav->corpus_jsonl());
                    write_text(run_out + "/graph.json", bundle.nav->graph().to_json().dump(2) + "\n");
                } else if (bundle.word) {
                    write_text(run_out + "/corpus.jsonl", bundle.word->corpus_jsonl());
                }
            }
            const auto result = harness::run_experiment(cfg);
            write_run_outputs(result, run_out);
            const auto val = result.val_aggregate();
            const auto complexity = result.complexity_aggregate();
            std::cout << cfg.env_kind << "/" << cfg.algo << ": val success "
                      << harness::format_double(val.mean) << " +- "
                      << harness::format_double(val.stddev) << ", sample complexity "
                      << harness::format_double(complexity.mean) << " (finite seeds "
                      << complexity.finite_count << ")\n";
            std::cout << "outputs in " << run_out << "\n";
            return 0;
        }

        if (ablate_cmd->parsed()) {
            std::vector<harness::ExperimentResult> results;
            for (double lambda : lambdas) {
                json j = ablate_config.empty() ? json::object() : load_json(ablate_config);
                j["env"] = ablate_env;
                j["algo"] = "adel";
                j["lambda"] = lambda;
                if (ablate_episodes > 0) j["episodes"] = ablate_episodes;
                if (!ablate_seeds.empty()) j["seeds"] = ablate_seeds;
                harness::RunConfig cfg = harness::RunConfig::from_json(j);
                auto result = harness::run_experiment(cfg);
                result.algorithm = "adel-lambda" + harness::format_double(lambda);
                const auto val = result.val_aggregate();
                const auto complexity = result.complexity_aggregate();
                std::cout << "lambda=" << lambda << ": val success "
                          << harness::format_double(val.mean) << ", complexity "
                          << harness::format_double(complexity.mean) << "\n";
                results.push_back(std::move(result));
            }
            const std::vector<std::string> formats{"csv", "svg"};
            harness::emit_reports(results, ablate_out, formats);
            json logs = json::array();
            for (const auto& r : results) {
                json entry{{"algorithm", r.algorithm}, {"seeds", json::array()}};
                for (const auto& log : r.seeds) entry["seeds"].push_back(log.to_json());
                logs.push_back(std::move(entry));
            }
            write_text(ablate_out + "/logs.json", logs.dump(2) + "\n");
            std::cout << "outputs in " << ablate_out << "\n";
            return 0;
        }

        if (report_cmd->parsed()) {
            std::vector<harness::ExperimentResult> results;
            for (const auto& path : report_in) results.push_back(load_logs(path));
            const auto files = harness::emit_reports(results, report_out, report_formats);
            for (const auto& f : files) std::cout << "wrote " << f << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        json err{{"error", e.what()}};
        std::cerr << err.dump() << "\n";
        return 2;
    }
    return 0;
}
