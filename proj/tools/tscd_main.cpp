#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tscd/config.hpp"
#include "tscd/io.hpp"
#include "tscd/radar.hpp"
#include "tscd/runner.hpp"

namespace {

tscd::ExperimentConfig load_with_overrides(const std::string& config_path,
                                           const std::string& out_dir,
                                           std::optional<std::uint64_t> seed,
                                           std::optional<std::size_t> jobs) {
    tscd::ExperimentConfig config = tscd::load_config(config_path);
    if (!out_dir.empty()) config.out_dir = out_dir;
    if (seed) config.master_seed = *seed;
    if (jobs) config.jobs = *jobs;
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Time-series causal discovery benchmark engine"};
    app.require_subcommand(1);
    app.set_version_flag("--version", tscd::kToolVersion);

    std::string config_path, out_dir, results_path, aggregate_path, truth_path, svg_path;
    std::string mode_name = "best_per_dataset";
    std::string metric = "auprc";
    std::vector<std::string> score_paths;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> jobs;
    std::optional<std::size_t> filter_d, filter_t;
    std::optional<double> filter_f;

    auto* generate = app.add_subcommand("generate", "Emit datasets and ground-truth graphs only");
    generate->add_option("--config", config_path, "Experiment config JSON")->required();
    generate->add_option("--out", out_dir, "Output directory (overrides config)");
    generate->add_option("--seed", seed, "Master seed (overrides config)");

    auto* run = app.add_subcommand("run", "Run the full experiment grid");
    run->add_option("--config", config_path, "Experiment config JSON")->required();
    run->add_option("--out", out_dir, "Output directory (overrides config)");
    run->add_option("--jobs", jobs, "Parallel trial workers (overrides config)");
    run->add_option("--seed", seed, "Master seed (overrides config)");

    auto* evaluate =
        app.add_subcommand("evaluate", "Score persisted score matrices against a persisted graph");
    evaluate->add_option("--truth", truth_path, "Ground-truth graph JSON")->required();
    evaluate->add_option("scores", score_paths, "Score-matrix CSV files")->required();
    evaluate->add_option("--out", results_path, "Optional CSV output path");

    auto* report = app.add_subcommand("report", "Aggregate a raw results CSV");
    report->add_option("--results", results_path, "Raw results CSV")->required();
    report->add_option("--mode", mode_name,
                       "best_per_dataset|best_avg_scenarios|all_hyper_aggregate");
    report->add_option("--out", aggregate_path, "Aggregate CSV output path")->required();

    auto* radar = app.add_subcommand("radar", "Render a radar chart from an aggregate CSV");
    radar->add_option("--aggregate", aggregate_path, "Aggregate CSV")->required();
    radar->add_option("--metric", metric, "auroc|auprc");
    radar->add_option("--out", svg_path, "SVG output path")->required();
    radar->add_option("--d", filter_d, "Setting filter: node count");
    radar->add_option("--t", filter_t, "Setting filter: series length");
    radar->add_option("--f", filter_f, "Setting filter: forcing");

    CLI11_PARSE(app, argc, argv);

    try {
        if (generate->parsed()) {
            const auto config = load_with_overrides(config_path, out_dir, seed, jobs);
            const auto paths = tscd::generate_datasets(config);
            std::cout << "wrote " << paths.size() << " datasets under " << config.out_dir
                      << "/datasets\n";
        } else if (run->parsed()) {
            const auto config = load_with_overrides(config_path, out_dir, seed, jobs);
            const auto summary = tscd::run_experiment(config);
            std::cout << "trials: " << summary.trials << "\nrecords: " << summary.records
                      << "\nresults: " << summary.results_path << '\n';
            for (const auto& p : summary.aggregate_paths) std::cout << "aggregate: " << p << '\n';
            std::cout << "manifest: " << summary.manifest_path << '\n';
        } else if (evaluate->parsed()) {
            const tscd::CausalGraph truth = tscd::read_graph_json(truth_path);
            std::string csv = "file,auroc,auprc\n";
            for (const auto& path : score_paths) {
                const tscd::Matrix scores = tscd::read_score_csv(path);
                char buf[64];
                std::snprintf(buf, sizeof(buf), "%.4f,%.4f", tscd::auroc(scores, truth) * 100.0,
                              tscd::auprc(scores, truth) * 100.0);
                csv += path + "," + buf + "\n";
                std::cout << path << ": " << buf << '\n';
            }
            if (!results_path.empty()) {
                std::ofstream(results_path) << csv;
            }
        } else if (report->parsed()) {
            const auto mode = tscd::parse_selection_mode(mode_name);
            if (!mode) throw std::invalid_argument("unknown mode: " + mode_name);
            const auto records = tscd::read_results_csv(results_path);
            tscd::write_aggregate_csv(tscd::aggregate(records, *mode), aggregate_path);
            std::cout << "wrote " << aggregate_path << '\n';
        } else if (radar->parsed()) {
            tscd::RadarOptions options;
            options.metric = metric;
            options.d = filter_d;
            options.t_len = filter_t;
            options.forcing = filter_f;
            tscd::render_radar(tscd::read_aggregate_csv(aggregate_path), options, svg_path);
            std::cout << "wrote " << svg_path << '\n';
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
