#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tscd/config.hpp"
#include "tscd/eval.hpp"

namespace tscd {

inline constexpr const char* kToolVersion = "0.1.0";

/// One grid cell: scenario x setting x seed.
struct TrialPlan {
    std::size_t scenario_index = 0;
    std::size_t d = 0;
    std::size_t t_len = 0;
    std::optional<double> forcing;
    std::uint64_t seed_label = 0;
    std::uint64_t trial_seed = 0;  // derived; drives all randomness of the trial
};

std::vector<TrialPlan> plan_trials(const ExperimentConfig& config);

/// Stem used for persisted per-trial artifacts.
std::string trial_stem(const ExperimentConfig& config, const TrialPlan& trial);

/// Runs every (trial x method x configuration), in canonical record order.
/// Set jobs_override to force a worker count regardless of the config.
std::vector<EvalRecord> run_trials(const ExperimentConfig& config,
                                   std::optional<std::size_t> jobs_override = std::nullopt);

/// Score one prebuilt dataset with every configured method; records carry the
/// given scenario/param/setting labels. Used by the runner and dataset reload.
std::vector<EvalRecord> evaluate_dataset(const ExperimentConfig& config,
                                         const TrialPlan& trial,
                                         const TimeSeriesMatrix& data,
                                         const CausalGraph& truth,
                                         const std::string& score_dir = "");

struct RunSummary {
    std::size_t trials = 0;
    std::size_t records = 0;
    std::string results_path;
    std::vector<std::string> aggregate_paths;
    std::string manifest_path;
};

/// Full experiment: datasets, methods, metrics, raw + aggregate CSVs, manifest.
RunSummary run_experiment(const ExperimentConfig& config,
                          std::optional<std::size_t> jobs_override = std::nullopt);

/// Datasets and ground-truth graphs only.
std::vector<std::string> generate_datasets(const ExperimentConfig& config);

}  // namespace tscd
