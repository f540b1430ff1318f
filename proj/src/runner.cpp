#include "tscd/runner.hpp"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <tuple>

#include <json.hpp>

#include "tscd/io.hpp"
#include "tscd/methods.hpp"
#include "tscd/misspec.hpp"
#include "tscd/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tscd {

namespace {

std::uint64_t trial_seed_for(const ExperimentConfig& config, const std::string& label,
                             std::size_t d, std::size_t t_len, std::optional<double> forcing,
                             std::uint64_t seed_label) {
    std::uint64_t h = derive_seed(config.master_seed, label);
    h = derive_seed(h, static_cast<std::uint64_t>(d));
    h = derive_seed(h, static_cast<std::uint64_t>(t_len));
    if (forcing) {
        std::uint64_t bits;
        static_assert(sizeof(bits) == sizeof(double));
        std::memcpy(&bits, &*forcing, sizeof(bits));
        h = derive_seed(h, bits);
    }
    return derive_seed(h, seed_label);
}

std::string sanitize(std::string s) {
    for (char& c : s) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                        (c >= '0' && c <= '9') || c == '-' || c == '.';
        if (!ok) c = '_';
    }
    return s;
}

nlohmann::json base_config_json(std::size_t tau) {
    nlohmann::json j;
    j["tau_max"] = tau;
    return j;
}

void sort_canonical(std::vector<EvalRecord>& records) {
    std::sort(records.begin(), records.end(), [](const EvalRecord& a, const EvalRecord& b) {
        const auto ka =
            std::tie(a.scenario, a.param, a.d, a.t_len, a.forcing, a.seed, a.method, a.config_id);
        const auto kb =
            std::tie(b.scenario, b.param, b.d, b.t_len, b.forcing, b.seed, b.method, b.config_id);
        return ka < kb;
    });
}

/// Trial worker shared by run_trials and run_experiment. Generation failures
/// (a divergence-guard abort) degrade to sentinel rows so the grid stays
/// auditable; everything else propagates.
std::vector<EvalRecord> run_single_trial(const ExperimentConfig& config, const TrialPlan& trial,
                                         const std::string& data_dir,
                                         const std::string& score_dir) {
    const ScenarioConfig& scenario = config.scenarios[trial.scenario_index];
    const ScenarioSpec spec = make_scenario_spec(config, scenario, trial.d, trial.t_len,
                                                 trial.forcing, trial.trial_seed);
    std::optional<Dataset> ds;
    try {
        ds = build_dataset(spec);
    } catch (const std::runtime_error&) {
    }
    if (!ds) {
        TimeSeriesMatrix empty;
        CausalGraph no_truth;
        std::vector<EvalRecord> rows = evaluate_dataset(config, trial, empty, no_truth, "");
        for (EvalRecord& r : rows) {
            r.auroc.reset();
            r.auprc.reset();
        }
        return rows;
    }
    if (!data_dir.empty()) {
        const std::string stem = data_dir + "/" + trial_stem(config, trial);
        write_timeseries_csv(ds->data, stem + ".csv");
        write_graph_json(ds->truth, stem + "_graph.json");
    }
    return evaluate_dataset(config, trial, ds->data, ds->truth, score_dir);
}

std::vector<EvalRecord> execute_trials(const ExperimentConfig& config, std::size_t jobs,
                                       const std::string& data_dir,
                                       const std::string& score_dir) {
    const std::vector<TrialPlan> trials = plan_trials(config);
    std::vector<std::vector<EvalRecord>> slots(trials.size());
    std::vector<std::exception_ptr> errors(trials.size());

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(static_cast<int>(jobs))
#else
    (void)jobs;
#endif
    for (long long i = 0; i < static_cast<long long>(trials.size()); ++i) {
        try {
            slots[i] = run_single_trial(config, trials[i], data_dir, score_dir);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    std::vector<EvalRecord> records;
    for (auto& slot : slots) records.insert(records.end(), slot.begin(), slot.end());
    sort_canonical(records);
    return records;
}

}  // namespace

std::vector<TrialPlan> plan_trials(const ExperimentConfig& config) {
    std::vector<TrialPlan> trials;
    const std::vector<double> f_grid =
        config.model == BaseModel::nonlinear ? config.f_list : std::vector<double>{0.0};
    for (std::size_t si = 0; si < config.scenarios.size(); ++si) {
        for (std::size_t d : config.d_list) {
            for (std::size_t t : config.t_list) {
                for (double f : f_grid) {
                    for (std::uint64_t seed : config.seeds) {
                        TrialPlan trial;
                        trial.scenario_index = si;
                        trial.d = d;
                        trial.t_len = t;
                        if (config.model == BaseModel::nonlinear) trial.forcing = f;
                        trial.seed_label = seed;
                        trial.trial_seed = trial_seed_for(config, config.scenarios[si].label, d,
                                                          t, trial.forcing, seed);
                        trials.push_back(trial);
                    }
                }
            }
        }
    }
    return trials;
}

std::string trial_stem(const ExperimentConfig& config, const TrialPlan& trial) {
    std::string stem = sanitize(config.scenarios[trial.scenario_index].label);
    stem += "_d" + std::to_string(trial.d) + "_T" + std::to_string(trial.t_len);
    if (trial.forcing) stem += "_F" + sanitize(format_double(*trial.forcing));
    stem += "_s" + std::to_string(trial.seed_label);
    return stem;
}

std::vector<EvalRecord> evaluate_dataset(const ExperimentConfig& config, const TrialPlan& trial,
                                         const TimeSeriesMatrix& data, const CausalGraph& truth,
                                         const std::string& score_dir) {
    const ScenarioConfig& scenario = config.scenarios[trial.scenario_index];
    const ScenarioSpec spec = make_scenario_spec(config, scenario, trial.d, trial.t_len,
                                                 trial.forcing, trial.trial_seed);

    EvalRecord proto;
    proto.scenario = scenario.label;
    proto.param = scenario_param_string(spec);
    proto.d = trial.d;
    proto.t_len = trial.t_len;
    proto.forcing = trial.forcing;
    proto.seed = trial.seed_label;

    std::vector<EvalRecord> records;
    auto emit = [&](MethodKind method, const std::string& config_id,
                    const nlohmann::json& config_json, const Matrix* scores,
                    const std::string& score_stem) {
        EvalRecord r = proto;
        r.method = std::string(method_kind_name(method));
        r.config_id = config_id;
        r.config_json = config_json.dump();
        if (scores) {
            try {
                r.auroc = auroc(*scores, truth);
                r.auprc = auprc(*scores, truth);
            } catch (const UndefinedMetricError&) {
                r.auroc.reset();
                r.auprc.reset();
            }
            if (!score_dir.empty() && !score_stem.empty()) {
                write_score_csv(*scores, score_dir + "/" + trial_stem(config, trial) + "_" +
                                             score_stem + ".csv");
            }
        }
        records.push_back(std::move(r));
    };

    for (const MethodGrid& grid : config.methods) {
        for (std::size_t tau : grid.tau_max) {
            const std::string prefix =
                std::string(method_kind_name(grid.method)) + "-t" + std::to_string(tau);
            switch (grid.method) {
                case MethodKind::var: {
                    MethodConfig cfg;
                    cfg.method = MethodKind::var;
                    cfg.tau_max = tau;
                    std::optional<Matrix> scores;
                    try {
                        scores = var_granger(data, cfg).scores;
                    } catch (const std::exception&) {
                    }
                    bool persisted = false;
                    for (double thr : grid.thresholds) {
                        nlohmann::json j = base_config_json(tau);
                        j["threshold"] = thr;
                        emit(MethodKind::var, prefix + "-th" + format_double(thr), j,
                             scores ? &*scores : nullptr, persisted ? "" : prefix);
                        persisted = true;
                    }
                    break;
                }
                case MethodKind::lgc: {
                    std::vector<std::optional<Matrix>> path(grid.lambdas.size());
                    try {
                        path = lasso_granger_path(data, tau, grid.lambdas);
                    } catch (const std::exception&) {
                    }
                    for (std::size_t li = 0; li < grid.lambdas.size(); ++li) {
                        const std::string lpart = prefix + "-l" + format_double(grid.lambdas[li]);
                        bool persisted = false;
                        for (double thr : grid.thresholds) {
                            nlohmann::json j = base_config_json(tau);
                            j["lambda"] = grid.lambdas[li];
                            j["threshold"] = thr;
                            emit(MethodKind::lgc, lpart + "-th" + format_double(thr), j,
                                 path[li] ? &*path[li] : nullptr, persisted ? "" : lpart);
                            persisted = true;
                        }
                    }
                    break;
                }
                case MethodKind::pcmci: {
                    for (double alpha : grid.alphas) {
                        MethodConfig cfg;
                        cfg.method = MethodKind::pcmci;
                        cfg.tau_max = tau;
                        cfg.alpha_sig = alpha;
                        std::optional<Matrix> scores;
                        try {
                            scores = pcmci(data, cfg).scores;
                        } catch (const std::exception&) {
                        }
                        nlohmann::json j = base_config_json(tau);
                        j["alpha"] = alpha;
                        const std::string id = prefix + "-a" + format_double(alpha);
                        emit(MethodKind::pcmci, id, j, scores ? &*scores : nullptr, id);
                    }
                    break;
                }
            }
        }
    }
    return records;
}

std::vector<EvalRecord> run_trials(const ExperimentConfig& config,
                                   std::optional<std::size_t> jobs_override) {
    config.validate();
    const std::size_t jobs = std::max<std::size_t>(1, jobs_override.value_or(config.jobs));
    return execute_trials(config, jobs, "", "");
}

RunSummary run_experiment(const ExperimentConfig& config,
                          std::optional<std::size_t> jobs_override) {
    config.validate();
    namespace fs = std::filesystem;
    fs::create_directories(config.out_dir);
    std::string score_dir, data_dir;
    if (config.persist_scores) {
        score_dir = config.out_dir + "/scores";
        fs::create_directories(score_dir);
    }
    if (config.persist_datasets) {
        data_dir = config.out_dir + "/datasets";
        fs::create_directories(data_dir);
    }

    const std::size_t jobs = std::max<std::size_t>(1, jobs_override.value_or(config.jobs));
    const std::vector<EvalRecord> records = execute_trials(config, jobs, data_dir, score_dir);

    RunSummary summary;
    summary.trials = plan_trials(config).size();
    summary.records = records.size();
    summary.results_path = config.out_dir + "/results.csv";
    write_results_csv(records, summary.results_path);

    for (SelectionMode mode : config.modes) {
        const auto rows = aggregate(records, mode);
        const std::string path =
            config.out_dir + "/aggregate_" + std::string(selection_mode_name(mode)) + ".csv";
        write_aggregate_csv(rows, path);
        summary.aggregate_paths.push_back(path);
    }

    nlohmann::json manifest;
    manifest["config_hash"] = config_hash(config);
    manifest["tool_version"] = kToolVersion;
    manifest["trials"] = summary.trials;
    manifest["records"] = summary.records;
    summary.manifest_path = config.out_dir + "/manifest.json";
    std::ofstream(summary.manifest_path) << manifest.dump(2) << '\n';
    return summary;
}

std::vector<std::string> generate_datasets(const ExperimentConfig& config) {
    config.validate();
    namespace fs = std::filesystem;
    const std::string data_dir = config.out_dir + "/datasets";
    fs::create_directories(data_dir);
    std::vector<std::string> paths;
    for (const TrialPlan& trial : plan_trials(config)) {
        const ScenarioConfig& scenario = config.scenarios[trial.scenario_index];
        const ScenarioSpec spec = make_scenario_spec(config, scenario, trial.d, trial.t_len,
                                                     trial.forcing, trial.trial_seed);
        const Dataset ds = build_dataset(spec);
        const std::string stem = data_dir + "/" + trial_stem(config, trial);
        write_timeseries_csv(ds.data, stem + ".csv");
        write_graph_json(ds.truth, stem + "_graph.json");
        paths.push_back(stem + ".csv");
    }
    return paths;
}

}  // namespace tscd
