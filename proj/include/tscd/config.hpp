#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tscd/eval.hpp"
#include "tscd/methods.hpp"
#include "tscd/misspec.hpp"

namespace tscd {

/// One scenario entry of the experiment grid. Parameters not set in the
/// config file take the shipped defaults; the nonstationary GP level depends
/// on the base model and forcing and is resolved per setting.
struct ScenarioConfig {
    std::string label;  // defaults to the kind name; must be unique
    ScenarioKind kind = ScenarioKind::vanilla;
    std::optional<double> alpha;
    std::optional<double> gp_m, gp_nu, gp_ell;
    std::optional<double> zeta, strength;
    std::optional<double> beta;
    std::optional<double> gamma;
    std::optional<double> rho, eta;
    std::optional<std::size_t> period;
    std::optional<double> sigma_tv;
};

struct MethodGrid {
    MethodKind method = MethodKind::var;
    std::vector<std::size_t> tau_max{3, 5};
    std::vector<double> thresholds{0.0, 0.01, 0.05, 0.1, 0.3};  // var, lgc
    std::vector<double> lambdas{0.001, 0.005, 0.01, 0.05, 0.1};  // lgc
    std::vector<double> alphas{0.01, 0.05, 0.1};                 // pcmci
};

struct ExperimentConfig {
    std::uint64_t master_seed = 1;
    BaseModel model = BaseModel::linear;
    std::vector<std::size_t> d_list{10};
    std::vector<std::size_t> t_list{1000};
    std::vector<double> f_list{10.0};  // nonlinear only
    BaseSpec base;                     // d/T/F/model fields are overwritten per setting
    std::vector<ScenarioConfig> scenarios;
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
    std::vector<MethodGrid> methods;
    std::vector<SelectionMode> modes{SelectionMode::best_per_dataset};
    std::size_t jobs = 1;
    std::string out_dir = "out";
    bool persist_datasets = false;
    bool persist_scores = false;

    void validate() const;
};

ExperimentConfig parse_config_json(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Hash over the fields that determine results content. Execution knobs
/// (jobs, out_dir, persistence) are excluded.
std::string config_hash(const ExperimentConfig& config);

/// The resolved ScenarioSpec for one grid cell.
ScenarioSpec make_scenario_spec(const ExperimentConfig& config, const ScenarioConfig& scenario,
                                std::size_t d, std::size_t t_len, std::optional<double> forcing,
                                std::uint64_t trial_seed);

/// Rendering of the violation parameters used in the results param column.
std::string scenario_param_string(const ScenarioSpec& spec);

}  // namespace tscd
