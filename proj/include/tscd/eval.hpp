#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tscd/matrix.hpp"
#include "tscd/timeseries.hpp"

namespace tscd {

/// Thrown when AUROC/AUPRC is requested on single-class ground truth.
struct UndefinedMetricError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Mann-Whitney rank statistic with average-rank tie handling over the
/// off-diagonal (score, edge) pairs.
double auroc(const Matrix& scores, const CausalGraph& truth);

/// Average precision over descending unique score thresholds; tie blocks are
/// processed as one step.
double auprc(const Matrix& scores, const CausalGraph& truth);

double auroc_pairs(std::span<const double> scores, std::span<const std::uint8_t> labels);
double auprc_pairs(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// One (scenario, setting, seed, method, configuration) result row.
/// Metrics are stored in [0, 1]; std::nullopt marks an undefined-metric
/// sentinel (persisted as an empty CSV cell).
struct EvalRecord {
    std::string scenario;
    std::string param;
    std::size_t d = 0;
    std::size_t t_len = 0;
    std::optional<double> forcing;  // null for the linear model
    std::uint64_t seed = 0;
    std::string method;
    std::string config_id;
    std::string config_json;
    std::optional<double> auroc;
    std::optional<double> auprc;

    bool operator==(const EvalRecord&) const = default;
};

enum class SelectionMode { best_per_dataset, best_avg_scenarios, all_hyper_aggregate };

std::string_view selection_mode_name(SelectionMode mode);
std::optional<SelectionMode> parse_selection_mode(std::string_view name);

struct AggregateRow {
    std::string scenario;
    std::size_t d = 0;
    std::size_t t_len = 0;
    std::optional<double> forcing;
    std::string method;
    std::string mode;
    double mean_auroc = 0.0;  // x100, as reported
    double std_auroc = 0.0;
    double mean_auprc = 0.0;
    double std_auprc = 0.0;
    std::size_t n = 0;

    bool operator==(const AggregateRow&) const = default;
};

/// Applies the named hyperparameter-selection protocol and returns the
/// surviving records. Throws when a configuration is missing from a cell it
/// is selected over, naming the hole.
std::vector<EvalRecord> select_hyperparams(const std::vector<EvalRecord>& records,
                                           SelectionMode mode);

/// Mean and sample standard deviation (x100) per (scenario, setting, method)
/// group of the already-selected records, in canonical order.
std::vector<AggregateRow> aggregate(const std::vector<EvalRecord>& records, SelectionMode mode);

}  // namespace tscd
