#include "tscd/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <tuple>

namespace tscd {

namespace {

struct OffDiagonal {
    std::vector<double> scores;
    std::vector<std::uint8_t> labels;
};

OffDiagonal off_diagonal(const Matrix& scores, const CausalGraph& truth) {
    if (scores.rows() != truth.d || scores.cols() != truth.d) {
        throw std::invalid_argument("metric: score matrix does not match the graph");
    }
    OffDiagonal out;
    out.scores.reserve(truth.d * (truth.d - 1));
    out.labels.reserve(truth.d * (truth.d - 1));
    for (std::size_t p = 0; p < truth.d; ++p) {
        for (std::size_t q = 0; q < truth.d; ++q) {
            if (p == q) continue;
            out.scores.push_back(scores(p, q));
            out.labels.push_back(truth.edge(p, q) ? 1 : 0);
        }
    }
    return out;
}

}  // namespace

double auroc_pairs(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    const std::size_t n = scores.size();
    if (labels.size() != n) throw std::invalid_argument("auroc: size mismatch");
    std::size_t positives = 0;
    for (auto l : labels) positives += l ? 1 : 0;
    const std::size_t negatives = n - positives;
    if (positives == 0 || negatives == 0) {
        throw UndefinedMetricError("auroc: ground truth has a single class");
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Average ranks within tie groups, accumulate positive ranks.
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // ranks are 1-based
        for (std::size_t k = i; k < j; ++k) {
            if (labels[order[k]]) rank_sum_pos += avg_rank;
        }
        i = j;
    }
    const double p = static_cast<double>(positives);
    const double u = rank_sum_pos - p * (p + 1.0) / 2.0;
    return u / (p * static_cast<double>(negatives));
}

double auprc_pairs(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    const std::size_t n = scores.size();
    if (labels.size() != n) throw std::invalid_argument("auprc: size mismatch");
    std::size_t positives = 0;
    for (auto l : labels) positives += l ? 1 : 0;
    if (positives == 0) throw UndefinedMetricError("auprc: no positive ground-truth entries");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    double ap = 0.0;
    std::size_t tp = 0, seen = 0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        std::size_t block_tp = 0;
        while (j < n && scores[order[j]] == scores[order[i]]) {
            if (labels[order[j]]) ++block_tp;
            ++j;
        }
        tp += block_tp;
        seen = j;
        const double precision = static_cast<double>(tp) / static_cast<double>(seen);
        ap += precision * static_cast<double>(block_tp) / static_cast<double>(positives);
        i = j;
    }
    return ap;
}

double auroc(const Matrix& scores, const CausalGraph& truth) {
    const OffDiagonal pairs = off_diagonal(scores, truth);
    return auroc_pairs(pairs.scores, pairs.labels);
}

double auprc(const Matrix& scores, const CausalGraph& truth) {
    const OffDiagonal pairs = off_diagonal(scores, truth);
    return auprc_pairs(pairs.scores, pairs.labels);
}

std::string_view selection_mode_name(SelectionMode mode) {
    switch (mode) {
        case SelectionMode::best_per_dataset: return "best_per_dataset";
        case SelectionMode::best_avg_scenarios: return "best_avg_scenarios";
        case SelectionMode::all_hyper_aggregate: return "all_hyper_aggregate";
    }
    return "?";
}

std::optional<SelectionMode> parse_selection_mode(std::string_view name) {
    for (SelectionMode m : {SelectionMode::best_per_dataset, SelectionMode::best_avg_scenarios,
                            SelectionMode::all_hyper_aggregate}) {
        if (selection_mode_name(m) == name) return m;
    }
    return std::nullopt;
}

namespace {

std::string setting_key(const EvalRecord& r) {
    std::string key = std::to_string(r.d) + "|" + std::to_string(r.t_len) + "|";
    if (r.forcing) key += std::to_string(*r.forcing);
    return key;
}

std::string cell_key(const EvalRecord& r) {
    return r.scenario + "|" + r.param + "|" + setting_key(r) + "|" + r.method;
}

/// Mean AUPRC per config over the given records; sentinel rows are ignored.
/// Ties and all-sentinel configs resolve deterministically by config_id.
std::string argmax_config(const std::map<std::string, std::vector<const EvalRecord*>>& by_config) {
    std::string best_id = by_config.begin()->first;  // fallback when nothing is defined
    double best_mean = -1.0;
    for (const auto& [config, rows] : by_config) {
        double sum = 0.0;
        std::size_t count = 0;
        for (const EvalRecord* r : rows) {
            if (r->auprc) {
                sum += *r->auprc;
                ++count;
            }
        }
        const double mean = count > 0 ? sum / static_cast<double>(count) : -1.0;
        if (mean > best_mean) {
            best_mean = mean;
            best_id = config;
        }
    }
    return best_id;
}

void check_coverage(const std::map<std::string, std::map<std::string, std::vector<const EvalRecord*>>>& cells) {
    // Every (method-qualified) config must appear in every cell that shares
    // its method. Cell keys end with the method name.
    std::map<std::string, std::set<std::string>> configs_by_method;
    for (const auto& [cell, by_config] : cells) {
        const std::string method = cell.substr(cell.rfind('|') + 1);
        for (const auto& [config, rows] : by_config) {
            (void)rows;
            configs_by_method[method].insert(config);
        }
    }
    for (const auto& [cell, by_config] : cells) {
        const std::string method = cell.substr(cell.rfind('|') + 1);
        for (const auto& config : configs_by_method[method]) {
            if (!by_config.count(config)) {
                throw std::runtime_error("select_hyperparams: configuration " + config +
                                         " missing from cell " + cell);
            }
        }
    }
}

}  // namespace

std::vector<EvalRecord> select_hyperparams(const std::vector<EvalRecord>& records,
                                           SelectionMode mode) {
    if (records.empty()) throw std::invalid_argument("select_hyperparams: no records");
    if (mode == SelectionMode::all_hyper_aggregate) return records;

    std::map<std::string, std::map<std::string, std::vector<const EvalRecord*>>> cells;
    for (const EvalRecord& r : records) {
        const std::string key = mode == SelectionMode::best_per_dataset
                                    ? cell_key(r)
                                    : setting_key(r) + "|" + r.method;
        cells[key][r.config_id].push_back(&r);
    }
    check_coverage(cells);

    std::vector<EvalRecord> kept;
    for (const auto& [cell, by_config] : cells) {
        (void)cell;
        const std::string best = argmax_config(by_config);
        for (const EvalRecord* r : by_config.at(best)) kept.push_back(*r);
    }
    return kept;
}

std::vector<AggregateRow> aggregate(const std::vector<EvalRecord>& records, SelectionMode mode) {
    const std::vector<EvalRecord> selected = select_hyperparams(records, mode);

    struct Accum {
        std::vector<double> auroc, auprc;
        const EvalRecord* sample = nullptr;
    };
    std::map<std::tuple<std::string, std::size_t, std::size_t, std::string, std::string>, Accum>
        groups;
    for (const EvalRecord& r : selected) {
        std::string fkey = r.forcing ? std::to_string(*r.forcing) : std::string();
        auto& acc = groups[{r.scenario, r.d, r.t_len, fkey, r.method}];
        if (!acc.sample) acc.sample = &r;
        if (r.auroc && r.auprc) {
            acc.auroc.push_back(*r.auroc);
            acc.auprc.push_back(*r.auprc);
        }
    }

    auto mean_std = [](const std::vector<double>& xs) {
        const double n = static_cast<double>(xs.size());
        double mean = 0.0;
        for (double x : xs) mean += x;
        mean /= n;
        double var = 0.0;
        for (double x : xs) var += (x - mean) * (x - mean);
        const double sd = xs.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
        return std::pair{mean * 100.0, sd * 100.0};
    };

    std::vector<AggregateRow> rows;
    for (const auto& [key, acc] : groups) {
        if (acc.auroc.empty()) continue;  // all-sentinel group: auditable in the raw CSV
        AggregateRow row;
        row.scenario = std::get<0>(key);
        row.d = std::get<1>(key);
        row.t_len = std::get<2>(key);
        row.forcing = acc.sample->forcing;
        row.method = std::get<4>(key);
        row.mode = std::string(selection_mode_name(mode));
        std::tie(row.mean_auroc, row.std_auroc) = mean_std(acc.auroc);
        std::tie(row.mean_auprc, row.std_auprc) = mean_std(acc.auprc);
        row.n = acc.auroc.size();
        rows.push_back(std::move(row));
    }
    std::sort(rows.begin(), rows.end(), [](const AggregateRow& a, const AggregateRow& b) {
        const auto ka = std::tie(a.scenario, a.d, a.t_len, a.forcing, a.method);
        const auto kb = std::tie(b.scenario, b.d, b.t_len, b.forcing, b.method);
        return ka < kb;
    });
    return rows;
}

}  // namespace tscd
