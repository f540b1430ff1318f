#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "tscd/matrix.hpp"
#include "tscd/timeseries.hpp"

namespace tscd {

/// Regression form of the lagged model: row r predicts time t = r + tau_max
/// from the canonical lag-major predictor order (lag 1 var 0, lag 1 var 1,
/// ..., lag tau_max var d-1).
struct LagDesign {
    std::size_t n = 0;        // T - tau_max rows
    std::size_t d = 0;
    std::size_t tau_max = 0;
    Matrix predictors;        // n x (d * tau_max), raw values
    Matrix targets;           // n x d

    static std::size_t column_of(std::size_t lag, std::size_t var, std::size_t d) {
        return (lag - 1) * d + var;
    }
};

LagDesign build_lag_design(const TimeSeriesMatrix& x, std::size_t tau_max);

enum class MethodKind { var, lgc, pcmci };

std::string_view method_kind_name(MethodKind kind);
std::optional<MethodKind> parse_method_kind(std::string_view name);

struct MethodConfig {
    MethodKind method = MethodKind::var;
    std::size_t tau_max = 3;
    double threshold = 0.0;   // var, lgc: binary-graph cutoff on scores
    double lambda = 0.01;     // lgc penalty on the standardized design
    double alpha_sig = 0.05;  // pcmci significance level
};

struct MethodResult {
    Matrix scores;                   // d x d, [p][q] = confidence p -> q
    std::vector<std::uint8_t> edges;  // d x d binary summary, [p*d+q]
    Matrix coefficients;             // var/lgc: p x d fitted weights (lag-major rows)
    std::vector<std::size_t> ridge_fallback_targets;  // var diagnostics
    // pcmci only: per-lag |MCI r| layers (lag 1 first) and per-link rejections.
    std::vector<Matrix> window_scores;
    std::vector<std::uint8_t> window_edges;  // [(lag-1) * d * d + p * d + q]
};

/// Entrywise max over the lag axis.
Matrix collapse_window(const std::vector<Matrix>& window_scores);

/// Per-target OLS on the raw lag design (columns centered, absorbing the
/// intercept); score is the largest absolute lag coefficient. Rank-deficient
/// targets fall back to a tiny ridge and are reported in the diagnostics.
MethodResult var_granger(const TimeSeriesMatrix& x, const MethodConfig& cfg);
MethodResult var_granger_serial(const TimeSeriesMatrix& x, const MethodConfig& cfg);

struct LassoDiag {
    std::size_t sweeps = 0;
    std::vector<double> objective_trace;  // objective after every sweep
};

/// Coordinate-descent lasso per target on the column-standardized design.
MethodResult lasso_granger(const TimeSeriesMatrix& x, const MethodConfig& cfg,
                           LassoDiag* diag = nullptr);
MethodResult lasso_granger_serial(const TimeSeriesMatrix& x, const MethodConfig& cfg,
                                  LassoDiag* diag = nullptr);

/// Score matrices for several penalties at once, warm-starting along the
/// descending-lambda path. Results are in the order of `lambdas`; an entry is
/// empty when coordinate descent hit the sweep cap for that penalty (any
/// target), so callers can keep the converged penalties.
std::vector<std::optional<Matrix>> lasso_granger_path(const TimeSeriesMatrix& x,
                                                      std::size_t tau_max,
                                                      const std::vector<double>& lambdas);

/// Two-stage constraint-based search: per-target condition selection by
/// iterated partial-correlation pruning, then momentary conditional
/// independence tests conditioning on the selected parents of both endpoints.
MethodResult pcmci(const TimeSeriesMatrix& x, const MethodConfig& cfg);
MethodResult pcmci_serial(const TimeSeriesMatrix& x, const MethodConfig& cfg);

}  // namespace tscd
