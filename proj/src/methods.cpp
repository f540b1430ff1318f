#include "tscd/methods.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <stdexcept>

#include "tscd/numerics.hpp"

namespace tscd {

namespace {

constexpr double kRidgePenalty = 1e-6;
constexpr double kSweepTol = 1e-6;
constexpr std::size_t kMaxSweeps = 10000;
constexpr std::size_t kConditionRounds = 3;  // cap on conditioning-set growth

/// Runs `body(q)` for q in [0, d), in parallel when asked. The first exception
/// (by index) is rethrown after the loop so parallel runs fail like serial ones.
template <typename Body>
void for_each_target(std::size_t d, bool parallel, Body&& body) {
    std::vector<std::exception_ptr> errors(d);
    if (parallel) {
#pragma omp parallel for schedule(dynamic)
        for (long long q = 0; q < static_cast<long long>(d); ++q) {
            try {
                body(static_cast<std::size_t>(q));
            } catch (...) {
                errors[static_cast<std::size_t>(q)] = std::current_exception();
            }
        }
    } else {
        for (std::size_t q = 0; q < d; ++q) {
            try {
                body(q);
            } catch (...) {
                errors[q] = std::current_exception();
            }
        }
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

struct CenteredDesign {
    Matrix x;                       // n x p, columns centered
    std::vector<double> col_mean;   // p
};

CenteredDesign center_columns(const Matrix& raw) {
    CenteredDesign out;
    out.x = raw;
    const std::size_t n = raw.rows(), p = raw.cols();
    out.col_mean.assign(p, 0.0);
    for (std::size_t j = 0; j < p; ++j) {
        double m = 0.0;
        for (std::size_t i = 0; i < n; ++i) m += raw(i, j);
        m /= static_cast<double>(n);
        out.col_mean[j] = m;
        for (std::size_t i = 0; i < n; ++i) out.x(i, j) -= m;
    }
    return out;
}

struct StandardizedDesign {
    Matrix cols;                   // p x n: row j = standardized column j (contiguous)
    std::vector<std::uint8_t> degenerate;  // zero-variance columns, forced to zero
};

StandardizedDesign standardize_columns(const Matrix& raw) {
    const std::size_t n = raw.rows(), p = raw.cols();
    StandardizedDesign out;
    out.cols = Matrix(p, n);
    out.degenerate.assign(p, 0);
    for (std::size_t j = 0; j < p; ++j) {
        double m = 0.0;
        for (std::size_t i = 0; i < n; ++i) m += raw(i, j);
        m /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = raw(i, j) - m;
            var += d * d;
        }
        var /= static_cast<double>(n);
        if (var <= 0.0) {
            out.degenerate[j] = 1;
            continue;  // row stays zero; the coefficient is pinned at 0
        }
        const double inv = 1.0 / std::sqrt(var);
        double* dst = out.cols.row_ptr(j);
        for (std::size_t i = 0; i < n; ++i) dst[i] = (raw(i, j) - m) * inv;
    }
    return out;
}

std::vector<double> centered_target(const Matrix& targets, std::size_t q) {
    const std::size_t n = targets.rows();
    std::vector<double> y(n);
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m += targets(i, q);
    m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = targets(i, q) - m;
    return y;
}

void scores_from_coefficients(const std::vector<double>& beta, std::size_t d,
                              std::size_t tau_max, std::size_t q, Matrix& scores) {
    for (std::size_t p = 0; p < d; ++p) {
        double best = 0.0;
        for (std::size_t l = 1; l <= tau_max; ++l) {
            best = std::max(best, std::abs(beta[LagDesign::column_of(l, p, d)]));
        }
        scores(p, q) = best;
    }
}

std::vector<std::uint8_t> threshold_edges(const Matrix& scores, double threshold) {
    const std::size_t d = scores.rows();
    std::vector<std::uint8_t> edges(d * d, 0);
    for (std::size_t p = 0; p < d; ++p)
        for (std::size_t q = 0; q < d; ++q)
            if (scores(p, q) > threshold) edges[p * d + q] = 1;
    return edges;
}

/// One coordinate-descent solve on pre-standardized columns. beta is the warm
/// start and receives the solution (or the last iterate when the sweep cap is
/// hit, in which case `converged` is false).
struct CdOutcome {
    LassoDiag diag;
    bool converged = false;
};

CdOutcome lasso_cd(const StandardizedDesign& design, const std::vector<double>& y,
                   double lambda, std::vector<double>& beta, bool want_trace) {
    const std::size_t p = design.cols.rows();
    const std::size_t n = design.cols.cols();
    const double inv_n = 1.0 / static_cast<double>(n);

    std::vector<double> residual = y;
    for (std::size_t j = 0; j < p; ++j) {
        if (beta[j] == 0.0) continue;
        const double* col = design.cols.row_ptr(j);
        for (std::size_t i = 0; i < n; ++i) residual[i] -= beta[j] * col[i];
    }

    CdOutcome outcome;
    LassoDiag& diag = outcome.diag;
    auto objective = [&]() {
        double sq = 0.0;
        for (double r : residual) sq += r * r;
        double l1 = 0.0;
        for (double b : beta) l1 += std::abs(b);
        return 0.5 * inv_n * sq + lambda * l1;
    };

    for (std::size_t sweep = 0; sweep < kMaxSweeps; ++sweep) {
        double max_change = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            if (design.degenerate[j]) continue;
            const double* col = design.cols.row_ptr(j);
            double dot = 0.0;
            for (std::size_t i = 0; i < n; ++i) dot += col[i] * residual[i];
            const double rho = beta[j] + dot * inv_n;
            const double next = soft_threshold(rho, lambda);
            const double delta = next - beta[j];
            if (delta != 0.0) {
                for (std::size_t i = 0; i < n; ++i) residual[i] -= delta * col[i];
                beta[j] = next;
            }
            max_change = std::max(max_change, std::abs(delta));
        }
        ++diag.sweeps;
        if (want_trace) diag.objective_trace.push_back(objective());
        if (max_change < kSweepTol) {
            outcome.converged = true;
            return outcome;
        }
    }
    return outcome;
}

void require_fit_room(const LagDesign& design) {
    if (design.n <= design.predictors.cols()) {
        throw std::invalid_argument("lag design: insufficient length for regression (need T > "
                                    "tau_max + d * tau_max)");
    }
}

MethodResult var_granger_impl(const TimeSeriesMatrix& x, const MethodConfig& cfg,
                              bool parallel) {
    const LagDesign design = build_lag_design(x, cfg.tau_max);
    require_fit_room(design);
    const CenteredDesign centered = center_columns(design.predictors);
    const std::size_t d = design.d;

    MethodResult out;
    out.scores = Matrix(d, d);
    out.coefficients = Matrix(design.predictors.cols(), d);
    std::vector<std::uint8_t> ridge_used(d, 0);

    for_each_target(d, parallel, [&](std::size_t q) {
        std::vector<double> y = centered_target(design.targets, q);
        std::vector<double> beta;
        try {
            beta = ols_fit(centered.x, y).coefficients;
        } catch (const RankDeficientError&) {
            // Tiny ridge keeps constant or collinear columns (e.g. from
            // discretization) from aborting the whole run.
            const std::size_t p = centered.x.cols();
            Matrix gram(p, p);
            for (std::size_t a = 0; a < p; ++a) {
                for (std::size_t b = a; b < p; ++b) {
                    double acc = 0.0;
                    for (std::size_t i = 0; i < centered.x.rows(); ++i) {
                        acc += centered.x(i, a) * centered.x(i, b);
                    }
                    gram(a, b) = acc;
                    gram(b, a) = acc;
                }
                gram(a, a) += kRidgePenalty;
            }
            std::vector<double> xty(p, 0.0);
            for (std::size_t a = 0; a < p; ++a) {
                double acc = 0.0;
                for (std::size_t i = 0; i < centered.x.rows(); ++i) {
                    acc += centered.x(i, a) * y[i];
                }
                xty[a] = acc;
            }
            beta = cholesky_solve(cholesky(gram, 0.0), xty);
            ridge_used[q] = 1;
        }
        for (std::size_t j = 0; j < beta.size(); ++j) out.coefficients(j, q) = beta[j];
        scores_from_coefficients(beta, d, cfg.tau_max, q, out.scores);
    });

    for (std::size_t q = 0; q < d; ++q) {
        if (ridge_used[q]) out.ridge_fallback_targets.push_back(q);
    }
    out.edges = threshold_edges(out.scores, cfg.threshold);
    return out;
}

std::vector<std::optional<Matrix>> lasso_path_impl(const TimeSeriesMatrix& x,
                                                   std::size_t tau_max,
                                                   const std::vector<double>& lambdas,
                                                   bool parallel, LassoDiag* diag,
                                                   Matrix* coefficients) {
    for (double l : lambdas) {
        if (!(l >= 0.0)) throw std::invalid_argument("lasso_granger: lambda must be >= 0");
    }
    const LagDesign design = build_lag_design(x, tau_max);
    require_fit_room(design);
    const StandardizedDesign std_design = standardize_columns(design.predictors);
    const std::size_t d = design.d;
    const std::size_t p = design.predictors.cols();
    if (coefficients) *coefficients = Matrix(p, d);

    // Solve large penalties first and warm-start the smaller ones.
    std::vector<std::size_t> order(lambdas.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return lambdas[a] > lambdas[b]; });

    std::vector<Matrix> scores(lambdas.size(), Matrix(d, d));
    Matrix failed(d, lambdas.size());  // per target x lambda, merged after the loop
    std::vector<LassoDiag> diags(d);

    for_each_target(d, parallel, [&](std::size_t q) {
        // Target standardized alongside the predictors, so lambda means the
        // same thing for every target and scenario; coefficients stay on the
        // fully standardized scale.
        std::vector<double> y = centered_target(design.targets, q);
        double var_y = 0.0;
        for (double v : y) var_y += v * v;
        var_y /= static_cast<double>(y.size());
        if (var_y <= 0.0) return;  // constant target: every coefficient stays zero
        const double inv_sd = 1.0 / std::sqrt(var_y);
        for (double& v : y) v *= inv_sd;
        std::vector<double> beta(p, 0.0);
        for (std::size_t idx : order) {
            CdOutcome outcome = lasso_cd(std_design, y, lambdas[idx], beta,
                                         diag != nullptr && lambdas.size() == 1);
            if (!outcome.converged) failed(q, idx) = 1.0;
            diags[q].sweeps += outcome.diag.sweeps;
            if (diag && lambdas.size() == 1) {
                diags[q].objective_trace = std::move(outcome.diag.objective_trace);
            }
            scores_from_coefficients(beta, d, tau_max, q, scores[idx]);
        }
        if (coefficients) {
            for (std::size_t j = 0; j < p; ++j) (*coefficients)(j, q) = beta[j];
        }
    });

    if (diag) {
        *diag = LassoDiag{};
        for (const auto& dq : diags) {
            diag->sweeps = std::max(diag->sweeps, dq.sweeps);
            if (diag->objective_trace.size() < dq.objective_trace.size()) {
                diag->objective_trace = dq.objective_trace;
            }
        }
    }
    std::vector<std::optional<Matrix>> out(lambdas.size());
    for (std::size_t idx = 0; idx < lambdas.size(); ++idx) {
        bool ok = true;
        for (std::size_t q = 0; q < d; ++q) {
            if (failed(q, idx) != 0.0) ok = false;
        }
        if (ok) out[idx] = std::move(scores[idx]);
    }
    return out;
}

MethodResult lasso_impl(const TimeSeriesMatrix& x, const MethodConfig& cfg, bool parallel,
                        LassoDiag* diag) {
    MethodResult out;
    LassoDiag local;
    auto path = lasso_path_impl(x, cfg.tau_max, {cfg.lambda}, parallel, diag ? diag : &local,
                                &out.coefficients);
    if (!path[0]) {
        throw std::runtime_error(
            "lasso_granger: coordinate descent did not converge within " +
            std::to_string(kMaxSweeps) + " sweeps (lambda=" + std::to_string(cfg.lambda) +
            ", sweeps used=" + std::to_string((diag ? diag : &local)->sweeps) + ")");
    }
    out.scores = std::move(*path[0]);
    out.edges = threshold_edges(out.scores, cfg.threshold);
    return out;
}

// ---------------------------------------------------------------------------
// PCMCI

struct Candidate {
    std::size_t var = 0;
    std::size_t lag = 0;  // in [1, tau_max]
};

/// Design with lags up to 2*tau_max so second-stage conditioning sets (parents
/// of the source shifted by the link lag) stay inside the sample. Stored
/// series-major: row (lag * d + var) holds the whole lagged series.
struct ExtendedDesign {
    std::size_t n = 0;
    std::size_t d = 0;
    std::size_t max_lag = 0;
    Matrix series;  // (max_lag + 1) * d rows, n columns

    std::span<const double> col(std::size_t lag, std::size_t var) const {
        return {series.row_ptr(lag * d + var), n};
    }
};

ExtendedDesign build_extended_design(const TimeSeriesMatrix& x, std::size_t max_lag) {
    if (x.missing_mask) {
        for (std::uint8_t m : *x.missing_mask) {
            if (m) throw std::invalid_argument("pcmci: input has missing entries");
        }
    }
    if (x.length <= max_lag + 8) throw std::invalid_argument("pcmci: series too short");
    ExtendedDesign ext;
    ext.n = x.length - max_lag;
    ext.d = x.width;
    ext.max_lag = max_lag;
    ext.series = Matrix((max_lag + 1) * x.width, ext.n);
    for (std::size_t lag = 0; lag <= max_lag; ++lag) {
        for (std::size_t j = 0; j < x.width; ++j) {
            double* dst = ext.series.row_ptr(lag * x.width + j);
            for (std::size_t r = 0; r < ext.n; ++r) dst[r] = x.at(r + max_lag - lag, j);
        }
    }
    return ext;
}

Matrix gather_conditioners(const ExtendedDesign& ext,
                           const std::vector<std::pair<std::size_t, std::size_t>>& cols) {
    Matrix z(ext.n, cols.size());
    for (std::size_t c = 0; c < cols.size(); ++c) {
        const auto series = ext.col(cols[c].second, cols[c].first);
        for (std::size_t i = 0; i < ext.n; ++i) z(i, c) = series[i];
    }
    return z;
}

struct ParentSet {
    std::vector<Candidate> parents;
};

/// Stage 1: iterated pruning. Round k tests every surviving candidate against
/// its k strongest surviving peers and drops it when the test accepts
/// independence at alpha.
ParentSet select_conditions(const ExtendedDesign& ext, std::size_t q, std::size_t tau_max,
                            double alpha) {
    const std::size_t d = ext.d;
    std::vector<Candidate> cands;
    cands.reserve(d * tau_max);
    for (std::size_t lag = 1; lag <= tau_max; ++lag) {
        for (std::size_t p = 0; p < d; ++p) cands.push_back({p, lag});
    }
    std::vector<std::uint8_t> alive(cands.size(), 1);
    std::vector<double> strength(cands.size(), 0.0);
    const auto y = ext.col(0, q);

    for (std::size_t round = 0; round <= kConditionRounds; ++round) {
        bool removed = false;
        for (std::size_t c = 0; c < cands.size(); ++c) {
            if (!alive[c]) continue;
            // k strongest surviving peers by current |r| (deterministic ties).
            std::vector<std::size_t> peers;
            for (std::size_t o = 0; o < cands.size(); ++o) {
                if (o != c && alive[o]) peers.push_back(o);
            }
            std::sort(peers.begin(), peers.end(), [&](std::size_t a, std::size_t b) {
                if (strength[a] != strength[b]) return strength[a] > strength[b];
                return a < b;
            });
            if (peers.size() > round) peers.resize(round);
            std::vector<std::pair<std::size_t, std::size_t>> zcols;
            for (std::size_t o : peers) zcols.emplace_back(cands[o].var, cands[o].lag);
            const Matrix z = gather_conditioners(ext, zcols);
            const auto pc = partial_correlation(ext.col(cands[c].lag, cands[c].var), y, z);
            strength[c] = std::abs(pc.r);
            if (pc.p_value > alpha) {
                alive[c] = 0;
                removed = true;
            }
        }
        std::size_t survivors = 0;
        for (auto a : alive) survivors += a;
        if (!removed || round + 1 > survivors) break;
    }

    ParentSet out;
    // Strongest first so downstream conditioning sets are deterministic.
    std::vector<std::size_t> idx;
    for (std::size_t c = 0; c < cands.size(); ++c) {
        if (alive[c]) idx.push_back(c);
    }
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (strength[a] != strength[b]) return strength[a] > strength[b];
        return a < b;
    });
    for (std::size_t c : idx) out.parents.push_back(cands[c]);
    return out;
}

MethodResult pcmci_impl(const TimeSeriesMatrix& x, const MethodConfig& cfg, bool parallel) {
    if (!(cfg.alpha_sig > 0.0 && cfg.alpha_sig < 1.0)) {
        throw std::invalid_argument("pcmci: alpha_sig must lie in (0, 1)");
    }
    const ExtendedDesign ext = build_extended_design(x, 2 * cfg.tau_max);
    const std::size_t d = ext.d;

    std::vector<ParentSet> parents(d);
    for_each_target(d, parallel, [&](std::size_t q) {
        parents[q] = select_conditions(ext, q, cfg.tau_max, cfg.alpha_sig);
    });

    std::vector<Matrix> window(cfg.tau_max, Matrix(d, d));
    MethodResult out;
    out.edges.assign(d * d, 0);
    out.window_edges.assign(cfg.tau_max * d * d, 0);

    for_each_target(d, parallel, [&](std::size_t q) {
        const auto y = ext.col(0, q);
        for (const Candidate& cand : parents[q].parents) {
            // Parents of the target (minus the link itself) plus the parents
            // of the source shifted by the link lag.
            std::vector<std::pair<std::size_t, std::size_t>> zcols;
            for (const Candidate& pq : parents[q].parents) {
                if (pq.var == cand.var && pq.lag == cand.lag) continue;
                zcols.emplace_back(pq.var, pq.lag);
            }
            for (const Candidate& pp : parents[cand.var].parents) {
                zcols.emplace_back(pp.var, pp.lag + cand.lag);
            }
            std::sort(zcols.begin(), zcols.end());
            zcols.erase(std::unique(zcols.begin(), zcols.end()), zcols.end());
            std::erase(zcols, std::make_pair(cand.var, cand.lag));
            std::erase(zcols, std::make_pair(q, std::size_t{0}));

            const Matrix z = gather_conditioners(ext, zcols);
            const auto pc = partial_correlation(ext.col(cand.lag, cand.var), y, z);
            window[cand.lag - 1](cand.var, q) = std::abs(pc.r);
            if (pc.p_value <= cfg.alpha_sig) {
                out.edges[cand.var * d + q] = 1;
                out.window_edges[(cand.lag - 1) * d * d + cand.var * d + q] = 1;
            }
        }
    });

    out.scores = collapse_window(window);
    out.window_scores = std::move(window);
    return out;
}

}  // namespace

std::string_view method_kind_name(MethodKind kind) {
    switch (kind) {
        case MethodKind::var: return "var";
        case MethodKind::lgc: return "lgc";
        case MethodKind::pcmci: return "pcmci";
    }
    return "?";
}

std::optional<MethodKind> parse_method_kind(std::string_view name) {
    for (MethodKind k : {MethodKind::var, MethodKind::lgc, MethodKind::pcmci}) {
        if (method_kind_name(k) == name) return k;
    }
    return std::nullopt;
}

LagDesign build_lag_design(const TimeSeriesMatrix& x, std::size_t tau_max) {
    if (tau_max < 1) throw std::invalid_argument("build_lag_design: tau_max must be >= 1");
    if (x.missing_mask) {
        for (std::uint8_t m : *x.missing_mask) {
            if (m) throw std::invalid_argument("build_lag_design: input has missing entries");
        }
    }
    if (x.length <= tau_max) {
        throw std::invalid_argument("build_lag_design: insufficient length");
    }
    LagDesign design;
    design.n = x.length - tau_max;
    design.d = x.width;
    design.tau_max = tau_max;
    design.predictors = Matrix(design.n, x.width * tau_max);
    design.targets = Matrix(design.n, x.width);
    for (std::size_t r = 0; r < design.n; ++r) {
        const std::size_t t = r + tau_max;
        for (std::size_t lag = 1; lag <= tau_max; ++lag) {
            for (std::size_t j = 0; j < x.width; ++j) {
                design.predictors(r, LagDesign::column_of(lag, j, x.width)) = x.at(t - lag, j);
            }
        }
        for (std::size_t j = 0; j < x.width; ++j) design.targets(r, j) = x.at(t, j);
    }
    return design;
}

Matrix collapse_window(const std::vector<Matrix>& window_scores) {
    if (window_scores.empty()) return Matrix();
    Matrix out = window_scores.front();
    for (std::size_t l = 1; l < window_scores.size(); ++l) {
        const Matrix& layer = window_scores[l];
        for (std::size_t i = 0; i < out.raw().size(); ++i) {
            out.raw()[i] = std::max(out.raw()[i], layer.raw()[i]);
        }
    }
    return out;
}

MethodResult var_granger(const TimeSeriesMatrix& x, const MethodConfig& cfg) {
    return var_granger_impl(x, cfg, true);
}

MethodResult var_granger_serial(const TimeSeriesMatrix& x, const MethodConfig& cfg) {
    return var_granger_impl(x, cfg, false);
}

MethodResult lasso_granger(const TimeSeriesMatrix& x, const MethodConfig& cfg, LassoDiag* diag) {
    return lasso_impl(x, cfg, true, diag);
}

MethodResult lasso_granger_serial(const TimeSeriesMatrix& x, const MethodConfig& cfg,
                                  LassoDiag* diag) {
    return lasso_impl(x, cfg, false, diag);
}

std::vector<std::optional<Matrix>> lasso_granger_path(const TimeSeriesMatrix& x,
                                                      std::size_t tau_max,
                                                      const std::vector<double>& lambdas) {
    return lasso_path_impl(x, tau_max, lambdas, true, nullptr, nullptr);
}

MethodResult pcmci(const TimeSeriesMatrix& x, const MethodConfig& cfg) {
    return pcmci_impl(x, cfg, true);
}

MethodResult pcmci_serial(const TimeSeriesMatrix& x, const MethodConfig& cfg) {
    return pcmci_impl(x, cfg, false);
}

}  // namespace tscd
