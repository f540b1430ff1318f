#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "tscd/generators.hpp"
#include "tscd/matrix.hpp"
#include "tscd/rng.hpp"
#include "tscd/timeseries.hpp"

namespace tscd {

enum class ScenarioKind {
    vanilla,
    measurement_error,
    nonstationary,
    confounders,
    standardized,
    mixed,
    minmax,
    missing,
    trend_season,
    tv_coefficients,
    exponential_noise,
};

std::string_view scenario_kind_name(ScenarioKind kind);
std::optional<ScenarioKind> parse_scenario_kind(std::string_view name);

enum class BaseModel { linear, nonlinear };

/// Vanilla data-generating process parameters shared by every scenario.
struct BaseSpec {
    BaseModel model = BaseModel::linear;
    std::size_t d = 10;
    std::size_t t_len = 1000;
    // linear
    std::size_t tau_max = 3;
    std::size_t parents_per_var = 3;
    double coeff_lo = 0.1;
    double coeff_hi = 0.5;
    double spectral_radius_cap = 0.95;
    std::size_t var_burn_in = 200;
    double noise_scale = 0.1;
    // nonlinear
    double forcing = 10.0;
    double dt_sample = 0.05;
    std::size_t substeps = 5;
    std::size_t lorenz_burn_in = 1000;
    double observation_noise = 0.1;

    void validate() const;
};

/// One dataset request: the vanilla base plus exactly one violation.
struct ScenarioSpec {
    ScenarioKind kind = ScenarioKind::vanilla;
    BaseSpec base;
    std::uint64_t seed = 0;

    double alpha = 1.2;                    // measurement error variance ratio
    double gp_m = 1.0, gp_nu = 1.0;        // nonstationary noise-scale GP
    double gp_ell = 20.0;
    double zeta = 0.5, strength = 0.5;     // confounders
    double beta = 0.5;                     // fraction of discretized variables
    double gamma = 0.4;                    // missing probability
    double rho = 0.01, eta = 0.5;          // trend and seasonality
    std::size_t period = 12;
    double sigma_tv = 0.3;                 // coefficient nonstationarity

    void validate() const;
};

TimeSeriesMatrix add_measurement_error(const TimeSeriesMatrix& x, double alpha, Rng& rng);

/// One independent GP scale path per variable (rows), each from a derived seed.
Matrix make_nonstationary_scales(std::size_t d, std::size_t t_len, double m, double nu,
                                 double ell, Rng& rng);

TimeSeriesMatrix zscore(const TimeSeriesMatrix& x);
TimeSeriesMatrix minmax(const TimeSeriesMatrix& x);
TimeSeriesMatrix discretize_mixed(const TimeSeriesMatrix& x, double beta, Rng& rng);
TimeSeriesMatrix apply_mcar(const TimeSeriesMatrix& x, double gamma, Rng& rng);
TimeSeriesMatrix zero_order_hold(const TimeSeriesMatrix& x);
TimeSeriesMatrix add_trend_season(const TimeSeriesMatrix& x, double rho, double eta,
                                  std::size_t period);

/// Linear confounding: d latents running their own VAR block, wired into
/// randomly chosen observed pairs through lagged links. The augmented system
/// is block triangular (latents never listen to observed variables), so the
/// stability cap carries over. Ground truth keeps only observed edges.
struct VarConfounderSetup {
    VarSystem augmented;
    std::size_t observed = 0;
    std::size_t assignments = 0;  // number of confounded pairs
    CausalGraph observed_truth;
};
VarConfounderSetup attach_confounders(const VarSystem& sys, double zeta, double strength,
                                      Rng& rng);

/// Nonlinear confounding: a second Lorenz-96 ring of d latents added
/// contemporaneously onto the recorded values of confounded pair members.
struct Lorenz96ConfounderLink {
    std::size_t latent = 0;
    std::size_t target = 0;
    double weight = 0.0;
};
struct Lorenz96ConfounderSetup {
    Lorenz96Spec observed;
    Lorenz96Spec latent;
    std::vector<Lorenz96ConfounderLink> links;
    std::size_t assignments = 0;
    CausalGraph observed_truth;
};
Lorenz96ConfounderSetup attach_confounders(const Lorenz96Spec& spec, double zeta,
                                           double strength, Rng& rng);

struct Dataset {
    TimeSeriesMatrix data;
    CausalGraph truth;  // always the vanilla graph of the same seed
};

/// Generates the vanilla base for the given seed and applies the requested
/// violation. Pure function of its argument.
Dataset build_dataset(const ScenarioSpec& spec);

}  // namespace tscd
