#include "tscd/misspec.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tscd/numerics.hpp"

namespace tscd {

namespace {

constexpr double kPi = 3.14159265358979323846;

void require_no_missing(const TimeSeriesMatrix& x, const char* op) {
    if (!x.missing_mask) return;
    for (std::uint8_t m : *x.missing_mask) {
        if (m) throw std::invalid_argument(std::string(op) + ": input has missing entries");
    }
}

struct ColumnStats {
    double mean = 0.0;
    double var = 0.0;  // population variance
};

ColumnStats column_stats(const TimeSeriesMatrix& x, std::size_t col) {
    ColumnStats s;
    for (std::size_t t = 0; t < x.length; ++t) s.mean += x.at(t, col);
    s.mean /= static_cast<double>(x.length);
    for (std::size_t t = 0; t < x.length; ++t) {
        const double d = x.at(t, col) - s.mean;
        s.var += d * d;
    }
    s.var /= static_cast<double>(x.length);
    return s;
}

}  // namespace

std::string_view scenario_kind_name(ScenarioKind kind) {
    switch (kind) {
        case ScenarioKind::vanilla: return "vanilla";
        case ScenarioKind::measurement_error: return "measurement_error";
        case ScenarioKind::nonstationary: return "nonstationary";
        case ScenarioKind::confounders: return "confounders";
        case ScenarioKind::standardized: return "standardized";
        case ScenarioKind::mixed: return "mixed";
        case ScenarioKind::minmax: return "minmax";
        case ScenarioKind::missing: return "missing";
        case ScenarioKind::trend_season: return "trend_season";
        case ScenarioKind::tv_coefficients: return "tv_coefficients";
        case ScenarioKind::exponential_noise: return "exponential_noise";
    }
    return "?";
}

std::optional<ScenarioKind> parse_scenario_kind(std::string_view name) {
    for (ScenarioKind k :
         {ScenarioKind::vanilla, ScenarioKind::measurement_error, ScenarioKind::nonstationary,
          ScenarioKind::confounders, ScenarioKind::standardized, ScenarioKind::mixed,
          ScenarioKind::minmax, ScenarioKind::missing, ScenarioKind::trend_season,
          ScenarioKind::tv_coefficients, ScenarioKind::exponential_noise}) {
        if (scenario_kind_name(k) == name) return k;
    }
    return std::nullopt;
}

void BaseSpec::validate() const {
    if (d < 2) throw std::invalid_argument("BaseSpec: need d >= 2");
    if (model == BaseModel::nonlinear && d < 4) {
        throw std::invalid_argument("BaseSpec: nonlinear model needs d >= 4");
    }
    if (t_len < tau_max + 1) throw std::invalid_argument("BaseSpec: T too small");
    if (!(noise_scale > 0.0)) throw std::invalid_argument("BaseSpec: noise_scale must be > 0");
    if (!(observation_noise > 0.0)) {
        throw std::invalid_argument("BaseSpec: observation_noise must be > 0");
    }
    if (parents_per_var > d) throw std::invalid_argument("BaseSpec: parents_per_var > d");
}

void ScenarioSpec::validate() const {
    base.validate();
    if (!(alpha >= 0.0)) throw std::invalid_argument("ScenarioSpec: alpha must be >= 0");
    if (!(zeta >= 0.0 && zeta <= 1.0)) throw std::invalid_argument("ScenarioSpec: zeta in [0,1]");
    if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("ScenarioSpec: beta in [0,1]");
    if (!(gamma >= 0.0 && gamma < 1.0)) {
        throw std::invalid_argument("ScenarioSpec: gamma in [0,1) (gamma = 1 leaves nothing observable)");
    }
    if (period < 2) throw std::invalid_argument("ScenarioSpec: period must be >= 2");
    if (!std::isfinite(rho) || !std::isfinite(eta)) {
        throw std::invalid_argument("ScenarioSpec: trend parameters must be finite");
    }
    if (!(gp_ell > 0.0)) throw std::invalid_argument("ScenarioSpec: kernel width must be > 0");
    if (!(gp_nu >= 0.0)) throw std::invalid_argument("ScenarioSpec: gp_nu must be >= 0");
    if (kind == ScenarioKind::tv_coefficients && base.model != BaseModel::linear) {
        throw std::invalid_argument("ScenarioSpec: tv_coefficients applies to the linear model");
    }
}

TimeSeriesMatrix add_measurement_error(const TimeSeriesMatrix& x, double alpha, Rng& rng) {
    if (!(alpha >= 0.0)) throw std::invalid_argument("add_measurement_error: alpha must be >= 0");
    require_no_missing(x, "add_measurement_error");
    if (alpha == 0.0) return x;
    TimeSeriesMatrix out = x;
    for (std::size_t i = 0; i < x.width; ++i) {
        const ColumnStats s = column_stats(x, i);
        if (s.var <= 0.0) {
            throw std::runtime_error("add_measurement_error: degenerate column " +
                                     std::to_string(i));
        }
        const double sigma = std::sqrt(alpha * s.var);
        for (std::size_t t = 0; t < x.length; ++t) out.at(t, i) += sigma * rng.normal();
    }
    return out;
}

Matrix make_nonstationary_scales(std::size_t d, std::size_t t_len, double m, double nu,
                                 double ell, Rng& rng) {
    GpSpec spec{m, nu, ell, t_len};
    GpSampler sampler(spec);
    const std::uint64_t base = rng.next_u64();
    Matrix scales(d, t_len);
    for (std::size_t i = 0; i < d; ++i) {
        Rng row_rng(derive_seed(base, static_cast<std::uint64_t>(i)));
        const auto path = sampler.sample_scales(row_rng);
        for (std::size_t t = 0; t < t_len; ++t) scales(i, t) = path[t];
    }
    return scales;
}

TimeSeriesMatrix zscore(const TimeSeriesMatrix& x) {
    require_no_missing(x, "zscore");
    TimeSeriesMatrix out = x;
    for (std::size_t i = 0; i < x.width; ++i) {
        const ColumnStats s = column_stats(x, i);
        if (s.var <= 0.0) throw std::runtime_error("zscore: constant column " + std::to_string(i));
        const double sd = std::sqrt(s.var);
        for (std::size_t t = 0; t < x.length; ++t) out.at(t, i) = (x.at(t, i) - s.mean) / sd;
    }
    return out;
}

TimeSeriesMatrix minmax(const TimeSeriesMatrix& x) {
    require_no_missing(x, "minmax");
    TimeSeriesMatrix out = x;
    for (std::size_t i = 0; i < x.width; ++i) {
        double lo = x.at(0, i), hi = x.at(0, i);
        for (std::size_t t = 1; t < x.length; ++t) {
            lo = std::min(lo, x.at(t, i));
            hi = std::max(hi, x.at(t, i));
        }
        if (!(hi > lo)) throw std::runtime_error("minmax: constant column " + std::to_string(i));
        const double range = hi - lo;
        for (std::size_t t = 0; t < x.length; ++t) out.at(t, i) = (x.at(t, i) - lo) / range;
    }
    return out;
}

TimeSeriesMatrix discretize_mixed(const TimeSeriesMatrix& x, double beta, Rng& rng) {
    if (!(beta >= 0.0 && beta <= 1.0)) {
        throw std::invalid_argument("discretize_mixed: beta must lie in [0,1]");
    }
    TimeSeriesMatrix out = minmax(x);
    const std::size_t count =
        static_cast<std::size_t>(std::floor(static_cast<double>(x.width) * beta + 1e-9));
    if (count == 0) return out;
    // Partial Fisher-Yates draw of `count` distinct columns.
    std::vector<std::size_t> cols(x.width);
    for (std::size_t i = 0; i < x.width; ++i) cols[i] = i;
    for (std::size_t pick = 0; pick < count; ++pick) {
        const std::size_t idx = pick + rng.uniform_index(x.width - pick);
        std::swap(cols[pick], cols[idx]);
    }
    for (std::size_t pick = 0; pick < count; ++pick) {
        const std::size_t i = cols[pick];
        for (std::size_t t = 0; t < x.length; ++t) {
            out.at(t, i) = out.at(t, i) > 0.5 ? 1.0 : 0.0;
        }
    }
    return out;
}

TimeSeriesMatrix apply_mcar(const TimeSeriesMatrix& x, double gamma, Rng& rng) {
    if (!(gamma >= 0.0 && gamma < 1.0)) {
        throw std::invalid_argument("apply_mcar: gamma must lie in [0,1)");
    }
    TimeSeriesMatrix out = x;
    out.missing_mask.emplace(x.length * x.width, 0);
    for (std::size_t c = 0; c < x.length * x.width; ++c) {
        if (rng.uniform() < gamma) (*out.missing_mask)[c] = 1;
    }
    return out;
}

TimeSeriesMatrix zero_order_hold(const TimeSeriesMatrix& x) {
    TimeSeriesMatrix out = x;
    if (!x.missing_mask) return out;
    for (std::size_t i = 0; i < x.width; ++i) {
        std::size_t first_obs = x.length;
        for (std::size_t t = 0; t < x.length; ++t) {
            if (!x.is_missing(t, i)) {
                first_obs = t;
                break;
            }
        }
        if (first_obs == x.length) {
            throw std::runtime_error("zero_order_hold: column " + std::to_string(i) +
                                     " is fully missing");
        }
        // Backward fill before the first observation, forward fill after.
        double held = x.at(first_obs, i);
        for (std::size_t t = 0; t < x.length; ++t) {
            if (x.is_missing(t, i)) {
                out.at(t, i) = held;
            } else {
                held = x.at(t, i);
            }
        }
    }
    out.missing_mask.reset();
    return out;
}

TimeSeriesMatrix add_trend_season(const TimeSeriesMatrix& x, double rho, double eta,
                                  std::size_t period) {
    if (period < 2) throw std::invalid_argument("add_trend_season: period must be >= 2");
    TimeSeriesMatrix out = x;
    const double d = static_cast<double>(x.width);
    for (std::size_t i = 0; i < x.width; ++i) {
        const double phase = 2.0 * kPi * static_cast<double>(i) / d;
        for (std::size_t t = 0; t < x.length; ++t) {
            const double tt = static_cast<double>(t);
            const double trend = rho * tt * static_cast<double>(i) / 2.0;
            const double season = eta * std::sin(2.0 * kPi * tt / period + phase) +
                                  0.5 * eta * std::cos(4.0 * kPi * tt / period + phase);
            out.at(t, i) += trend + season;
        }
    }
    return out;
}

VarConfounderSetup attach_confounders(const VarSystem& sys, double zeta, double strength,
                                      Rng& rng) {
    if (!(zeta >= 0.0 && zeta <= 1.0)) {
        throw std::invalid_argument("attach_confounders: zeta must lie in [0,1]");
    }
    const std::size_t d = sys.d;
    const std::size_t tau = sys.tau_max;

    // Pair assignments first, so the latent-block draws below do not shift
    // which pairs get confounded as zeta varies.
    struct Link {
        std::size_t latent, target, lag;
        double weight;
    };
    std::vector<Link> links;
    std::size_t assignments = 0;
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i + 1; j < d; ++j) {
            if (rng.uniform() < zeta) {
                ++assignments;
                const std::size_t latent = rng.uniform_index(d);
                for (std::size_t member : {i, j}) {
                    links.push_back({latent, member, 1 + rng.uniform_index(tau),
                                     rng.sign() * strength});
                }
            }
        }
    }

    VarConfounderSetup setup;
    setup.observed = d;
    setup.assignments = assignments;
    setup.observed_truth = var_ground_truth(sys);
    if (links.empty()) {
        setup.augmented = sys;
        return setup;
    }

    // Latents follow their own VAR process with the same sparsity scheme.
    VarSystem latents = sample_var_system(d, tau, std::min<std::size_t>(3, d), 0.1, 0.5,
                                          sys.noise.front(), rng, sys.spectral_radius_cap);

    VarSystem aug;
    aug.d = 2 * d;
    aug.tau_max = tau;
    aug.spectral_radius_cap = sys.spectral_radius_cap;
    aug.coeffs.assign(tau, Matrix(2 * d, 2 * d));
    for (std::size_t l = 0; l < tau; ++l) {
        for (std::size_t q = 0; q < d; ++q)
            for (std::size_t p = 0; p < d; ++p) {
                aug.coeffs[l](q, p) = sys.coeffs[l](q, p);
                aug.coeffs[l](d + q, d + p) = latents.coeffs[l](q, p);
            }
    }
    for (const Link& link : links) {
        aug.coeffs[link.lag - 1](link.target, d + link.latent) += link.weight;
    }
    aug.noise = sys.noise;
    aug.noise.insert(aug.noise.end(), latents.noise.begin(), latents.noise.end());
    setup.augmented = std::move(aug);
    return setup;
}

Lorenz96ConfounderSetup attach_confounders(const Lorenz96Spec& spec, double zeta,
                                           double strength, Rng& rng) {
    if (!(zeta >= 0.0 && zeta <= 1.0)) {
        throw std::invalid_argument("attach_confounders: zeta must lie in [0,1]");
    }
    const std::size_t d = spec.d;
    Lorenz96ConfounderSetup setup;
    setup.observed = spec;
    setup.latent = spec;
    setup.observed_truth = lorenz96_ground_truth(d);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i + 1; j < d; ++j) {
            if (rng.uniform() < zeta) {
                ++setup.assignments;
                const std::size_t latent = rng.uniform_index(d);
                for (std::size_t member : {i, j}) {
                    setup.links.push_back({latent, member, rng.sign() * strength});
                }
            }
        }
    }
    return setup;
}

Dataset build_dataset(const ScenarioSpec& spec) {
    spec.validate();
    const BaseSpec& base = spec.base;
    Rng sys_rng(derive_seed(spec.seed, "system"));
    Rng sim_rng(derive_seed(spec.seed, "sim"));
    Rng scen_rng(derive_seed(spec.seed, "scenario"));

    const NoiseKind noise_kind = spec.kind == ScenarioKind::exponential_noise
                                     ? NoiseKind::exponential
                                     : NoiseKind::gaussian;

    Dataset out;
    if (base.model == BaseModel::linear) {
        const NoiseSpec noise{noise_kind, base.noise_scale};
        VarSystem sys = sample_var_system(base.d, base.tau_max, base.parents_per_var,
                                          base.coeff_lo, base.coeff_hi, noise, sys_rng,
                                          base.spectral_radius_cap);
        out.truth = var_ground_truth(sys);

        VarSimOptions opts;
        opts.burn_in = base.var_burn_in;

        Matrix scales;
        std::vector<std::vector<Matrix>> coeff_path;
        if (spec.kind == ScenarioKind::nonstationary) {
            scales = make_nonstationary_scales(base.d, base.t_len, spec.gp_m, spec.gp_nu,
                                               spec.gp_ell, scen_rng);
            opts.scale_path = &scales;
        } else if (spec.kind == ScenarioKind::tv_coefficients) {
            // Each nonzero entry a becomes a * (1 + sigma_tv * g_t) with g an
            // independent zero-mean GP path (unit amplitude, width 50 steps).
            GpSampler sampler(GpSpec{0.0, 1.0, 50.0, base.t_len});
            coeff_path.assign(base.t_len, sys.coeffs);
            for (std::size_t l = 0; l < base.tau_max; ++l) {
                for (std::size_t q = 0; q < base.d; ++q) {
                    for (std::size_t p = 0; p < base.d; ++p) {
                        const double a = sys.coeffs[l](q, p);
                        if (a == 0.0) continue;
                        const auto g = sampler.sample_log(scen_rng);
                        for (std::size_t t = 0; t < base.t_len; ++t) {
                            coeff_path[t][l](q, p) = a * (1.0 + spec.sigma_tv * g[t]);
                        }
                    }
                }
            }
            opts.coeff_path = &coeff_path;
        }

        if (spec.kind == ScenarioKind::confounders) {
            VarConfounderSetup setup = attach_confounders(sys, spec.zeta, spec.strength, scen_rng);
            TimeSeriesMatrix full = simulate_var(setup.augmented, base.t_len, sim_rng, opts);
            out.data = TimeSeriesMatrix(base.t_len, base.d);
            for (std::size_t t = 0; t < base.t_len; ++t)
                for (std::size_t i = 0; i < base.d; ++i) out.data.at(t, i) = full.at(t, i);
            out.truth = setup.observed_truth;
            return out;
        }
        out.data = simulate_var(sys, base.t_len, sim_rng, opts);
    } else {
        Lorenz96Spec lspec;
        lspec.d = base.d;
        lspec.forcing = base.forcing;
        lspec.dt_sample = base.dt_sample;
        lspec.substeps = base.substeps;
        lspec.burn_in = base.lorenz_burn_in;
        lspec.noise = NoiseSpec{noise_kind, base.observation_noise};
        out.truth = lorenz96_ground_truth(base.d);

        Lorenz96SimOptions opts;
        Matrix scales;
        if (spec.kind == ScenarioKind::nonstationary) {
            scales = make_nonstationary_scales(base.d, base.t_len, spec.gp_m, spec.gp_nu,
                                               spec.gp_ell, scen_rng);
            opts.scale_path = &scales;
        }

        if (spec.kind == ScenarioKind::confounders) {
            Lorenz96ConfounderSetup setup =
                attach_confounders(lspec, spec.zeta, spec.strength, scen_rng);
            out.data = simulate_lorenz96(setup.observed, base.t_len, sim_rng, opts);
            if (!setup.links.empty()) {
                Rng latent_rng(derive_seed(spec.seed, "latent"));
                TimeSeriesMatrix latents =
                    simulate_lorenz96(setup.latent, base.t_len, latent_rng);
                for (const auto& link : setup.links) {
                    for (std::size_t t = 0; t < base.t_len; ++t) {
                        out.data.at(t, link.target) += link.weight * latents.at(t, link.latent);
                    }
                }
            }
            out.truth = setup.observed_truth;
            return out;
        }
        out.data = simulate_lorenz96(lspec, base.t_len, sim_rng, opts);
    }

    switch (spec.kind) {
        case ScenarioKind::measurement_error:
            out.data = add_measurement_error(out.data, spec.alpha, scen_rng);
            break;
        case ScenarioKind::standardized:
            out.data = zscore(out.data);
            break;
        case ScenarioKind::mixed:
            out.data = discretize_mixed(out.data, spec.beta, scen_rng);
            break;
        case ScenarioKind::minmax:
            out.data = minmax(out.data);
            break;
        case ScenarioKind::missing:
            out.data = zero_order_hold(apply_mcar(out.data, spec.gamma, scen_rng));
            break;
        case ScenarioKind::trend_season:
            out.data = add_trend_season(out.data, spec.rho, spec.eta, spec.period);
            break;
        default:
            break;  // generation-stage scenarios already handled
    }
    return out;
}

}  // namespace tscd
