#include "tscd/generators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tscd/numerics.hpp"

namespace tscd {

namespace {

constexpr double kDivergenceGuard = 1e9;

void check_finite_state(const std::vector<double>& x) {
    for (double v : x) {
        if (!std::isfinite(v) || std::abs(v) > kDivergenceGuard) {
            throw std::runtime_error("simulation diverged (state exceeded 1e9)");
        }
    }
}

}  // namespace

void NoiseSpec::validate() const {
    if (!(scale > 0.0)) throw std::invalid_argument("NoiseSpec: scale must be > 0");
}

double NoiseSpec::draw(Rng& rng) const {
    switch (kind) {
        case NoiseKind::gaussian:
            return scale * rng.normal();
        case NoiseKind::exponential:
            return rng.exponential(scale) - scale;
    }
    return 0.0;
}

void Lorenz96Spec::validate() const {
    if (d < 4) throw std::invalid_argument("Lorenz96Spec: need d >= 4");
    if (!(dt_sample > 0.0)) throw std::invalid_argument("Lorenz96Spec: dt_sample must be > 0");
    if (substeps < 1) throw std::invalid_argument("Lorenz96Spec: substeps must be >= 1");
}

double companion_spectral_radius(const VarSystem& sys) {
    const std::size_t d = sys.d;
    const std::size_t tau = sys.tau_max;
    const std::size_t dim = d * tau;
    // Stacked state [x_t; x_{t-1}; ...]; one application advances the VAR by
    // one step with zero noise.
    std::vector<double> v(dim), next(dim);
    for (std::size_t i = 0; i < dim; ++i) v[i] = 1.0 + 1e-3 * static_cast<double>(i);
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;

    const int total = 2000;
    const int burn = 1000;
    double log_growth = 0.0;
    for (int it = 0; it < total; ++it) {
        for (std::size_t q = 0; q < d; ++q) {
            double acc = 0.0;
            for (std::size_t l = 0; l < tau; ++l) {
                const Matrix& a = sys.coeffs[l];
                const double* block = v.data() + l * d;
                for (std::size_t p = 0; p < d; ++p) acc += a(q, p) * block[p];
            }
            next[q] = acc;
        }
        for (std::size_t l = 1; l < tau; ++l) {
            for (std::size_t p = 0; p < d; ++p) next[l * d + p] = v[(l - 1) * d + p];
        }
        double g = 0.0;
        for (double x : next) g += x * x;
        g = std::sqrt(g);
        if (g < 1e-300) return 0.0;
        for (std::size_t i = 0; i < dim; ++i) v[i] = next[i] / g;
        if (it >= burn) log_growth += std::log(g);
    }
    return std::exp(log_growth / static_cast<double>(total - burn));
}

VarSystem sample_var_system(std::size_t d, std::size_t tau_max, std::size_t parents_per_var,
                            double coeff_lo, double coeff_hi, const NoiseSpec& noise, Rng& rng,
                            double spectral_radius_cap) {
    if (d < 2) throw std::invalid_argument("sample_var_system: need d >= 2");
    if (tau_max < 1) throw std::invalid_argument("sample_var_system: need tau_max >= 1");
    if (parents_per_var < 1 || parents_per_var > d) {
        throw std::invalid_argument("sample_var_system: impossible parents_per_var");
    }
    if (!(0.0 < coeff_lo && coeff_lo < coeff_hi)) {
        throw std::invalid_argument("sample_var_system: need 0 < coeff_lo < coeff_hi");
    }
    if (!(spectral_radius_cap > 0.0 && spectral_radius_cap < 1.0)) {
        throw std::invalid_argument("sample_var_system: cap must be in (0, 1)");
    }

    VarSystem sys;
    sys.d = d;
    sys.tau_max = tau_max;
    sys.coeffs.assign(tau_max, Matrix(d, d));
    sys.noise.assign(d, noise);
    sys.spectral_radius_cap = spectral_radius_cap;

    std::vector<std::size_t> pool(d);
    for (std::size_t q = 0; q < d; ++q) {
        // Parents: self plus parents_per_var - 1 distinct others.
        std::size_t m = 0;
        for (std::size_t p = 0; p < d; ++p)
            if (p != q) pool[m++] = p;
        std::vector<std::size_t> parents{q};
        for (std::size_t pick = 0; pick + 1 < parents_per_var; ++pick) {
            const std::size_t idx = pick + rng.uniform_index(m - pick);
            std::swap(pool[pick], pool[idx]);
            parents.push_back(pool[pick]);
        }
        for (std::size_t p : parents) {
            const std::size_t lag = rng.uniform_index(tau_max);
            const double mag = coeff_lo + (coeff_hi - coeff_lo) * rng.uniform();
            sys.coeffs[lag](q, p) = rng.sign() * mag;
        }
    }

    const double radius = companion_spectral_radius(sys);
    if (radius > spectral_radius_cap) {
        // Scaling lag-l coefficients by s^l scales every companion eigenvalue by s.
        const double s = spectral_radius_cap / radius;
        double factor = 1.0;
        for (std::size_t l = 0; l < tau_max; ++l) {
            factor *= s;
            for (double& v : sys.coeffs[l].raw()) v *= factor;
        }
    }
    return sys;
}

CausalGraph var_ground_truth(const VarSystem& sys) {
    const std::size_t d = sys.d;
    CausalGraph g(d);
    g.tau_max = sys.tau_max;
    g.window.emplace((sys.tau_max + 1) * d * d, 0);
    for (std::size_t l = 1; l <= sys.tau_max; ++l) {
        const Matrix& a = sys.coeffs[l - 1];
        for (std::size_t q = 0; q < d; ++q) {
            for (std::size_t p = 0; p < d; ++p) {
                if (a(q, p) != 0.0) {
                    (*g.window)[(l * d + p) * d + q] = 1;
                    g.set_edge(p, q);
                }
            }
        }
    }
    return g;
}

CausalGraph lorenz96_ground_truth(std::size_t d) {
    if (d < 4) throw std::invalid_argument("lorenz96_ground_truth: need d >= 4");
    CausalGraph g(d);
    for (std::size_t i = 0; i < d; ++i) {
        g.set_edge((i + d - 2) % d, i);
        g.set_edge((i + d - 1) % d, i);
        g.set_edge((i + 1) % d, i);
        g.set_edge(i, i);
    }
    return g;
}

TimeSeriesMatrix simulate_var(const VarSystem& sys, std::size_t t_len, Rng& rng,
                              const VarSimOptions& opts) {
    const std::size_t d = sys.d;
    const std::size_t tau = sys.tau_max;
    if (t_len < tau + 1) throw std::invalid_argument("simulate_var: need T >= tau_max + 1");
    if (sys.coeffs.size() != tau) throw std::invalid_argument("simulate_var: bad lag tensor");
    if (sys.noise.size() != d) throw std::invalid_argument("simulate_var: bad noise vector");
    if (opts.scale_path &&
        (opts.scale_path->rows() != d || opts.scale_path->cols() != t_len)) {
        throw std::invalid_argument("simulate_var: scale_path must be d x T");
    }
    if (opts.coeff_path && opts.coeff_path->size() != t_len) {
        throw std::invalid_argument("simulate_var: coeff_path must have T entries");
    }

    // History ring, most recent state last.
    std::vector<std::vector<double>> history;
    if (opts.init) {
        if (opts.init->size() != tau) {
            throw std::invalid_argument("simulate_var: init must supply tau_max states");
        }
        history = *opts.init;
        for (const auto& state : history) {
            if (state.size() != d) throw std::invalid_argument("simulate_var: bad init state");
        }
    } else {
        history.assign(tau, std::vector<double>(d, 0.0));
        for (auto& state : history) {
            for (std::size_t i = 0; i < d; ++i) state[i] = sys.noise[i].draw(rng);
        }
    }

    TimeSeriesMatrix out(t_len, d);
    std::vector<double> x(d);
    const std::size_t total = opts.burn_in + t_len;
    for (std::size_t step = 0; step < total; ++step) {
        const bool retained = step >= opts.burn_in;
        const std::size_t t = retained ? step - opts.burn_in : 0;
        const std::vector<Matrix>& coeffs =
            (opts.coeff_path && retained) ? (*opts.coeff_path)[t] : sys.coeffs;
        for (std::size_t q = 0; q < d; ++q) {
            double acc = 0.0;
            for (std::size_t l = 1; l <= tau; ++l) {
                const Matrix& a = coeffs[l - 1];
                const std::vector<double>& past = history[tau - l];
                for (std::size_t p = 0; p < d; ++p) acc += a(q, p) * past[p];
            }
            double u = sys.noise[q].draw(rng);
            if (opts.scale_path && retained) u *= (*opts.scale_path)(q, t);
            x[q] = acc + u;
        }
        check_finite_state(x);
        if (retained) {
            for (std::size_t i = 0; i < d; ++i) out.at(t, i) = x[i];
        }
        history.erase(history.begin());
        history.push_back(x);
    }
    return out;
}

std::vector<double> lorenz96_field(const std::vector<double>& x, double forcing) {
    const std::size_t d = x.size();
    std::vector<double> dx(d);
    for (std::size_t i = 0; i < d; ++i) {
        const double xm1 = x[(i + d - 1) % d];
        const double xm2 = x[(i + d - 2) % d];
        const double xp1 = x[(i + 1) % d];
        dx[i] = -xm1 * (xm2 - xp1) - x[i] + forcing;
    }
    return dx;
}

TimeSeriesMatrix simulate_lorenz96(const Lorenz96Spec& spec, std::size_t t_len, Rng& rng,
                                   const Lorenz96SimOptions& opts) {
    spec.validate();
    if (t_len < 1) throw std::invalid_argument("simulate_lorenz96: need T >= 1");
    const std::size_t d = spec.d;
    if (opts.scale_path &&
        (opts.scale_path->rows() != d || opts.scale_path->cols() != t_len)) {
        throw std::invalid_argument("simulate_lorenz96: scale_path must be d x T");
    }

    std::vector<double> x;
    if (opts.init) {
        if (opts.init->size() != d) throw std::invalid_argument("simulate_lorenz96: bad init");
        x = *opts.init;
    } else {
        x.assign(d, spec.forcing);
        x[0] += 0.01;
    }

    VectorField field = [&spec](const std::vector<double>& state) {
        return lorenz96_field(state, spec.forcing);
    };

    const double dt = spec.dt_sample / static_cast<double>(spec.substeps);
    TimeSeriesMatrix out(t_len, d);
    const std::size_t total = spec.burn_in + t_len;
    for (std::size_t s = 0; s < total; ++s) {
        for (std::size_t sub = 0; sub < spec.substeps; ++sub) x = rk4_step(field, x, dt);
        check_finite_state(x);
        if (s >= spec.burn_in) {
            const std::size_t t = s - spec.burn_in;
            // Additive observation noise at the sampling instant only; the
            // dynamics never see it.
            for (std::size_t i = 0; i < d; ++i) {
                double u = spec.noise.draw(rng);
                if (opts.scale_path) u *= (*opts.scale_path)(i, t);
                out.at(t, i) = x[i] + u;
            }
        }
    }
    return out;
}

}  // namespace tscd
