#pragma once

#include <optional>
#include <vector>

#include "tscd/matrix.hpp"
#include "tscd/rng.hpp"
#include "tscd/timeseries.hpp"

namespace tscd {

enum class NoiseKind { gaussian, exponential };

struct NoiseSpec {
    NoiseKind kind = NoiseKind::gaussian;
    double scale = 1.0;  // sigma for gaussian, mean for exponential

    void validate() const;
    /// Zero-mean draw; exponential draws are recentered by subtracting the mean.
    double draw(Rng& rng) const;
};

/// Vector autoregression with lag tensor coeffs[l-1](q, p) = weight of
/// x_{t-l,p} in the equation of x_{t,q}.
struct VarSystem {
    std::size_t d = 0;
    std::size_t tau_max = 1;
    std::vector<Matrix> coeffs;
    std::vector<NoiseSpec> noise;  // one per variable
    double spectral_radius_cap = 0.95;
};

struct Lorenz96Spec {
    std::size_t d = 4;       // >= 4 so the wraparound indices stay distinct
    double forcing = 10.0;   // F
    double dt_sample = 0.05;
    std::size_t substeps = 5;
    std::size_t burn_in = 1000;  // samples discarded before recording
    NoiseSpec noise{NoiseKind::gaussian, 0.1};

    void validate() const;
};

/// Random sparse stable system: every variable gets exactly parents_per_var
/// parents (itself always included), each edge active at one uniformly chosen
/// lag with magnitude uniform in [coeff_lo, coeff_hi] and random sign. The
/// tensor is rescaled so the companion spectral radius is at most the cap.
VarSystem sample_var_system(std::size_t d, std::size_t tau_max, std::size_t parents_per_var,
                            double coeff_lo, double coeff_hi, const NoiseSpec& noise, Rng& rng,
                            double spectral_radius_cap = 0.95);

CausalGraph var_ground_truth(const VarSystem& sys);

/// Summary graph of the cyclic Lorenz-96 coupling: parents of i are
/// i-2, i-1, i+1 (mod d) and i itself. No window layer.
CausalGraph lorenz96_ground_truth(std::size_t d);

struct VarSimOptions {
    const Matrix* scale_path = nullptr;  // d x T noise-scale multipliers for retained steps
    const std::vector<std::vector<Matrix>>* coeff_path = nullptr;  // per retained step
    std::size_t burn_in = 200;
    std::optional<std::vector<std::vector<double>>> init;  // tau_max states, oldest first
};

TimeSeriesMatrix simulate_var(const VarSystem& sys, std::size_t t_len, Rng& rng,
                              const VarSimOptions& opts = {});

struct Lorenz96SimOptions {
    const Matrix* scale_path = nullptr;  // d x T observation-noise multipliers
    std::optional<std::vector<double>> init;
};

TimeSeriesMatrix simulate_lorenz96(const Lorenz96Spec& spec, std::size_t t_len, Rng& rng,
                                   const Lorenz96SimOptions& opts = {});

/// Spectral radius of the VAR companion matrix, estimated by power iteration.
double companion_spectral_radius(const VarSystem& sys);

/// The Lorenz-96 vector field at the given state.
std::vector<double> lorenz96_field(const std::vector<double>& x, double forcing);

}  // namespace tscd
