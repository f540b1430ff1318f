#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tscd/matrix.hpp"
#include "tscd/rng.hpp"

namespace tscd {

/// Log-normal Gaussian-process scale model: log omega ~ GP(m*1, nu^2 K),
/// K_ij = exp(-(t_i - t_j)^2 / (2 ell^2)) over integer time steps.
struct GpSpec {
    double mean_log_scale = 0.0;  // m
    double amplitude = 1.0;       // nu, >= 0
    double kernel_width = 20.0;   // ell, in time steps, > 0
    std::size_t length = 1;       // T, >= 1

    void validate() const;
};

/// Thrown by ols_fit when a design column is (numerically) a linear
/// combination of earlier columns.
struct RankDeficientError : std::runtime_error {
    RankDeficientError(const std::string& msg, std::size_t col)
        : std::runtime_error(msg), column(col) {}
    std::size_t column;
};

struct OlsFit {
    std::vector<double> coefficients;
    std::vector<double> residuals;
};

/// Lower-triangular L with L*L^T = S + jitter*I. Symmetric PSD input only.
/// Numerically zero pivots are truncated (their columns zeroed), which keeps
/// rank-deficient kernels factorable; genuinely indefinite input escalates the
/// jitter a few times and then throws.
Matrix cholesky(const Matrix& s, double jitter);

/// Solve (L*L^T) x = b given the lower-triangular factor L.
std::vector<double> cholesky_solve(const Matrix& lower, std::span<const double> b);

/// Least squares via Householder QR. Throws RankDeficientError naming the
/// offending column when the design loses column rank at pivot tolerance.
OlsFit ols_fit(const Matrix& x, std::span<const double> y);

/// Factors the GP kernel once and then draws any number of paths. The one-shot
/// helpers below wrap this; batch users (one path per variable) share the factor.
class GpSampler {
public:
    explicit GpSampler(const GpSpec& spec);

    /// A draw of log omega (the Gaussian path itself, mean m).
    std::vector<double> sample_log(Rng& rng) const;
    /// exp of the above; strictly positive.
    std::vector<double> sample_scales(Rng& rng) const;

private:
    GpSpec spec_;
    Matrix chol_;  // empty when amplitude == 0
};

std::vector<double> sample_gp_path(const GpSpec& spec, Rng& rng);
std::vector<double> sample_gp_scales(const GpSpec& spec, Rng& rng);

struct PartialCorrelation {
    double r = 0.0;        // in [-1, 1]
    double p_value = 1.0;  // two-sided Fisher z, clamped to [1e-300, 1]
};

/// Pearson correlation of the OLS residuals of x-on-Z and y-on-Z (plain
/// Pearson when Z has no columns), with the Fisher-z test at n - k - 3
/// effective samples. Throws on zero-variance residuals.
PartialCorrelation partial_correlation(std::span<const double> x, std::span<const double> y,
                                       const Matrix& z);

using VectorField = std::function<std::vector<double>(const std::vector<double>&)>;

/// Classical fourth-order Runge-Kutta update. Throws on non-finite derivatives.
std::vector<double> rk4_step(const VectorField& f, const std::vector<double>& x, double dt);

inline double soft_threshold(double z, double lambda) {
    if (z > lambda) return z - lambda;
    if (z < -lambda) return z + lambda;
    return 0.0;
}

}  // namespace tscd
