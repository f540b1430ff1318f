#include "tscd/numerics.hpp"

#include <algorithm>
#include <cmath>

namespace tscd {

namespace {

constexpr double kPivotZeroTol = 1e-10;   // relative pivot cutoff for PSD truncation
constexpr double kSymmetryTol = 1e-10;
constexpr double kRankTol = 1e-10;
constexpr double kPValueFloor = 1e-300;

bool try_cholesky(const Matrix& s, double jitter, Matrix& lower) {
    const std::size_t n = s.rows();
    lower = Matrix(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        double pivot2 = s(k, k) + jitter;
        for (std::size_t j = 0; j < k; ++j) pivot2 -= lower(k, j) * lower(k, j);
        const double zero_tol = kPivotZeroTol * (std::abs(s(k, k)) + jitter + 1e-300);
        if (pivot2 > zero_tol) {
            const double lkk = std::sqrt(pivot2);
            lower(k, k) = lkk;
            for (std::size_t i = k + 1; i < n; ++i) {
                double v = s(i, k);
                for (std::size_t j = 0; j < k; ++j) v -= lower(i, j) * lower(k, j);
                lower(i, k) = v / lkk;
            }
        } else if (pivot2 >= -zero_tol) {
            // Semidefinite direction: truncate the column, but only if the
            // remaining cross terms are also numerically zero (a PSD matrix
            // with a zero pivot has a zero Schur-complement column).
            for (std::size_t i = k + 1; i < n; ++i) {
                double v = s(i, k);
                for (std::size_t j = 0; j < k; ++j) v -= lower(i, j) * lower(k, j);
                const double bound =
                    std::sqrt((std::abs(s(i, i)) + jitter + 1e-300) * zero_tol) * 4.0 + zero_tol;
                if (std::abs(v) > bound) return false;
            }
            lower(k, k) = 0.0;
        } else {
            return false;
        }
    }
    return true;
}

}  // namespace

void GpSpec::validate() const {
    if (!(amplitude >= 0.0)) throw std::invalid_argument("GpSpec: amplitude must be >= 0");
    if (!(kernel_width > 0.0)) throw std::invalid_argument("GpSpec: kernel width must be > 0");
    if (length < 1) throw std::invalid_argument("GpSpec: length must be >= 1");
}

Matrix cholesky(const Matrix& s, double jitter) {
    if (s.rows() != s.cols()) throw std::invalid_argument("cholesky: matrix is not square");
    if (!(jitter >= 0.0)) throw std::invalid_argument("cholesky: jitter must be >= 0");
    const std::size_t n = s.rows();
    const double scale = s.max_abs();
    double trace = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        trace += s(i, i);
        for (std::size_t j = i + 1; j < n; ++j) {
            if (std::abs(s(i, j) - s(j, i)) > kSymmetryTol * std::max(1.0, scale)) {
                throw std::invalid_argument("cholesky: matrix is not symmetric");
            }
        }
    }

    Matrix lower;
    if (try_cholesky(s, jitter, lower)) return lower;

    // Escalate from 1e-10 * trace / n by factors of 10, at most four times.
    double step = 1e-10 * trace / static_cast<double>(n);
    if (!(step > 0.0)) step = 1e-10 * std::max(1.0, scale);
    for (int attempt = 0; attempt <= 4; ++attempt) {
        if (try_cholesky(s, jitter + step, lower)) return lower;
        step *= 10.0;
    }
    throw std::runtime_error("cholesky: decomposition failed after jitter escalation (input not PSD)");
}

std::vector<double> cholesky_solve(const Matrix& lower, std::span<const double> b) {
    const std::size_t n = lower.rows();
    if (b.size() != n) throw std::invalid_argument("cholesky_solve: size mismatch");
    std::vector<double> y(n), x(n);
    for (std::size_t i = 0; i < n; ++i) {
        double v = b[i];
        for (std::size_t j = 0; j < i; ++j) v -= lower(i, j) * y[j];
        y[i] = lower(i, i) != 0.0 ? v / lower(i, i) : 0.0;
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double v = y[ii];
        for (std::size_t j = ii + 1; j < n; ++j) v -= lower(j, ii) * x[j];
        x[ii] = lower(ii, ii) != 0.0 ? v / lower(ii, ii) : 0.0;
    }
    return x;
}

OlsFit ols_fit(const Matrix& x, std::span<const double> y) {
    const std::size_t n = x.rows();
    const std::size_t p = x.cols();
    if (y.size() != n) throw std::invalid_argument("ols_fit: y length does not match rows");
    if (n < p) throw std::invalid_argument("ols_fit: fewer rows than columns");

    // Householder QR, factoring a working copy while transforming y alongside.
    Matrix a = x;
    std::vector<double> qty(y.begin(), y.end());
    std::vector<double> col_norm(p, 0.0);
    for (std::size_t j = 0; j < p; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += x(i, j) * x(i, j);
        col_norm[j] = std::sqrt(s);
    }

    std::vector<double> v(n);
    for (std::size_t k = 0; k < p; ++k) {
        double norm2 = 0.0;
        for (std::size_t i = k; i < n; ++i) norm2 += a(i, k) * a(i, k);
        const double norm = std::sqrt(norm2);
        if (norm <= kRankTol * std::max(col_norm[k], 1.0)) {
            throw RankDeficientError(
                "ols_fit: design is rank deficient at column " + std::to_string(k), k);
        }
        const double alpha = a(k, k) >= 0.0 ? -norm : norm;
        double vnorm2 = 0.0;
        v[k] = a(k, k) - alpha;
        vnorm2 += v[k] * v[k];
        for (std::size_t i = k + 1; i < n; ++i) {
            v[i] = a(i, k);
            vnorm2 += v[i] * v[i];
        }
        a(k, k) = alpha;
        for (std::size_t i = k + 1; i < n; ++i) a(i, k) = 0.0;
        if (vnorm2 > 0.0) {
            for (std::size_t j = k + 1; j < p; ++j) {
                double dot = 0.0;
                for (std::size_t i = k; i < n; ++i) dot += v[i] * a(i, j);
                const double f = 2.0 * dot / vnorm2;
                for (std::size_t i = k; i < n; ++i) a(i, j) -= f * v[i];
            }
            double dot = 0.0;
            for (std::size_t i = k; i < n; ++i) dot += v[i] * qty[i];
            const double f = 2.0 * dot / vnorm2;
            for (std::size_t i = k; i < n; ++i) qty[i] -= f * v[i];
        }
    }

    OlsFit fit;
    fit.coefficients.assign(p, 0.0);
    for (std::size_t kk = p; kk-- > 0;) {
        double s = qty[kk];
        for (std::size_t j = kk + 1; j < p; ++j) s -= a(kk, j) * fit.coefficients[j];
        fit.coefficients[kk] = s / a(kk, kk);
    }
    fit.residuals.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double s = y[i];
        for (std::size_t j = 0; j < p; ++j) s -= x(i, j) * fit.coefficients[j];
        fit.residuals[i] = s;
    }
    return fit;
}

GpSampler::GpSampler(const GpSpec& spec) : spec_(spec) {
    spec.validate();
    if (spec.amplitude == 0.0) return;
    const std::size_t t = spec.length;
    Matrix kernel(t, t);
    const double denom = 2.0 * spec.kernel_width * spec.kernel_width;
    for (std::size_t i = 0; i < t; ++i) {
        for (std::size_t j = 0; j < t; ++j) {
            const double dt = static_cast<double>(i) - static_cast<double>(j);
            kernel(i, j) = std::exp(-dt * dt / denom);
        }
    }
    chol_ = cholesky(kernel, 0.0);
}

std::vector<double> GpSampler::sample_log(Rng& rng) const {
    const std::size_t t = spec_.length;
    std::vector<double> g(t, spec_.mean_log_scale);
    if (spec_.amplitude == 0.0) return g;
    std::vector<double> z(t);
    for (auto& v : z) v = rng.normal();
    for (std::size_t i = 0; i < t; ++i) {
        double acc = 0.0;
        const double* row = chol_.row_ptr(i);
        for (std::size_t j = 0; j <= i; ++j) acc += row[j] * z[j];
        g[i] += spec_.amplitude * acc;
    }
    return g;
}

std::vector<double> GpSampler::sample_scales(Rng& rng) const {
    std::vector<double> g = sample_log(rng);
    for (auto& v : g) v = std::exp(v);
    return g;
}

std::vector<double> sample_gp_path(const GpSpec& spec, Rng& rng) {
    return GpSampler(spec).sample_log(rng);
}

std::vector<double> sample_gp_scales(const GpSpec& spec, Rng& rng) {
    return GpSampler(spec).sample_scales(rng);
}

namespace {

/// Orthonormal basis of the centered columns of z via modified Gram-Schmidt
/// with one re-orthogonalization pass. Numerically dependent columns are
/// skipped, so the projection is always onto the well-defined span.
std::vector<std::vector<double>> orthonormal_basis(const Matrix& z) {
    const std::size_t n = z.rows();
    const std::size_t k = z.cols();
    std::vector<std::vector<double>> basis;
    basis.reserve(k);
    for (std::size_t c = 0; c < k; ++c) {
        std::vector<double> col(n);
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += z(i, c);
        mean /= static_cast<double>(n);
        double norm0 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            col[i] = z(i, c) - mean;
            norm0 += col[i] * col[i];
        }
        norm0 = std::sqrt(norm0);
        if (norm0 == 0.0) continue;  // constant column conditions on nothing
        for (double& v : col) v /= norm0;
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& q : basis) {
                double dot = 0.0;
                for (std::size_t i = 0; i < n; ++i) dot += q[i] * col[i];
                for (std::size_t i = 0; i < n; ++i) col[i] -= dot * q[i];
            }
        }
        double norm = 0.0;
        for (double v : col) norm += v * v;
        norm = std::sqrt(norm);
        if (norm <= 1e-10) continue;  // dependent on earlier columns
        for (double& v : col) v /= norm;
        basis.push_back(std::move(col));
    }
    return basis;
}

}  // namespace

PartialCorrelation partial_correlation(std::span<const double> x, std::span<const double> y,
                                       const Matrix& z) {
    const std::size_t n = x.size();
    const std::size_t k = z.cols();
    if (y.size() != n) throw std::invalid_argument("partial_correlation: length mismatch");
    if (k > 0 && z.rows() != n) throw std::invalid_argument("partial_correlation: Z row mismatch");
    if (n <= k + 3) throw std::invalid_argument("partial_correlation: need n > k + 3 samples");

    std::vector<double> rx(x.begin(), x.end());
    std::vector<double> ry(y.begin(), y.end());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sx0 = 0.0, sy0 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        rx[i] -= mx;
        ry[i] -= my;
        sx0 += rx[i] * rx[i];
        sy0 += ry[i] * ry[i];
    }
    // Unit-scale both series before projecting; the correlation is unchanged
    // and the arithmetic becomes insensitive to per-variable affine maps.
    if (sx0 > 0.0) {
        const double inv = 1.0 / std::sqrt(sx0);
        for (double& v : rx) v *= inv;
    }
    if (sy0 > 0.0) {
        const double inv = 1.0 / std::sqrt(sy0);
        for (double& v : ry) v *= inv;
    }

    if (k > 0) {
        const auto basis = orthonormal_basis(z);
        for (const auto& q : basis) {
            double dx = 0.0, dy = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                dx += q[i] * rx[i];
                dy += q[i] * ry[i];
            }
            for (std::size_t i = 0; i < n; ++i) {
                rx[i] -= dx * q[i];
                ry[i] -= dy * q[i];
            }
        }
    }

    double vxx = 0.0, vyy = 0.0, vxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        vxx += rx[i] * rx[i];
        vyy += ry[i] * ry[i];
        vxy += rx[i] * ry[i];
    }
    if (vxx <= 1e-20 || vyy <= 1e-20) {
        throw std::runtime_error(
            "partial_correlation: degenerate residuals (deterministic relation)");
    }

    double r = vxy / std::sqrt(vxx * vyy);
    r = std::clamp(r, -1.0, 1.0);

    const double dof = static_cast<double>(n - k - 3);
    double p;
    if (std::abs(r) >= 1.0) {
        p = kPValueFloor;
    } else {
        const double zstat = std::sqrt(dof) * 0.5 * std::log((1.0 + r) / (1.0 - r));
        p = std::erfc(std::abs(zstat) / std::sqrt(2.0));
        p = std::clamp(p, kPValueFloor, 1.0);
    }
    return {r, p};
}

std::vector<double> rk4_step(const VectorField& f, const std::vector<double>& x, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("rk4_step: dt must be > 0");
    const std::size_t d = x.size();
    auto eval = [&](const std::vector<double>& state) {
        std::vector<double> k = f(state);
        if (k.size() != d) throw std::invalid_argument("rk4_step: field dimension mismatch");
        for (double v : k) {
            if (!std::isfinite(v)) throw std::runtime_error("rk4_step: non-finite derivative");
        }
        return k;
    };
    std::vector<double> k1 = eval(x);
    std::vector<double> tmp(d);
    for (std::size_t i = 0; i < d; ++i) tmp[i] = x[i] + 0.5 * dt * k1[i];
    std::vector<double> k2 = eval(tmp);
    for (std::size_t i = 0; i < d; ++i) tmp[i] = x[i] + 0.5 * dt * k2[i];
    std::vector<double> k3 = eval(tmp);
    for (std::size_t i = 0; i < d; ++i) tmp[i] = x[i] + dt * k3[i];
    std::vector<double> k4 = eval(tmp);
    std::vector<double> out(d);
    for (std::size_t i = 0; i < d; ++i) {
        out[i] = x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    return out;
}

}  // namespace tscd
