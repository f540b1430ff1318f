#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "tscd/numerics.hpp"

using namespace tscd;

namespace {

Matrix random_psd(std::size_t n, Rng& rng) {
    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a(i, j) = rng.normal();
    Matrix s(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < n; ++k) acc += a(k, i) * a(k, j);
            s(i, j) = acc;
        }
    return s;
}

double reconstruction_error(const Matrix& lower, const Matrix& s, double jitter) {
    double worst = 0.0;
    const std::size_t n = s.rows();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < n; ++k) acc += lower(i, k) * lower(j, k);
            double target = s(i, j) + (i == j ? jitter : 0.0);
            worst = std::max(worst, std::abs(acc - target));
        }
    return worst;
}

// Independent least-squares oracle: normal equations solved by Gaussian
// elimination with partial pivoting. Used only to cross-check ols_fit.
std::vector<double> normal_equation_solve(const Matrix& x, const std::vector<double>& y) {
    const std::size_t n = x.rows(), p = x.cols();
    Matrix a(p, p + 1);
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < p; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < n; ++k) acc += x(k, i) * x(k, j);
            a(i, j) = acc;
        }
        double acc = 0.0;
        for (std::size_t k = 0; k < n; ++k) acc += x(k, i) * y[k];
        a(i, p) = acc;
    }
    for (std::size_t col = 0; col < p; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < p; ++r)
            if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
        if (piv != col)
            for (std::size_t c = 0; c <= p; ++c) std::swap(a(col, c), a(piv, c));
        for (std::size_t r = col + 1; r < p; ++r) {
            const double f = a(r, col) / a(col, col);
            for (std::size_t c = col; c <= p; ++c) a(r, c) -= f * a(col, c);
        }
    }
    std::vector<double> beta(p);
    for (std::size_t i = p; i-- > 0;) {
        double acc = a(i, p);
        for (std::size_t j = i + 1; j < p; ++j) acc -= a(i, j) * beta[j];
        beta[i] = acc / a(i, i);
    }
    return beta;
}

}  // namespace

TEST_CASE("cholesky: identity stays identity") {
    Matrix id = Matrix::identity(3);
    Matrix lower = cholesky(id, 0.0);
    CHECK(lower == id);
}

TEST_CASE("cholesky: 2x2 reconstruction") {
    Matrix s = Matrix::from_rows({{4.0, 2.0}, {2.0, 3.0}});
    Matrix lower = cholesky(s, 0.0);
    CHECK(reconstruction_error(lower, s, 0.0) <= 1e-12);
}

TEST_CASE("cholesky: asymmetric input rejected") {
    Matrix s = Matrix::from_rows({{1.0, 2.0}, {3.0, 4.0}});
    CHECK_THROWS_AS(cholesky(s, 0.0), std::invalid_argument);
    CHECK_THROWS(cholesky(Matrix(2, 3), 0.0));
}

TEST_CASE("cholesky: indefinite input fails after escalation") {
    Matrix s = Matrix::from_rows({{1.0, 0.0}, {0.0, -1.0}});
    CHECK_THROWS_AS(cholesky(s, 0.0), std::runtime_error);
    Matrix swap = Matrix::from_rows({{0.0, 1.0}, {1.0, 0.0}});
    CHECK_THROWS_AS(cholesky(swap, 0.0), std::runtime_error);
}

TEST_CASE("cholesky: random PSD battery reconstructs within tolerance") {
    Rng rng(42);
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t n = 1 + rng.uniform_index(12);
        Matrix s = random_psd(n, rng);
        const double jitter = (trial % 3 == 0) ? 1e-6 : 0.0;
        Matrix lower = cholesky(s, jitter);
        CHECK(reconstruction_error(lower, s, jitter) <= 1e-8 * (1.0 + s.max_abs()));
    }
}

TEST_CASE("cholesky: rank-deficient PSD is truncated, not rejected") {
    // Outer product of a single vector: rank one.
    std::vector<double> v{1.0, 2.0, -0.5, 3.0};
    Matrix s(4, 4);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) s(i, j) = v[i] * v[j];
    Matrix lower = cholesky(s, 0.0);
    CHECK(reconstruction_error(lower, s, 0.0) <= 1e-8 * (1.0 + s.max_abs()));
}

TEST_CASE("ols_fit: exact line") {
    Matrix x(2, 1);
    x(0, 0) = 1.0;
    x(1, 0) = 2.0;
    std::vector<double> y{2.0, 4.0};
    OlsFit fit = ols_fit(x, y);
    CHECK(fit.coefficients[0] == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(std::abs(fit.residuals[0]) <= 1e-14);
    CHECK(std::abs(fit.residuals[1]) <= 1e-14);
}

TEST_CASE("ols_fit: identity design returns y") {
    Rng rng(7);
    Matrix x = Matrix::identity(5);
    std::vector<double> y(5);
    for (auto& v : y) v = rng.normal();
    OlsFit fit = ols_fit(x, y);
    for (std::size_t i = 0; i < 5; ++i) CHECK(fit.coefficients[i] == doctest::Approx(y[i]).epsilon(1e-14));
}

TEST_CASE("ols_fit: matches normal-equation oracle on random systems") {
    Rng rng(123);
    for (int trial = 0; trial < 20; ++trial) {
        Matrix x(50, 5);
        for (std::size_t i = 0; i < 50; ++i)
            for (std::size_t j = 0; j < 5; ++j) x(i, j) = rng.normal();
        std::vector<double> y(50);
        for (auto& v : y) v = rng.normal();
        OlsFit fit = ols_fit(x, y);
        std::vector<double> oracle = normal_equation_solve(x, y);
        double ynorm = 0.0;
        for (double v : y) ynorm += v * v;
        ynorm = std::sqrt(ynorm);
        for (std::size_t j = 0; j < 5; ++j)
            CHECK(std::abs(fit.coefficients[j] - oracle[j]) <= 1e-8);
        // Residual orthogonality to every design column.
        for (std::size_t j = 0; j < 5; ++j) {
            double dot = 0.0;
            for (std::size_t i = 0; i < 50; ++i) dot += x(i, j) * fit.residuals[i];
            CHECK(std::abs(dot) <= 1e-8 * ynorm);
        }
    }
}

TEST_CASE("ols_fit: rank deficiency names the offending column") {
    Matrix x(6, 3);
    Rng rng(5);
    for (std::size_t i = 0; i < 6; ++i) {
        x(i, 0) = rng.normal();
        x(i, 1) = rng.normal();
        x(i, 2) = 2.0 * x(i, 0) - x(i, 1);  // exact combination
    }
    std::vector<double> y(6, 1.0);
    try {
        ols_fit(x, y);
        FAIL("expected RankDeficientError");
    } catch (const RankDeficientError& e) {
        CHECK(e.column == 2);
    }
}

TEST_CASE("sample_gp_scales: zero amplitude gives exp(m) exactly") {
    GpSpec spec{0.7, 0.0, 10.0, 50};
    Rng rng(1);
    auto scales = sample_gp_scales(spec, rng);
    for (double v : scales) CHECK(v == std::exp(0.7));
}

TEST_CASE("sample_gp_scales: constant-kernel limit shares one deviate") {
    GpSpec spec{0.0, 1.0, 1e6 * 64.0, 64};
    Rng rng(99);
    auto scales = sample_gp_scales(spec, rng);
    const double first = scales[0];
    CHECK(first > 0.0);
    for (double v : scales) {
        CHECK(std::abs(v - first) <= 1e-6 * std::abs(first));
    }
}

TEST_CASE("sample_gp_scales: deterministic and strictly positive") {
    GpSpec spec{0.5, 1.5, 8.0, 120};
    Rng a(2024), b(2024);
    auto s1 = sample_gp_scales(spec, a);
    auto s2 = sample_gp_scales(spec, b);
    CHECK(s1 == s2);
    for (double v : s1) CHECK(v > 0.0);
}

TEST_CASE("sample_gp_scales: Monte Carlo covariance matches the kernel") {
    const std::size_t t = 200;
    const std::size_t draws = 10000;
    GpSpec spec{0.0, 1.0, 10.0, t};
    GpSampler sampler(spec);
    Rng rng(31337);

    std::vector<double> mean(t, 0.0);
    std::vector<double> cov(t * t, 0.0);
    std::vector<std::vector<double>> paths;
    paths.reserve(draws);
    for (std::size_t n = 0; n < draws; ++n) {
        auto g = sampler.sample_log(rng);
        for (std::size_t i = 0; i < t; ++i) mean[i] += g[i];
        paths.push_back(std::move(g));
    }
    for (double& v : mean) v /= static_cast<double>(draws);
    for (const auto& g : paths) {
        for (std::size_t i = 0; i < t; ++i) {
            const double di = g[i] - mean[i];
            for (std::size_t j = i; j < t; ++j) cov[i * t + j] += di * (g[j] - mean[j]);
        }
    }
    const double denom = 2.0 * spec.kernel_width * spec.kernel_width;
    double worst = 0.0;
    for (std::size_t i = 0; i < t; ++i) {
        for (std::size_t j = i; j < t; ++j) {
            const double empirical = cov[i * t + j] / static_cast<double>(draws);
            const double dt = static_cast<double>(i) - static_cast<double>(j);
            const double expected = std::exp(-dt * dt / denom);
            worst = std::max(worst, std::abs(empirical - expected));
        }
    }
    CHECK(worst <= 0.05);
}

TEST_CASE("partial_correlation: perfect correlation") {
    Rng rng(11);
    std::vector<double> x(100);
    for (auto& v : x) v = rng.normal();
    auto pc = partial_correlation(x, x, Matrix());
    CHECK(pc.r == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(pc.p_value <= 1e-20);
}

TEST_CASE("partial_correlation: independent samples are uncorrelated and calibrated") {
    int rejections = 0;
    double mean_p = 0.0;
    const int reps = 400;
    for (int s = 0; s < reps; ++s) {
        Rng rng(1000 + s);
        std::vector<double> x(500), y(500);
        for (auto& v : x) v = rng.normal();
        for (auto& v : y) v = rng.normal();
        auto pc = partial_correlation(x, y, Matrix());
        CHECK(std::abs(pc.r) < 0.15);
        mean_p += pc.p_value;
        if (pc.p_value < 0.05) ++rejections;
    }
    mean_p /= reps;
    CHECK(mean_p > 0.40);
    CHECK(mean_p < 0.60);
    const double rate = static_cast<double>(rejections) / reps;
    CHECK(rate > 0.01);
    CHECK(rate < 0.10);
}

TEST_CASE("partial_correlation: conditioning removes a common cause") {
    Rng rng(77);
    const std::size_t n = 2000;
    Matrix z(n, 1);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        z(i, 0) = rng.normal();
        x[i] = z(i, 0) + 0.5 * rng.normal();
        y[i] = z(i, 0) + 0.5 * rng.normal();
    }
    auto marginal = partial_correlation(x, y, Matrix());
    CHECK(std::abs(marginal.r) > 0.5);
    auto conditioned = partial_correlation(x, y, z);
    CHECK(std::abs(conditioned.r) < 0.1);
}

TEST_CASE("partial_correlation: affine invariance of r and p") {
    Rng rng(88);
    const std::size_t n = 300;
    Matrix z(n, 2);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        z(i, 0) = rng.normal();
        z(i, 1) = rng.normal();
        x[i] = 0.4 * z(i, 0) + rng.normal();
        y[i] = -0.3 * z(i, 1) + 0.2 * x[i] + rng.normal();
    }
    auto base = partial_correlation(x, y, z);

    std::vector<double> x2(n), y2(n);
    Matrix z2(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
        x2[i] = 3.5 * x[i] - 7.0;
        y2[i] = 0.02 * y[i] + 100.0;
        z2(i, 0) = -5.0 * z(i, 0) + 1.0;  // negative scale on a conditioner
        z2(i, 1) = 0.001 * z(i, 1);
    }
    auto mapped = partial_correlation(x2, y2, z2);
    CHECK(std::abs(mapped.r - base.r) <= 1e-10);
    CHECK(std::abs(mapped.p_value - base.p_value) <= 1e-10);

    // A negative scale on x itself flips the sign of r but not |r| or p.
    for (std::size_t i = 0; i < n; ++i) x2[i] = -2.0 * x[i];
    auto flipped = partial_correlation(x2, y, z);
    CHECK(std::abs(std::abs(flipped.r) - std::abs(base.r)) <= 1e-10);
    CHECK(std::abs(flipped.p_value - base.p_value) <= 1e-10);
}

TEST_CASE("partial_correlation: degenerate residuals are an error") {
    std::vector<double> x(50, 1.0);  // constant
    Rng rng(3);
    std::vector<double> y(50);
    for (auto& v : y) v = rng.normal();
    CHECK_THROWS_AS(partial_correlation(x, y, Matrix()), std::runtime_error);
}

TEST_CASE("rk4_step: zero field leaves the state unchanged") {
    VectorField f = [](const std::vector<double>& x) { return std::vector<double>(x.size(), 0.0); };
    std::vector<double> x{1.0, -2.0, 3.0};
    CHECK(rk4_step(f, x, 0.5) == x);
}

TEST_CASE("rk4_step: exponential growth oracle") {
    VectorField f = [](const std::vector<double>& x) { return x; };
    auto out = rk4_step(f, {1.0}, 0.1);
    CHECK(std::abs(out[0] - 1.10517091) <= 1e-7);
}

TEST_CASE("rk4_step: fourth-order convergence on decay field") {
    VectorField f = [](const std::vector<double>& x) {
        return std::vector<double>{-x[0]};
    };
    auto integrate = [&](double dt) {
        std::vector<double> x{1.0};
        const int steps = static_cast<int>(std::lround(1.0 / dt));
        for (int i = 0; i < steps; ++i) x = rk4_step(f, x, dt);
        return std::abs(x[0] - std::exp(-1.0));
    };
    const double e1 = integrate(0.1);
    const double e2 = integrate(0.05);
    const double order = std::log2(e1 / e2);
    CHECK(order >= 3.8);
    // Roughly sixteenfold error reduction per halving.
    CHECK(e1 / e2 == doctest::Approx(16.0).epsilon(0.25));
}

TEST_CASE("rk4_step: linear system convergence order") {
    Matrix a = Matrix::from_rows({{-0.5, 1.0}, {-1.0, -0.5}});
    VectorField f = [&](const std::vector<double>& x) {
        return std::vector<double>{a(0, 0) * x[0] + a(0, 1) * x[1],
                                   a(1, 0) * x[0] + a(1, 1) * x[1]};
    };
    auto terminal = [&](double dt) {
        std::vector<double> x{1.0, 0.5};
        const int steps = static_cast<int>(std::lround(2.0 / dt));
        for (int i = 0; i < steps; ++i) x = rk4_step(f, x, dt);
        return x;
    };
    auto ref = terminal(0.0003125);
    auto err = [&](double dt) {
        auto x = terminal(dt);
        return std::hypot(x[0] - ref[0], x[1] - ref[1]);
    };
    const double order = std::log2(err(0.02) / err(0.01));
    CHECK(order >= 3.8);
}

TEST_CASE("rk4_step: non-finite derivative is an error") {
    VectorField f = [](const std::vector<double>& x) {
        return std::vector<double>{1.0 / (x[0] - x[0])};
    };
    CHECK_THROWS_AS(rk4_step(f, {1.0}, 0.1), std::runtime_error);
}

TEST_CASE("soft_threshold") {
    CHECK(soft_threshold(3.0, 1.0) == 2.0);
    CHECK(soft_threshold(-0.5, 1.0) == 0.0);
    CHECK(soft_threshold(0.0, 0.0) == 0.0);
    CHECK(soft_threshold(0.0, 17.0) == 0.0);
    CHECK(soft_threshold(-4.0, 1.5) == -2.5);
}
