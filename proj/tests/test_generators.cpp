#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "tscd/generators.hpp"

using namespace tscd;

namespace {

// Independent spectral-radius oracle: build the companion matrix explicitly
// and track the growth rate of repeated multiplication.
double companion_radius_oracle(const VarSystem& sys) {
    const std::size_t d = sys.d, tau = sys.tau_max, dim = d * tau;
    Matrix c(dim, dim);
    for (std::size_t l = 0; l < tau; ++l)
        for (std::size_t q = 0; q < d; ++q)
            for (std::size_t p = 0; p < d; ++p) c(q, l * d + p) = sys.coeffs[l](q, p);
    for (std::size_t l = 1; l < tau; ++l)
        for (std::size_t p = 0; p < d; ++p) c(l * d + p, (l - 1) * d + p) = 1.0;

    std::vector<double> v(dim, 1.0), w(dim);
    v[0] = 1.3;
    double acc = 0.0;
    int counted = 0;
    for (int it = 0; it < 3000; ++it) {
        for (std::size_t i = 0; i < dim; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < dim; ++j) s += c(i, j) * v[j];
            w[i] = s;
        }
        double norm = 0.0;
        for (double x : w) norm += x * x;
        norm = std::sqrt(norm);
        if (norm < 1e-300) return 0.0;
        for (std::size_t i = 0; i < dim; ++i) v[i] = w[i] / norm;
        if (it >= 1500) {
            acc += std::log(norm);
            ++counted;
        }
    }
    return std::exp(acc / counted);
}

}  // namespace

TEST_CASE("sample_var_system: self-only parents leave the off-diagonal empty") {
    Rng rng(1);
    VarSystem sys = sample_var_system(2, 2, 1, 0.1, 0.5, NoiseSpec{}, rng);
    CausalGraph g = var_ground_truth(sys);
    CHECK(g.edge(0, 0));
    CHECK(g.edge(1, 1));
    CHECK_FALSE(g.edge(0, 1));
    CHECK_FALSE(g.edge(1, 0));
}

TEST_CASE("sample_var_system: parents counted exactly") {
    Rng rng(17);
    VarSystem sys = sample_var_system(10, 3, 3, 0.1, 0.5, NoiseSpec{}, rng);
    CausalGraph g = var_ground_truth(sys);
    for (std::size_t q = 0; q < 10; ++q) {
        std::size_t parents = 0;
        for (std::size_t p = 0; p < 10; ++p)
            if (g.edge(p, q)) ++parents;
        CHECK(parents == 3);
        CHECK(g.edge(q, q));  // self always included
    }
}

TEST_CASE("sample_var_system: companion spectral radius capped at 0.95") {
    for (int s = 0; s < 10; ++s) {
        Rng rng(100 + s);
        VarSystem sys = sample_var_system(10, 3, 3, 0.1, 0.5, NoiseSpec{}, rng);
        CHECK(companion_radius_oracle(sys) <= 0.95 * (1.0 + 2e-3));
    }
}

TEST_CASE("sample_var_system: identical seed gives identical tensor") {
    Rng a(555), b(555);
    VarSystem s1 = sample_var_system(8, 3, 3, 0.1, 0.5, NoiseSpec{}, a);
    VarSystem s2 = sample_var_system(8, 3, 3, 0.1, 0.5, NoiseSpec{}, b);
    for (std::size_t l = 0; l < 3; ++l) CHECK(s1.coeffs[l] == s2.coeffs[l]);
}

TEST_CASE("sample_var_system: impossible sparsity rejected") {
    Rng rng(1);
    CHECK_THROWS_AS(sample_var_system(3, 2, 4, 0.1, 0.5, NoiseSpec{}, rng),
                    std::invalid_argument);
}

TEST_CASE("var_ground_truth: single edge, empty graph, lag collapse") {
    VarSystem sys;
    sys.d = 2;
    sys.tau_max = 2;
    sys.coeffs.assign(2, Matrix(2, 2));
    sys.noise.assign(2, NoiseSpec{});

    SUBCASE("single nonzero at (target 1, source 0)") {
        sys.coeffs[0](1, 0) = 0.4;
        CausalGraph g = var_ground_truth(sys);
        CHECK(g.edge(0, 1));
        CHECK(g.off_diagonal_edge_count() == 1);
        CHECK(g.window_edge(1, 0, 1));
        CHECK_FALSE(g.window_edge(2, 0, 1));
        CHECK_FALSE(g.window_edge(0, 0, 1));
    }
    SUBCASE("all-zero coefficients give the empty graph") {
        CausalGraph g = var_ground_truth(sys);
        CHECK(g.off_diagonal_edge_count() == 0);
        for (std::size_t i = 0; i < 2; ++i) CHECK_FALSE(g.edge(i, i));
    }
    SUBCASE("edge present at lag 2 only still reaches the summary") {
        sys.coeffs[1](0, 1) = -0.2;
        CausalGraph g = var_ground_truth(sys);
        CHECK(g.edge(1, 0));
        CHECK(g.window_edge(2, 1, 0));
        CHECK_FALSE(g.window_edge(1, 1, 0));
    }
}

TEST_CASE("simulate_var: deterministic recursion with silenced noise") {
    VarSystem sys;
    sys.d = 2;
    sys.tau_max = 1;
    sys.coeffs = {Matrix::from_rows({{0.9, 0.0}, {0.5, 0.9}})};
    sys.noise.assign(2, NoiseSpec{NoiseKind::gaussian, 1.0});

    Matrix zero_scale(2, 3);  // annihilates the noise at every retained step
    VarSimOptions opts;
    opts.scale_path = &zero_scale;
    opts.burn_in = 0;
    opts.init = std::vector<std::vector<double>>{{1.0, 0.0}};
    Rng rng(9);
    TimeSeriesMatrix x = simulate_var(sys, 3, rng, opts);
    CHECK(x.at(0, 0) == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(x.at(0, 1) == doctest::Approx(0.5).epsilon(1e-15));
    // One more turn of the recursion.
    CHECK(x.at(1, 0) == doctest::Approx(0.81).epsilon(1e-15));
    CHECK(x.at(1, 1) == doctest::Approx(0.9 * 0.5 + 0.5 * 0.9).epsilon(1e-15));
}

TEST_CASE("simulate_var: unit scale path is a no-op") {
    Rng sys_rng(3);
    VarSystem sys = sample_var_system(4, 2, 2, 0.1, 0.5, NoiseSpec{}, sys_rng);
    Matrix ones(4, 50, 1.0);
    Rng r1(42), r2(42);
    VarSimOptions with_path;
    with_path.scale_path = &ones;
    TimeSeriesMatrix a = simulate_var(sys, 50, r1, with_path);
    TimeSeriesMatrix b = simulate_var(sys, 50, r2);
    CHECK(a == b);
}

TEST_CASE("simulate_var: lag-0 autocovariance matches the Lyapunov solution") {
    VarSystem sys;
    sys.d = 2;
    sys.tau_max = 1;
    sys.coeffs = {Matrix::from_rows({{0.5, 0.2}, {-0.3, 0.4}})};
    sys.noise.assign(2, NoiseSpec{NoiseKind::gaussian, 1.0});

    // Fixed-point iteration of S = A S A^T + Q.
    const Matrix& a = sys.coeffs[0];
    Matrix s(2, 2);
    for (int it = 0; it < 400; ++it) {
        Matrix next = Matrix::identity(2);
        for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t j = 0; j < 2; ++j)
                for (std::size_t k = 0; k < 2; ++k)
                    for (std::size_t l = 0; l < 2; ++l) next(i, j) += a(i, k) * s(k, l) * a(j, l);
        s = next;
    }

    Rng rng(2718);
    TimeSeriesMatrix x = simulate_var(sys, 10000, rng);
    Matrix sample(2, 2);
    double mean[2] = {0.0, 0.0};
    for (std::size_t t = 0; t < x.length; ++t)
        for (std::size_t i = 0; i < 2; ++i) mean[i] += x.at(t, i);
    mean[0] /= x.length;
    mean[1] /= x.length;
    for (std::size_t t = 0; t < x.length; ++t)
        for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t j = 0; j < 2; ++j)
                sample(i, j) += (x.at(t, i) - mean[i]) * (x.at(t, j) - mean[j]);
    for (double& v : sample.raw()) v /= static_cast<double>(x.length);

    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) {
            num += (sample(i, j) - s(i, j)) * (sample(i, j) - s(i, j));
            den += s(i, j) * s(i, j);
        }
    CHECK(std::sqrt(num / den) <= 0.15);
}

TEST_CASE("simulate_var: divergence guard trips on unstable systems") {
    VarSystem sys;
    sys.d = 2;
    sys.tau_max = 1;
    sys.coeffs = {Matrix::from_rows({{2.0, 0.0}, {0.0, 2.0}})};
    sys.noise.assign(2, NoiseSpec{NoiseKind::gaussian, 1.0});
    Rng rng(1);
    CHECK_THROWS_WITH_AS(simulate_var(sys, 500, rng),
                         doctest::Contains("diverged"), std::runtime_error);
}

TEST_CASE("simulate_var: stability of sampled systems over long horizons") {
    int ok = 0;
    const int seeds = 200;
    for (int s = 0; s < seeds; ++s) {
        Rng rng(10000 + s);
        VarSystem sys = sample_var_system(10, 3, 3, 0.1, 0.5, NoiseSpec{}, rng);
        try {
            simulate_var(sys, 10000, rng);
            ++ok;
        } catch (const std::runtime_error&) {
        }
    }
    CHECK(ok >= 198);
}

TEST_CASE("generators: identical seed and spec give bitwise-identical output") {
    Rng sys_rng(21);
    VarSystem sys = sample_var_system(6, 3, 3, 0.1, 0.5, NoiseSpec{}, sys_rng);
    Rng r1(77), r2(77);
    CHECK(simulate_var(sys, 200, r1) == simulate_var(sys, 200, r2));

    Lorenz96Spec spec;
    spec.d = 6;
    spec.forcing = 10.0;
    spec.burn_in = 100;
    Rng l1(5), l2(5);
    CHECK(simulate_lorenz96(spec, 100, l1) == simulate_lorenz96(spec, 100, l2));
}

TEST_CASE("simulate_lorenz96: the all-F state is a fixed point") {
    Lorenz96Spec spec;
    spec.d = 5;
    spec.forcing = 8.0;
    spec.burn_in = 20;
    spec.noise = NoiseSpec{NoiseKind::gaussian, 0.0};  // sigma -> 0 limit
    Lorenz96SimOptions opts;
    opts.init = std::vector<double>(5, 8.0);
    Rng rng(1);
    TimeSeriesMatrix x = simulate_lorenz96(spec, 30, rng, opts);
    for (std::size_t t = 0; t < x.length; ++t)
        for (std::size_t i = 0; i < 5; ++i) CHECK(x.at(t, i) == 8.0);
}

TEST_CASE("lorenz96_field: wraparound sources for d=5") {
    // Perturbing a source must change the derivative of variable 0;
    // perturbing the lone non-source (index 2) must not.
    std::vector<double> x{1.0, 2.0, 3.0, 4.0, 5.0};
    auto base = lorenz96_field(x, 8.0);
    for (std::size_t j : {3u, 4u, 1u, 0u}) {
        auto bumped = x;
        bumped[j] += 0.5;
        CHECK(lorenz96_field(bumped, 8.0)[0] != base[0]);
    }
    auto bumped = x;
    bumped[2] += 0.5;
    CHECK(lorenz96_field(bumped, 8.0)[0] == base[0]);
}

TEST_CASE("simulate_lorenz96: step halving changes the trajectory below 1e-5") {
    Lorenz96Spec coarse;
    coarse.d = 10;
    coarse.forcing = 8.0;
    coarse.dt_sample = 0.05;
    coarse.substeps = 20;  // dt = 0.0025
    coarse.burn_in = 0;
    coarse.noise = NoiseSpec{NoiseKind::gaussian, 0.0};
    Lorenz96Spec fine = coarse;
    fine.substeps = 40;

    Rng r1(1), r2(1);
    const std::size_t t_len = 20;  // horizon 1 at dt_sample 0.05
    TimeSeriesMatrix a = simulate_lorenz96(coarse, t_len, r1);
    TimeSeriesMatrix b = simulate_lorenz96(fine, t_len, r2);
    for (std::size_t t = 0; t < t_len; ++t)
        for (std::size_t i = 0; i < 10; ++i)
            CHECK(std::abs(a.at(t, i) - b.at(t, i)) < 1e-5);
}

TEST_CASE("lorenz96_ground_truth: ring structure") {
    CausalGraph g = lorenz96_ground_truth(10);
    SUBCASE("off-diagonal parents of node 0 are 8, 9, 1") {
        std::vector<std::size_t> parents;
        for (std::size_t p = 0; p < 10; ++p)
            if (p != 0 && g.edge(p, 0)) parents.push_back(p);
        CHECK(parents == std::vector<std::size_t>{1, 8, 9});
    }
    SUBCASE("every node has exactly 3 off-diagonal parents") {
        for (std::size_t q = 0; q < 10; ++q) {
            std::size_t n = 0;
            for (std::size_t p = 0; p < 10; ++p)
                if (p != q && g.edge(p, q)) ++n;
            CHECK(n == 3);
        }
        CHECK(g.off_diagonal_edge_count() == 30);
    }
    SUBCASE("invariant under cyclic relabeling") {
        for (std::size_t p = 0; p < 10; ++p)
            for (std::size_t q = 0; q < 10; ++q)
                CHECK(g.edge(p, q) == g.edge((p + 1) % 10, (q + 1) % 10));
    }
    CHECK_THROWS_AS(lorenz96_ground_truth(3), std::invalid_argument);
}

TEST_CASE("NoiseSpec: exponential draws are mean-centered") {
    NoiseSpec noise{NoiseKind::exponential, 2.5};
    Rng rng(12345);
    double sum = 0.0;
    const int n = 1000000;
    for (int i = 0; i < n; ++i) sum += noise.draw(rng);
    CHECK(std::abs(sum / n) <= 0.01 * noise.scale);
}

TEST_CASE("var_ground_truth: summary equals lag-OR of the window") {
    for (int s = 0; s < 20; ++s) {
        Rng rng(900 + s);
        VarSystem sys = sample_var_system(7, 3, 3, 0.1, 0.5, NoiseSpec{}, rng);
        CausalGraph g = var_ground_truth(sys);
        REQUIRE(g.window.has_value());
        for (std::size_t p = 0; p < 7; ++p)
            for (std::size_t q = 0; q < 7; ++q) {
                bool any = false;
                for (std::size_t l = 0; l <= 3; ++l) any = any || g.window_edge(l, p, q);
                CHECK(any == g.edge(p, q));
            }
    }
}
