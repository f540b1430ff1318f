// Wall-clock comparison of the OpenMP method kernels against their serial
// drivers, with an output-equality check on every run.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "tscd/methods.hpp"
#include "tscd/misspec.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace tscd;

namespace {

double now_ms() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

template <typename F>
double time_best_of(int reps, F&& fn) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const double t0 = now_ms();
        fn();
        best = std::min(best, now_ms() - t0);
    }
    return best;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.raw().size(); ++i) {
        worst = std::max(worst, std::abs(a.raw()[i] - b.raw()[i]));
    }
    return worst;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Serial vs OpenMP kernel benchmark"};
    std::size_t d = 15;
    std::size_t t_len = 1000;
    int reps = 3;
    app.add_option("--d", d, "variable count");
    app.add_option("--t", t_len, "series length");
    app.add_option("--reps", reps, "repetitions (best-of timing)");
    CLI11_PARSE(app, argc, argv);

#ifdef _OPENMP
    std::printf("threads: %d\n", omp_get_max_threads());
#else
    std::printf("threads: 1 (built without OpenMP)\n");
#endif

    ScenarioSpec spec;
    spec.base.d = d;
    spec.base.t_len = t_len;
    spec.seed = 1;
    const Dataset ds = build_dataset(spec);
    std::printf("dataset: linear vanilla, d=%zu, T=%zu\n\n", d, t_len);
    std::printf("%-14s %12s %12s %9s %12s\n", "kernel", "serial ms", "parallel ms", "speedup",
                "max |diff|");

    MethodConfig cfg;
    cfg.tau_max = 5;

    {
        cfg.method = MethodKind::var;
        MethodResult serial, parallel;
        const double ts = time_best_of(reps, [&] { serial = var_granger_serial(ds.data, cfg); });
        const double tp = time_best_of(reps, [&] { parallel = var_granger(ds.data, cfg); });
        std::printf("%-14s %12.2f %12.2f %8.2fx %12.3g\n", "var_granger", ts, tp, ts / tp,
                    max_abs_diff(serial.scores, parallel.scores));
    }
    {
        cfg.method = MethodKind::lgc;
        cfg.lambda = 0.01;
        MethodResult serial, parallel;
        const double ts = time_best_of(reps, [&] { serial = lasso_granger_serial(ds.data, cfg); });
        const double tp = time_best_of(reps, [&] { parallel = lasso_granger(ds.data, cfg); });
        std::printf("%-14s %12.2f %12.2f %8.2fx %12.3g\n", "lasso_granger", ts, tp, ts / tp,
                    max_abs_diff(serial.scores, parallel.scores));
    }
    {
        cfg.method = MethodKind::pcmci;
        cfg.tau_max = 3;
        cfg.alpha_sig = 0.05;
        MethodResult serial, parallel;
        const double ts = time_best_of(reps, [&] { serial = pcmci_serial(ds.data, cfg); });
        const double tp = time_best_of(reps, [&] { parallel = pcmci(ds.data, cfg); });
        std::printf("%-14s %12.2f %12.2f %8.2fx %12.3g\n", "pcmci", ts, tp, ts / tp,
                    max_abs_diff(serial.scores, parallel.scores));
    }
    return 0;
}
