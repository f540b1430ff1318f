#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace tscd {

/// T x d observation matrix with an optional per-cell missing mask.
struct TimeSeriesMatrix {
    std::size_t length = 0;  // T
    std::size_t width = 0;   // d
    std::vector<double> values;                          // row-major T x d
    std::optional<std::vector<std::uint8_t>> missing_mask;  // 1 = missing

    TimeSeriesMatrix() = default;
    TimeSeriesMatrix(std::size_t t, std::size_t d)
        : length(t), width(d), values(t * d, 0.0) {}

    double& at(std::size_t t, std::size_t i) { return values[t * width + i]; }
    double at(std::size_t t, std::size_t i) const { return values[t * width + i]; }

    bool is_missing(std::size_t t, std::size_t i) const {
        return missing_mask && (*missing_mask)[t * width + i] != 0;
    }

    bool operator==(const TimeSeriesMatrix&) const = default;
};

/// Ground truth: d x d summary adjacency ([p*d+q] = edge p -> q) plus an
/// optional window adjacency with tau_max + 1 lag layers (layer 0 =
/// contemporaneous).
struct CausalGraph {
    std::size_t d = 0;
    std::optional<std::size_t> tau_max;
    std::vector<std::uint8_t> summary;
    std::optional<std::vector<std::uint8_t>> window;

    CausalGraph() = default;
    explicit CausalGraph(std::size_t dim) : d(dim), summary(dim * dim, 0) {}

    bool edge(std::size_t p, std::size_t q) const { return summary[p * d + q] != 0; }
    void set_edge(std::size_t p, std::size_t q, bool present = true) {
        summary[p * d + q] = present ? 1 : 0;
    }

    bool window_edge(std::size_t lag, std::size_t p, std::size_t q) const {
        return window && (*window)[(lag * d + p) * d + q] != 0;
    }

    std::size_t off_diagonal_edge_count() const {
        std::size_t n = 0;
        for (std::size_t p = 0; p < d; ++p)
            for (std::size_t q = 0; q < d; ++q)
                if (p != q && edge(p, q)) ++n;
        return n;
    }

    bool operator==(const CausalGraph&) const = default;
};

}  // namespace tscd
