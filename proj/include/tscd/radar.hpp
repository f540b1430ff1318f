#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tscd/eval.hpp"

namespace tscd {

struct RadarOptions {
    std::string metric = "auprc";  // or "auroc"
    std::optional<std::size_t> d;  // setting filter; may stay empty when the
    std::optional<std::size_t> t_len;  // aggregate holds a single setting
    std::optional<double> forcing;
};

/// One polygon per method over the scenario axes (fixed clockwise order,
/// vanilla first), radial scale 0-100, legend with method names. Writes a
/// standalone SVG.
void render_radar(const std::vector<AggregateRow>& rows, const RadarOptions& options,
                  const std::string& out_path);

}  // namespace tscd
