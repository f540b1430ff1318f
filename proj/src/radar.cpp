#include "tscd/radar.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

namespace tscd {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kCx = 270.0;
constexpr double kCy = 290.0;
constexpr double kRadius = 210.0;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                          "#8c564b", "#17becf", "#7f7f7f", "#bcbd22", "#e377c2"};

// Clockwise axis order, vanilla on top.
const char* kAxisOrder[] = {"vanilla",          "mixed",        "trend_season",
                            "minmax",           "confounders",  "measurement_error",
                            "standardized",     "missing",      "nonstationary"};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

}  // namespace

void render_radar(const std::vector<AggregateRow>& rows, const RadarOptions& options,
                  const std::string& out_path) {
    if (options.metric != "auroc" && options.metric != "auprc") {
        throw std::invalid_argument("render_radar: metric must be 'auroc' or 'auprc'");
    }

    std::vector<AggregateRow> filtered;
    for (const AggregateRow& r : rows) {
        if (options.d && r.d != *options.d) continue;
        if (options.t_len && r.t_len != *options.t_len) continue;
        if (options.forcing && (!r.forcing || *r.forcing != *options.forcing)) continue;
        filtered.push_back(r);
    }
    if (filtered.empty()) throw std::runtime_error("render_radar: no rows match the filter");

    std::set<std::string> settings, modes;
    for (const AggregateRow& r : filtered) {
        settings.insert(std::to_string(r.d) + "|" + std::to_string(r.t_len) + "|" +
                        (r.forcing ? std::to_string(*r.forcing) : std::string()));
        modes.insert(r.mode);
    }
    if (settings.size() > 1) {
        throw std::runtime_error(
            "render_radar: multiple settings present; filter with d/T/F options");
    }
    if (modes.size() > 1) {
        throw std::runtime_error("render_radar: aggregate mixes selection modes");
    }

    // Axes: the known scenario order first, then anything else alphabetically.
    std::set<std::string> present;
    for (const AggregateRow& r : filtered) present.insert(r.scenario);
    std::vector<std::string> axes;
    for (const char* name : kAxisOrder) {
        if (present.count(name)) axes.push_back(name);
    }
    for (const std::string& s : present) {
        if (std::find(axes.begin(), axes.end(), s) == axes.end()) axes.push_back(s);
    }
    if (axes.size() < 3) throw std::runtime_error("render_radar: need at least 3 scenarios");

    std::map<std::string, std::map<std::string, double>> value;  // method -> scenario -> metric
    for (const AggregateRow& r : filtered) {
        value[r.method][r.scenario] =
            options.metric == "auroc" ? r.mean_auroc : r.mean_auprc;
    }
    for (const auto& [method, per_scenario] : value) {
        for (const std::string& axis : axes) {
            if (!per_scenario.count(axis)) {
                throw std::runtime_error("render_radar: method " + method +
                                         " has no row for scenario " + axis);
            }
        }
    }

    auto vertex = [&](std::size_t axis, double radius) {
        const double angle = 2.0 * kPi * static_cast<double>(axis) / axes.size();
        return std::pair{kCx + radius * std::sin(angle), kCy - radius * std::cos(angle)};
    };

    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("render_radar: cannot open " + out_path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"760\" height=\"580\" "
           "viewBox=\"0 0 760 580\">\n";
    out << "<rect width=\"760\" height=\"580\" fill=\"white\"/>\n";

    for (int ring = 1; ring <= 5; ++ring) {
        const double r = kRadius * ring / 5.0;
        out << "<circle cx=\"" << fmt(kCx) << "\" cy=\"" << fmt(kCy) << "\" r=\"" << fmt(r)
            << "\" fill=\"none\" stroke=\"#dddddd\"/>\n";
        out << "<text x=\"" << fmt(kCx + 4.0) << "\" y=\"" << fmt(kCy - r - 2.0)
            << "\" font-size=\"9\" fill=\"#999999\">" << ring * 20 << "</text>\n";
    }
    for (std::size_t a = 0; a < axes.size(); ++a) {
        const auto [x, y] = vertex(a, kRadius);
        out << "<line x1=\"" << fmt(kCx) << "\" y1=\"" << fmt(kCy) << "\" x2=\"" << fmt(x)
            << "\" y2=\"" << fmt(y) << "\" stroke=\"#cccccc\"/>\n";
        const auto [lx, ly] = vertex(a, kRadius + 16.0);
        out << "<text x=\"" << fmt(lx) << "\" y=\"" << fmt(ly)
            << "\" font-size=\"11\" text-anchor=\"middle\" fill=\"#333333\">" << axes[a]
            << "</text>\n";
    }

    std::size_t color = 0;
    for (const auto& [method, per_scenario] : value) {
        const char* stroke = kPalette[color % (sizeof(kPalette) / sizeof(kPalette[0]))];
        out << "<polygon data-method=\"" << method << "\" points=\"";
        for (std::size_t a = 0; a < axes.size(); ++a) {
            const double v = std::clamp(per_scenario.at(axes[a]), 0.0, 100.0);
            const auto [x, y] = vertex(a, kRadius * v / 100.0);
            if (a) out << ' ';
            out << fmt(x) << ',' << fmt(y);
        }
        out << "\" fill=\"" << stroke << "\" fill-opacity=\"0.08\" stroke=\"" << stroke
            << "\" stroke-width=\"2\"/>\n";
        ++color;
    }

    double legend_y = 30.0;
    color = 0;
    for (const auto& [method, per_scenario] : value) {
        (void)per_scenario;
        const char* stroke = kPalette[color % (sizeof(kPalette) / sizeof(kPalette[0]))];
        out << "<rect class=\"legend-swatch\" x=\"600\" y=\"" << fmt(legend_y - 10.0)
            << "\" width=\"14\" height=\"14\" fill=\"" << stroke << "\"/>\n";
        out << "<text class=\"legend-label\" x=\"620\" y=\"" << fmt(legend_y + 2.0)
            << "\" font-size=\"12\" fill=\"#333333\">" << method << "</text>\n";
        legend_y += 22.0;
        ++color;
    }

    out << "<text x=\"30\" y=\"560\" font-size=\"11\" fill=\"#666666\">metric: "
        << options.metric << " (0-100)</text>\n";
    out << "</svg>\n";
}

}  // namespace tscd
