#include "tscd/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace tscd {

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    return in;
}

std::string csv_quote(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string quoted = "\"";
    for (char c : field) {
        if (c == '"') quoted += '"';
        quoted += c;
    }
    quoted += '"';
    return quoted;
}

std::vector<std::string> csv_split(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

double parse_double(const std::string& s, const std::string& context) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw std::runtime_error("bad number '" + s + "' in " + context);
    }
    return v;
}

std::string format_metric(const std::optional<double>& v) {
    if (!v) return "";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", *v * 100.0);
    return buf;
}

std::optional<double> parse_metric(const std::string& s, const std::string& context) {
    if (s.empty()) return std::nullopt;
    return parse_double(s, context) / 100.0;
}

}  // namespace

std::string format_double(double v) {
    char buf[48];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw std::runtime_error("format_double failed");
    return std::string(buf, ptr);
}

void write_timeseries_csv(const TimeSeriesMatrix& x, const std::string& path) {
    std::ofstream out = open_out(path);
    for (std::size_t i = 0; i < x.width; ++i) {
        if (i) out << ',';
        out << "var_" << i;
    }
    out << '\n';
    for (std::size_t t = 0; t < x.length; ++t) {
        for (std::size_t i = 0; i < x.width; ++i) {
            if (i) out << ',';
            if (!x.is_missing(t, i)) out << format_double(x.at(t, i));
        }
        out << '\n';
    }
}

TimeSeriesMatrix read_timeseries_csv(const std::string& path) {
    std::ifstream in = open_in(path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty time-series file: " + path);
    const std::size_t d = csv_split(line).size();

    std::vector<double> values;
    std::vector<std::uint8_t> mask;
    bool any_missing = false;
    std::size_t t_len = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto fields = csv_split(line);
        if (fields.size() != d) throw std::runtime_error("ragged row in " + path);
        for (const auto& f : fields) {
            if (f.empty()) {
                values.push_back(0.0);
                mask.push_back(1);
                any_missing = true;
            } else {
                values.push_back(parse_double(f, path));
                mask.push_back(0);
            }
        }
        ++t_len;
    }
    TimeSeriesMatrix x(t_len, d);
    x.values = std::move(values);
    if (any_missing) x.missing_mask = std::move(mask);
    return x;
}

void write_graph_json(const CausalGraph& g, const std::string& path) {
    nlohmann::json doc;
    doc["d"] = g.d;
    if (g.tau_max) {
        doc["tau_max"] = *g.tau_max;
    } else {
        doc["tau_max"] = nullptr;
    }
    auto& summary = doc["summary"] = nlohmann::json::array();
    for (std::size_t p = 0; p < g.d; ++p) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t q = 0; q < g.d; ++q) row.push_back(g.edge(p, q) ? 1 : 0);
        summary.push_back(std::move(row));
    }
    if (g.window) {
        auto& window = doc["window"] = nlohmann::json::array();
        const std::size_t layers = *g.tau_max + 1;
        for (std::size_t l = 0; l < layers; ++l) {
            nlohmann::json layer = nlohmann::json::array();
            for (std::size_t p = 0; p < g.d; ++p) {
                nlohmann::json row = nlohmann::json::array();
                for (std::size_t q = 0; q < g.d; ++q) row.push_back(g.window_edge(l, p, q) ? 1 : 0);
                layer.push_back(std::move(row));
            }
            window.push_back(std::move(layer));
        }
    } else {
        doc["window"] = nullptr;
    }
    open_out(path) << doc.dump(2) << '\n';
}

CausalGraph read_graph_json(const std::string& path) {
    nlohmann::json doc = nlohmann::json::parse(open_in(path));
    CausalGraph g(doc.at("d").get<std::size_t>());
    if (!doc.at("tau_max").is_null()) g.tau_max = doc["tau_max"].get<std::size_t>();
    const auto& summary = doc.at("summary");
    if (summary.size() != g.d) throw std::runtime_error("graph summary shape mismatch: " + path);
    for (std::size_t p = 0; p < g.d; ++p)
        for (std::size_t q = 0; q < g.d; ++q)
            g.summary[p * g.d + q] = summary[p][q].get<int>() ? 1 : 0;
    if (!doc.at("window").is_null()) {
        const auto& window = doc["window"];
        const std::size_t layers = window.size();
        if (!g.tau_max || layers != *g.tau_max + 1) {
            throw std::runtime_error("graph window shape mismatch: " + path);
        }
        g.window.emplace(layers * g.d * g.d, 0);
        for (std::size_t l = 0; l < layers; ++l)
            for (std::size_t p = 0; p < g.d; ++p)
                for (std::size_t q = 0; q < g.d; ++q)
                    (*g.window)[(l * g.d + p) * g.d + q] = window[l][p][q].get<int>() ? 1 : 0;
    }
    return g;
}

void write_score_csv(const Matrix& scores, const std::string& path) {
    std::ofstream out = open_out(path);
    for (std::size_t p = 0; p < scores.rows(); ++p) {
        for (std::size_t q = 0; q < scores.cols(); ++q) {
            if (q) out << ',';
            out << format_double(scores(p, q));
        }
        out << '\n';
    }
}

Matrix read_score_csv(const std::string& path) {
    std::ifstream in = open_in(path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto fields = csv_split(line);
        std::vector<double> row;
        row.reserve(fields.size());
        for (const auto& f : fields) row.push_back(parse_double(f, path));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error("empty score matrix: " + path);
    Matrix m(rows.size(), rows[0].size());
    for (std::size_t p = 0; p < rows.size(); ++p) {
        if (rows[p].size() != m.cols()) throw std::runtime_error("ragged score matrix: " + path);
        for (std::size_t q = 0; q < m.cols(); ++q) m(p, q) = rows[p][q];
    }
    return m;
}

void write_results_csv(const std::vector<EvalRecord>& records, const std::string& path) {
    std::ofstream out = open_out(path);
    out << "scenario,param,d,t,f,seed,method,config_id,config_json,auroc,auprc\n";
    for (const EvalRecord& r : records) {
        out << csv_quote(r.scenario) << ',' << csv_quote(r.param) << ',' << r.d << ',' << r.t_len
            << ',' << (r.forcing ? format_double(*r.forcing) : std::string()) << ',' << r.seed
            << ',' << r.method << ',' << csv_quote(r.config_id) << ','
            << csv_quote(r.config_json) << ',' << format_metric(r.auroc) << ','
            << format_metric(r.auprc) << '\n';
    }
}

std::vector<EvalRecord> read_results_csv(const std::string& path) {
    std::ifstream in = open_in(path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty results file: " + path);
    std::vector<EvalRecord> records;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = csv_split(line);
        if (f.size() != 11) throw std::runtime_error("bad results row in " + path);
        EvalRecord r;
        r.scenario = f[0];
        r.param = f[1];
        r.d = static_cast<std::size_t>(parse_double(f[2], path));
        r.t_len = static_cast<std::size_t>(parse_double(f[3], path));
        if (!f[4].empty()) r.forcing = parse_double(f[4], path);
        r.seed = static_cast<std::uint64_t>(parse_double(f[5], path));
        r.method = f[6];
        r.config_id = f[7];
        r.config_json = f[8];
        r.auroc = parse_metric(f[9], path);
        r.auprc = parse_metric(f[10], path);
        records.push_back(std::move(r));
    }
    return records;
}

void write_aggregate_csv(const std::vector<AggregateRow>& rows, const std::string& path) {
    std::ofstream out = open_out(path);
    out << "scenario,d,t,f,method,mode,mean_auroc,std_auroc,mean_auprc,std_auprc,n\n";
    char buf[128];
    for (const AggregateRow& r : rows) {
        std::snprintf(buf, sizeof(buf), "%.4f,%.4f,%.4f,%.4f", r.mean_auroc, r.std_auroc,
                      r.mean_auprc, r.std_auprc);
        out << csv_quote(r.scenario) << ',' << r.d << ',' << r.t_len << ','
            << (r.forcing ? format_double(*r.forcing) : std::string()) << ',' << r.method << ','
            << r.mode << ',' << buf << ',' << r.n << '\n';
    }
}

std::vector<AggregateRow> read_aggregate_csv(const std::string& path) {
    std::ifstream in = open_in(path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty aggregate file: " + path);
    std::vector<AggregateRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = csv_split(line);
        if (f.size() != 11) throw std::runtime_error("bad aggregate row in " + path);
        AggregateRow r;
        r.scenario = f[0];
        r.d = static_cast<std::size_t>(parse_double(f[1], path));
        r.t_len = static_cast<std::size_t>(parse_double(f[2], path));
        if (!f[3].empty()) r.forcing = parse_double(f[3], path);
        r.method = f[4];
        r.mode = f[5];
        r.mean_auroc = parse_double(f[6], path);
        r.std_auroc = parse_double(f[7], path);
        r.mean_auprc = parse_double(f[8], path);
        r.std_auprc = parse_double(f[9], path);
        r.n = static_cast<std::size_t>(parse_double(f[10], path));
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace tscd
