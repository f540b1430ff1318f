#include "tscd/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "tscd/io.hpp"
#include "tscd/rng.hpp"

namespace tscd {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& field, const std::string& message) {
    throw std::invalid_argument("config." + field + ": " + message);
}

template <typename T>
std::vector<T> parse_list(const json& j, const std::string& field) {
    if (!j.is_array() || j.empty()) fail(field, "must be a nonempty array");
    std::vector<T> out;
    for (const auto& v : j) out.push_back(v.get<T>());
    return out;
}

void assign_if(const json& j, const char* key, std::optional<double>& dst) {
    if (j.contains(key)) dst = j.at(key).get<double>();
}

}  // namespace

void ExperimentConfig::validate() const {
    if (d_list.empty()) fail("d", "must be a nonempty array");
    if (t_list.empty()) fail("T", "must be a nonempty array");
    if (model == BaseModel::nonlinear && f_list.empty()) fail("F", "must be a nonempty array");
    if (scenarios.empty()) fail("scenarios", "must be a nonempty array");
    if (methods.empty()) fail("methods", "must be a nonempty array");
    if (seeds.empty()) fail("seeds", "must be a nonempty array");
    if (modes.empty()) fail("modes", "must be a nonempty array");

    std::set<std::uint64_t> seen_seeds(seeds.begin(), seeds.end());
    if (seen_seeds.size() != seeds.size()) fail("seeds", "seeds must be distinct");

    std::set<std::string> labels;
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
        const ScenarioConfig& s = scenarios[i];
        const std::string field = "scenarios[" + std::to_string(i) + "]";
        if (!labels.insert(s.label).second) fail(field, "duplicate label '" + s.label + "'");
        if (s.alpha && !(*s.alpha >= 0.0)) fail(field + ".alpha", "must be >= 0");
        if (s.zeta && !(*s.zeta >= 0.0 && *s.zeta <= 1.0)) fail(field + ".zeta", "must be in [0,1]");
        if (s.beta && !(*s.beta >= 0.0 && *s.beta <= 1.0)) fail(field + ".beta", "must be in [0,1]");
        if (s.gamma && !(*s.gamma >= 0.0 && *s.gamma < 1.0)) {
            fail(field + ".gamma", "must be in [0,1)");
        }
        if (s.period && *s.period < 2) fail(field + ".period", "must be >= 2");
        if (s.gp_ell && !(*s.gp_ell > 0.0)) fail(field + ".ell", "must be > 0");
        if (s.kind == ScenarioKind::tv_coefficients && model != BaseModel::linear) {
            fail(field, "tv_coefficients applies to the linear model only");
        }
    }

    for (std::size_t i = 0; i < methods.size(); ++i) {
        const MethodGrid& m = methods[i];
        const std::string field = "methods[" + std::to_string(i) + "]";
        if (m.tau_max.empty()) fail(field + ".tau_max", "must be a nonempty array");
        for (std::size_t tau : m.tau_max) {
            if (tau < 1) fail(field + ".tau_max", "entries must be >= 1");
        }
        if (m.method == MethodKind::pcmci) {
            if (m.alphas.empty()) fail(field + ".alpha", "must be a nonempty array");
            for (double a : m.alphas) {
                if (!(a > 0.0 && a < 1.0)) fail(field + ".alpha", "entries must be in (0,1)");
            }
        } else {
            if (m.thresholds.empty()) fail(field + ".threshold", "must be a nonempty array");
            for (double t : m.thresholds) {
                if (!(t >= 0.0)) fail(field + ".threshold", "entries must be >= 0");
            }
        }
        if (m.method == MethodKind::lgc) {
            if (m.lambdas.empty()) fail(field + ".lambda", "must be a nonempty array");
            for (double l : m.lambdas) {
                if (!(l >= 0.0)) fail(field + ".lambda", "entries must be >= 0");
            }
        }
    }

    // The base spec itself (sizes come from the grid, so check one cell).
    BaseSpec probe = base;
    probe.model = model;
    probe.d = d_list.front();
    probe.t_len = t_list.front();
    if (model == BaseModel::nonlinear) probe.forcing = f_list.front();
    probe.validate();
}

ExperimentConfig parse_config_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
    }

    ExperimentConfig config;
    if (doc.contains("master_seed")) config.master_seed = doc["master_seed"].get<std::uint64_t>();
    if (doc.contains("model")) {
        const std::string m = doc["model"].get<std::string>();
        if (m == "linear") {
            config.model = BaseModel::linear;
        } else if (m == "nonlinear") {
            config.model = BaseModel::nonlinear;
        } else {
            fail("model", "must be 'linear' or 'nonlinear'");
        }
    }
    if (doc.contains("d")) config.d_list = parse_list<std::size_t>(doc["d"], "d");
    if (doc.contains("T")) config.t_list = parse_list<std::size_t>(doc["T"], "T");
    if (doc.contains("F")) config.f_list = parse_list<double>(doc["F"], "F");
    if (doc.contains("seeds")) config.seeds = parse_list<std::uint64_t>(doc["seeds"], "seeds");
    if (doc.contains("jobs")) config.jobs = doc["jobs"].get<std::size_t>();
    if (doc.contains("out_dir")) config.out_dir = doc["out_dir"].get<std::string>();
    if (doc.contains("persist_datasets")) {
        config.persist_datasets = doc["persist_datasets"].get<bool>();
    }
    if (doc.contains("persist_scores")) config.persist_scores = doc["persist_scores"].get<bool>();

    if (doc.contains("base")) {
        const json& b = doc["base"];
        BaseSpec& base = config.base;
        if (b.contains("tau_max")) base.tau_max = b["tau_max"].get<std::size_t>();
        if (b.contains("parents_per_var")) {
            base.parents_per_var = b["parents_per_var"].get<std::size_t>();
        }
        if (b.contains("coeff_min")) base.coeff_lo = b["coeff_min"].get<double>();
        if (b.contains("coeff_max")) base.coeff_hi = b["coeff_max"].get<double>();
        if (b.contains("noise_scale")) base.noise_scale = b["noise_scale"].get<double>();
        if (b.contains("spectral_radius_cap")) {
            base.spectral_radius_cap = b["spectral_radius_cap"].get<double>();
        }
        if (b.contains("var_burn_in")) base.var_burn_in = b["var_burn_in"].get<std::size_t>();
        if (b.contains("dt_sample")) base.dt_sample = b["dt_sample"].get<double>();
        if (b.contains("substeps")) base.substeps = b["substeps"].get<std::size_t>();
        if (b.contains("lorenz_burn_in")) {
            base.lorenz_burn_in = b["lorenz_burn_in"].get<std::size_t>();
        }
        if (b.contains("observation_noise")) {
            base.observation_noise = b["observation_noise"].get<double>();
        }
    }

    if (doc.contains("scenarios")) {
        if (!doc["scenarios"].is_array()) fail("scenarios", "must be an array");
        for (const json& s : doc["scenarios"]) {
            ScenarioConfig sc;
            const std::string kind_name = s.at("kind").get<std::string>();
            const auto kind = parse_scenario_kind(kind_name);
            if (!kind) fail("scenarios", "unknown kind '" + kind_name + "'");
            sc.kind = *kind;
            sc.label = s.contains("label") ? s["label"].get<std::string>()
                                           : std::string(scenario_kind_name(sc.kind));
            assign_if(s, "alpha", sc.alpha);
            assign_if(s, "m", sc.gp_m);
            assign_if(s, "nu", sc.gp_nu);
            assign_if(s, "ell", sc.gp_ell);
            assign_if(s, "zeta", sc.zeta);
            assign_if(s, "strength", sc.strength);
            assign_if(s, "beta", sc.beta);
            assign_if(s, "gamma", sc.gamma);
            assign_if(s, "rho", sc.rho);
            assign_if(s, "eta", sc.eta);
            assign_if(s, "sigma_tv", sc.sigma_tv);
            if (s.contains("period")) sc.period = s["period"].get<std::size_t>();
            config.scenarios.push_back(std::move(sc));
        }
    }

    if (doc.contains("methods")) {
        if (!doc["methods"].is_array()) fail("methods", "must be an array");
        for (const json& m : doc["methods"]) {
            MethodGrid grid;
            const std::string name = m.at("method").get<std::string>();
            const auto kind = parse_method_kind(name);
            if (!kind) fail("methods", "unknown method '" + name + "'");
            grid.method = *kind;
            if (m.contains("tau_max")) {
                grid.tau_max = parse_list<std::size_t>(m["tau_max"], "methods.tau_max");
            }
            if (m.contains("threshold")) {
                grid.thresholds = parse_list<double>(m["threshold"], "methods.threshold");
            }
            if (m.contains("lambda")) {
                grid.lambdas = parse_list<double>(m["lambda"], "methods.lambda");
            }
            if (m.contains("alpha")) {
                grid.alphas = parse_list<double>(m["alpha"], "methods.alpha");
            }
            config.methods.push_back(std::move(grid));
        }
    }

    if (doc.contains("modes")) {
        config.modes.clear();
        for (const json& m : doc["modes"]) {
            const std::string name = m.get<std::string>();
            const auto mode = parse_selection_mode(name);
            if (!mode) fail("modes", "unknown mode '" + name + "'");
            config.modes.push_back(*mode);
        }
    }

    config.validate();
    return config;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_json(buf.str());
}

ScenarioSpec make_scenario_spec(const ExperimentConfig& config, const ScenarioConfig& scenario,
                                std::size_t d, std::size_t t_len, std::optional<double> forcing,
                                std::uint64_t trial_seed) {
    ScenarioSpec spec;
    spec.kind = scenario.kind;
    spec.base = config.base;
    spec.base.model = config.model;
    spec.base.d = d;
    spec.base.t_len = t_len;
    if (forcing) spec.base.forcing = *forcing;
    spec.seed = trial_seed;

    if (scenario.alpha) spec.alpha = *scenario.alpha;
    // Nonstationarity defaults depend on the base model and forcing.
    if (config.model == BaseModel::linear) {
        spec.gp_m = 1.0;
        spec.gp_nu = 1.0;
    } else if (forcing && *forcing >= 25.0) {
        spec.gp_m = 3.5;
        spec.gp_nu = 2.0;
    } else {
        spec.gp_m = 2.5;
        spec.gp_nu = 2.0;
    }
    if (scenario.gp_m) spec.gp_m = *scenario.gp_m;
    if (scenario.gp_nu) spec.gp_nu = *scenario.gp_nu;
    if (scenario.gp_ell) spec.gp_ell = *scenario.gp_ell;
    if (scenario.zeta) spec.zeta = *scenario.zeta;
    if (scenario.strength) spec.strength = *scenario.strength;
    if (scenario.beta) spec.beta = *scenario.beta;
    if (scenario.gamma) spec.gamma = *scenario.gamma;
    if (scenario.rho) spec.rho = *scenario.rho;
    if (scenario.eta) spec.eta = *scenario.eta;
    if (scenario.period) spec.period = *scenario.period;
    if (scenario.sigma_tv) spec.sigma_tv = *scenario.sigma_tv;
    return spec;
}

std::string scenario_param_string(const ScenarioSpec& spec) {
    switch (spec.kind) {
        case ScenarioKind::vanilla:
        case ScenarioKind::standardized:
        case ScenarioKind::minmax:
        case ScenarioKind::exponential_noise:
            return "";
        case ScenarioKind::measurement_error:
            return "alpha=" + format_double(spec.alpha);
        case ScenarioKind::nonstationary:
            return "m=" + format_double(spec.gp_m) + ";nu=" + format_double(spec.gp_nu) +
                   ";ell=" + format_double(spec.gp_ell);
        case ScenarioKind::confounders:
            return "zeta=" + format_double(spec.zeta) +
                   ";strength=" + format_double(spec.strength);
        case ScenarioKind::mixed:
            return "beta=" + format_double(spec.beta);
        case ScenarioKind::missing:
            return "gamma=" + format_double(spec.gamma);
        case ScenarioKind::trend_season:
            return "rho=" + format_double(spec.rho) + ";eta=" + format_double(spec.eta) +
                   ";P=" + std::to_string(spec.period);
        case ScenarioKind::tv_coefficients:
            return "sigma_tv=" + format_double(spec.sigma_tv);
    }
    return "";
}

std::string config_hash(const ExperimentConfig& config) {
    json doc;
    doc["master_seed"] = config.master_seed;
    doc["model"] = config.model == BaseModel::linear ? "linear" : "nonlinear";
    doc["d"] = config.d_list;
    doc["T"] = config.t_list;
    if (config.model == BaseModel::nonlinear) doc["F"] = config.f_list;
    doc["seeds"] = config.seeds;
    json base;
    base["tau_max"] = config.base.tau_max;
    base["parents_per_var"] = config.base.parents_per_var;
    base["coeff_min"] = config.base.coeff_lo;
    base["coeff_max"] = config.base.coeff_hi;
    base["noise_scale"] = config.base.noise_scale;
    base["spectral_radius_cap"] = config.base.spectral_radius_cap;
    base["var_burn_in"] = config.base.var_burn_in;
    base["dt_sample"] = config.base.dt_sample;
    base["substeps"] = config.base.substeps;
    base["lorenz_burn_in"] = config.base.lorenz_burn_in;
    base["observation_noise"] = config.base.observation_noise;
    doc["base"] = std::move(base);
    json scenarios = json::array();
    for (const ScenarioConfig& s : config.scenarios) {
        // Resolve per-setting so hash reflects the numbers actually used.
        json entry;
        entry["kind"] = std::string(scenario_kind_name(s.kind));
        entry["label"] = s.label;
        for (std::size_t d : config.d_list) {
            for (std::size_t t : config.t_list) {
                if (config.model == BaseModel::nonlinear) {
                    for (double f : config.f_list) {
                        ScenarioSpec spec = make_scenario_spec(config, s, d, t, f, 0);
                        entry["param"].push_back(scenario_param_string(spec));
                    }
                } else {
                    ScenarioSpec spec = make_scenario_spec(config, s, d, t, std::nullopt, 0);
                    entry["param"].push_back(scenario_param_string(spec));
                }
            }
        }
        scenarios.push_back(std::move(entry));
    }
    doc["scenarios"] = std::move(scenarios);
    json methods = json::array();
    for (const MethodGrid& m : config.methods) {
        json entry;
        entry["method"] = std::string(method_kind_name(m.method));
        entry["tau_max"] = m.tau_max;
        if (m.method == MethodKind::pcmci) {
            entry["alpha"] = m.alphas;
        } else {
            entry["threshold"] = m.thresholds;
        }
        if (m.method == MethodKind::lgc) entry["lambda"] = m.lambdas;
        methods.push_back(std::move(entry));
    }
    doc["methods"] = std::move(methods);
    json modes = json::array();
    for (SelectionMode m : config.modes) modes.push_back(std::string(selection_mode_name(m)));
    doc["modes"] = std::move(modes);

    const std::string canonical = doc.dump();
    std::uint64_t h = 1469598103934665603ULL;
    h = hash_bytes(h, canonical.data(), canonical.size());
    h = mix64(h);
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace tscd
