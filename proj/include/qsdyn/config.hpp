#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qsdyn/map.hpp"
#include "qsdyn/pullback.hpp"

namespace qsdyn {

class config_error : public std::runtime_error {
public:
    explicit config_error(std::vector<std::string> errors)
        : std::runtime_error(join(errors)), errors(std::move(errors)) {}
    std::vector<std::string> errors;

private:
    static std::string join(const std::vector<std::string>& es) {
        std::string s = "invalid configuration:";
        for (const auto& e : es) s += "\n  - " + e;
        return s;
    }
};

struct Budgets {
    int grid_n = 1 << 12;        // measure partition cells
    double tol = 1e-6;           // mme stopping tolerance (sup-norm cdf change)
    int iter_max = 200;
    int entropy_n_max = 16;
    int exactness_depth = 10;    // dyadic depth k of the exactness certificate
    int exactness_n_max = 50;
    int period_max = 8;
    double crit_radius = 0.01;   // r of the semi-hyperbolicity scan
    int scan_depth = 20;         // n_max of the semi-hyperbolicity scan
    int scan_grid = 1 << 10;
    long long recurrence_n_max = 10000;
    int esc_delta_log2 = 6;      // test intervals of length 2^-k
    int esc_n_max = 14;
    int scale_count = 24;        // radii / epsilon values per scan
    double scale_min = 0.0;      // 0 = auto: 4 / grid_n
    double scale_max = 0.1;
    int x_grid = 1 << 10;        // uniform scan centers
    int seed_depth = 2048;       // critical-orbit points added to scan centers
    CritSet criticality_set = CritSet::turning;

    double scale_lo() const { return scale_min > 0.0 ? scale_min : 4.0 / grid_n; }
};

struct Thresholds {
    double gap = 1e-3;            // recurrence gap below this means recurrent
    double c_star_max = 64.0;
    double k_max = 64.0;
    int plateau_window = 5;       // minimal trailing window that must be flat
    double slope_residual_max = 1e-2;
    int growth_decades = 3;
    double growth_factor = 2.0;
};

struct EmitFlags {
    bool cdf_csv = true;
    bool f_csv = true;
    bool doubling_csv = true;
    bool criticality_csv = true;
};

struct RunConfig {
    MapDescriptor map;
    Budgets budgets;
    Thresholds thresholds;
    std::string output_dir = ".";
    EmitFlags emit;
};

namespace detail {

inline void line_col(const std::string& text, std::size_t byte, int& line, int& col) {
    line = 1;
    col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else
            ++col;
    }
}

class ConfigReader {
public:
    ConfigReader(const nlohmann::json& j, std::string path, std::vector<std::string>& errors)
        : j_(j), path_(std::move(path)), errors_(errors) {}

    template <typename T>
    void get(const char* key, T& out) {
        mark(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const nlohmann::json::exception&) {
            errors_.push_back(path_ + key + ": wrong type");
        }
    }

    bool has(const char* key) {
        mark(key);
        return j_.contains(key);
    }

    const nlohmann::json* sub(const char* key) {
        mark(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }

    void finish() {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            bool known = false;
            for (const auto& k : seen_)
                if (k == it.key()) known = true;
            if (!known) errors_.push_back(path_ + it.key() + ": unknown key");
        }
    }

private:
    const nlohmann::json& j_;
    std::string path_;
    std::vector<std::string>& errors_;
    std::vector<std::string> seen_;

    void mark(const char* key) { seen_.emplace_back(key); }
};

} // namespace detail

/// Parse and validate a JSON run configuration. Every violation is collected
/// and reported at once; unknown keys anywhere are errors.
inline RunConfig parse_config(const std::string& text) {
    std::vector<std::string> errors;
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        int line = 0, col = 0;
        detail::line_col(text, e.byte > 0 ? e.byte - 1 : 0, line, col);
        throw config_error({"parse error at line " + std::to_string(line) + ", column " +
                            std::to_string(col) + ": " + e.what()});
    }
    if (!j.is_object()) throw config_error({"top level must be an object"});

    RunConfig cfg;
    detail::ConfigReader top(j, "", errors);

    if (const auto* jm = top.sub("map")) {
        detail::ConfigReader m(*jm, "map.", errors);
        std::string family;
        m.get("family", family);
        if (family.empty())
            errors.push_back("map.family: required");
        else if (auto f = family_from_name(family))
            cfg.map.family = *f;
        else
            errors.push_back("map.family: unknown family '" + family + "'");
        if (m.has("params")) {
            m.get("params", cfg.map.params);
        } else {
            errors.push_back("map.params: required");
        }
        if (m.has("critical_orders")) {
            std::vector<double> ords;
            m.get("critical_orders", ords);
            cfg.map.critical_orders = std::move(ords);
        }
        if (const auto* je = m.sub("extra_critical_points")) {
            if (!je->is_array()) {
                errors.push_back("map.extra_critical_points: must be an array");
            } else {
                for (const auto& e : *je) {
                    detail::ConfigReader p(e, "map.extra_critical_points[].", errors);
                    double loc = -1.0, ord = 0.0;
                    p.get("location", loc);
                    p.get("order", ord);
                    p.finish();
                    cfg.map.extra_critical_points.emplace_back(loc, ord);
                }
            }
        }
        m.get("core_rescale", cfg.map.core_rescale);
        m.finish();
    } else {
        errors.push_back("map: required");
    }

    if (const auto* jb = top.sub("budgets")) {
        detail::ConfigReader b(*jb, "budgets.", errors);
        b.get("grid_n", cfg.budgets.grid_n);
        b.get("tol", cfg.budgets.tol);
        b.get("iter_max", cfg.budgets.iter_max);
        b.get("entropy_n_max", cfg.budgets.entropy_n_max);
        b.get("exactness_depth", cfg.budgets.exactness_depth);
        b.get("exactness_n_max", cfg.budgets.exactness_n_max);
        b.get("period_max", cfg.budgets.period_max);
        b.get("crit_radius", cfg.budgets.crit_radius);
        b.get("scan_depth", cfg.budgets.scan_depth);
        b.get("scan_grid", cfg.budgets.scan_grid);
        b.get("recurrence_n_max", cfg.budgets.recurrence_n_max);
        b.get("esc_delta_log2", cfg.budgets.esc_delta_log2);
        b.get("esc_n_max", cfg.budgets.esc_n_max);
        b.get("scale_count", cfg.budgets.scale_count);
        b.get("scale_min", cfg.budgets.scale_min);
        b.get("scale_max", cfg.budgets.scale_max);
        b.get("x_grid", cfg.budgets.x_grid);
        b.get("seed_depth", cfg.budgets.seed_depth);
        if (b.has("criticality_set")) {
            std::string cs;
            b.get("criticality_set", cs);
            if (cs == "turning")
                cfg.budgets.criticality_set = CritSet::turning;
            else if (cs == "all")
                cfg.budgets.criticality_set = CritSet::all;
            else
                errors.push_back("budgets.criticality_set: must be 'turning' or 'all'");
        }
        b.finish();
    }

    if (const auto* jt = top.sub("thresholds")) {
        detail::ConfigReader t(*jt, "thresholds.", errors);
        t.get("gap", cfg.thresholds.gap);
        t.get("c_star_max", cfg.thresholds.c_star_max);
        t.get("k_max", cfg.thresholds.k_max);
        t.get("plateau_window", cfg.thresholds.plateau_window);
        t.get("slope_residual_max", cfg.thresholds.slope_residual_max);
        t.get("growth_decades", cfg.thresholds.growth_decades);
        t.get("growth_factor", cfg.thresholds.growth_factor);
        t.finish();
    }

    top.get("output_dir", cfg.output_dir);

    if (const auto* je = top.sub("emit")) {
        detail::ConfigReader e(*je, "emit.", errors);
        e.get("cdf_csv", cfg.emit.cdf_csv);
        e.get("f_csv", cfg.emit.f_csv);
        e.get("doubling_csv", cfg.emit.doubling_csv);
        e.get("criticality_csv", cfg.emit.criticality_csv);
        e.finish();
    }
    top.finish();

    // numeric validity
    auto positive = [&](double v, const char* name) {
        if (!(v > 0.0)) errors.push_back(std::string(name) + ": must be positive");
    };
    positive(cfg.budgets.grid_n, "budgets.grid_n");
    positive(cfg.budgets.tol, "budgets.tol");
    positive(cfg.budgets.iter_max, "budgets.iter_max");
    positive(cfg.budgets.entropy_n_max, "budgets.entropy_n_max");
    positive(cfg.budgets.exactness_depth, "budgets.exactness_depth");
    positive(cfg.budgets.exactness_n_max, "budgets.exactness_n_max");
    positive(cfg.budgets.period_max, "budgets.period_max");
    positive(cfg.budgets.crit_radius, "budgets.crit_radius");
    positive(cfg.budgets.scan_depth, "budgets.scan_depth");
    positive(cfg.budgets.scan_grid, "budgets.scan_grid");
    positive(static_cast<double>(cfg.budgets.recurrence_n_max), "budgets.recurrence_n_max");
    positive(cfg.budgets.esc_delta_log2, "budgets.esc_delta_log2");
    positive(cfg.budgets.esc_n_max, "budgets.esc_n_max");
    positive(cfg.budgets.scale_count - 1, "budgets.scale_count");
    positive(cfg.budgets.scale_max, "budgets.scale_max");
    positive(cfg.budgets.x_grid, "budgets.x_grid");
    positive(cfg.thresholds.gap, "thresholds.gap");
    positive(cfg.thresholds.c_star_max, "thresholds.c_star_max");
    positive(cfg.thresholds.k_max, "thresholds.k_max");
    positive(cfg.thresholds.slope_residual_max, "thresholds.slope_residual_max");
    positive(cfg.thresholds.growth_factor, "thresholds.growth_factor");
    if (cfg.budgets.scale_min < 0.0) errors.push_back("budgets.scale_min: must be >= 0");
    if (cfg.output_dir.empty()) errors.push_back("output_dir: must not be empty");

    if (!errors.empty()) throw config_error(std::move(errors));
    return cfg;
}

inline nlohmann::ordered_json descriptor_to_json(const MapDescriptor& d) {
    nlohmann::ordered_json m;
    m["family"] = family_name(d.family);
    m["params"] = d.params;
    if (d.critical_orders) m["critical_orders"] = *d.critical_orders;
    if (!d.extra_critical_points.empty()) {
        auto arr = nlohmann::ordered_json::array();
        for (auto [loc, ord] : d.extra_critical_points)
            arr.push_back({{"location", loc}, {"order", ord}});
        m["extra_critical_points"] = arr;
    }
    if (d.core_rescale) m["core_rescale"] = true;
    return m;
}

inline nlohmann::ordered_json budgets_to_json(const Budgets& b) {
    nlohmann::ordered_json j;
    j["grid_n"] = b.grid_n;
    j["tol"] = b.tol;
    j["iter_max"] = b.iter_max;
    j["entropy_n_max"] = b.entropy_n_max;
    j["exactness_depth"] = b.exactness_depth;
    j["exactness_n_max"] = b.exactness_n_max;
    j["period_max"] = b.period_max;
    j["crit_radius"] = b.crit_radius;
    j["scan_depth"] = b.scan_depth;
    j["scan_grid"] = b.scan_grid;
    j["recurrence_n_max"] = b.recurrence_n_max;
    j["esc_delta_log2"] = b.esc_delta_log2;
    j["esc_n_max"] = b.esc_n_max;
    j["scale_count"] = b.scale_count;
    j["scale_min"] = b.scale_min;
    j["scale_max"] = b.scale_max;
    j["x_grid"] = b.x_grid;
    j["seed_depth"] = b.seed_depth;
    j["criticality_set"] = b.criticality_set == CritSet::turning ? "turning" : "all";
    return j;
}

inline nlohmann::ordered_json thresholds_to_json(const Thresholds& t) {
    nlohmann::ordered_json j;
    j["gap"] = t.gap;
    j["c_star_max"] = t.c_star_max;
    j["k_max"] = t.k_max;
    j["plateau_window"] = t.plateau_window;
    j["slope_residual_max"] = t.slope_residual_max;
    j["growth_decades"] = t.growth_decades;
    j["growth_factor"] = t.growth_factor;
    return j;
}

/// Canonical serialization; parse_config(serialize_config(c)) reproduces c.
inline std::string serialize_config(const RunConfig& cfg) {
    nlohmann::ordered_json j;
    j["map"] = descriptor_to_json(cfg.map);
    j["budgets"] = budgets_to_json(cfg.budgets);
    j["thresholds"] = thresholds_to_json(cfg.thresholds);
    j["output_dir"] = cfg.output_dir;
    j["emit"] = {{"cdf_csv", cfg.emit.cdf_csv},
                 {"f_csv", cfg.emit.f_csv},
                 {"doubling_csv", cfg.emit.doubling_csv},
                 {"criticality_csv", cfg.emit.criticality_csv}};
    return j.dump(2) + "\n";
}

} // namespace qsdyn
