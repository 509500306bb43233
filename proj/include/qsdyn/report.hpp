#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qsdyn/classify.hpp"
#include "qsdyn/config.hpp"

namespace qsdyn {

inline constexpr int kReportSchemaVersion = 1;

namespace detail {

inline std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace detail

inline nlohmann::ordered_json entropy_to_json(const EntropySection& e) {
    nlohmann::ordered_json j;
    j["h_top"] = e.h_top;
    j["s"] = e.s;
    j["n_used"] = e.n_used;
    j["residual"] = e.residual;
    j["s_mme"] = e.s_mme;
    j["routes_agree"] = e.routes_agree;
    return j;
}

inline nlohmann::ordered_json curve_to_json(const std::vector<std::pair<double, double>>& curve) {
    auto arr = nlohmann::ordered_json::array();
    for (auto [a, b] : curve) arr.push_back({a, b});
    return arr;
}

inline nlohmann::ordered_json report_to_json(const ClassificationReport& rep,
                                             const std::string& config_text) {
    nlohmann::ordered_json j;
    j["schema_version"] = kReportSchemaVersion;
    j["map"] = descriptor_to_json(rep.map);
    j["entropy"] = entropy_to_json(rep.entropy);
    {
        nlohmann::ordered_json m;
        m["s_hat"] = rep.mme.s_hat;
        m["iterations"] = rep.mme.iterations;
        m["residual"] = rep.mme.residual;
        m["converged"] = rep.mme.converged;
        m["jacobian_residual"] = rep.mme.jacobian_residual;
        m["invariance_residual"] = rep.mme.invariance_residual;
        m["g_eigen_gap"] = rep.mme.g_eigen_gap;
        j["mme"] = m;
    }
    {
        nlohmann::ordered_json c;
        c["verdict"] = rep.cond1.verdict;
        c["D"] = rep.cond1.D;
        c["r"] = rep.cond1.r;
        c["plateau"] = rep.cond1.plateau;
        j["cond1"] = c;
    }
    {
        nlohmann::ordered_json c;
        c["verdict"] = rep.cond2.verdict;
        auto arr = nlohmann::ordered_json::array();
        for (const auto& g : rep.cond2.gaps)
            arr.push_back({{"location", g.location}, {"gap", g.gap}});
        c["gaps"] = arr;
        j["cond2"] = c;
    }
    {
        nlohmann::ordered_json c;
        c["verdict"] = rep.cond3.verdict;
        c["C_star"] = rep.cond3.C_star;
        c["r_star"] = rep.cond3.r_star;
        c["worst_point"] = rep.cond3.worst_point;
        c["growth"] = rep.cond3.growth;
        c["curve"] = curve_to_json(rep.cond3.curve);
        j["cond3"] = c;
    }
    {
        nlohmann::ordered_json c;
        c["verdict"] = rep.cond4.verdict;
        c["K"] = rep.cond4.K;
        c["slope_residual"] = rep.cond4.slope_residual;
        c["conj_residual"] = rep.cond4.conj_residual;
        c["growth"] = rep.cond4.growth;
        c["curve"] = curve_to_json(rep.cond4.curve);
        j["cond4"] = c;
    }
    j["consistent"] = rep.consistent;
    j["budgets"] = budgets_to_json(rep.budgets);
    j["thresholds"] = thresholds_to_json(rep.thresholds);
    j["diagnostics"] = cross_validate(rep);
    j["config_text"] = config_text;
    return j;
}

/// CSV writer: header row, LF line endings, 17 significant digits.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header) : out_(path) {
        if (!out_) throw std::runtime_error("cannot open " + path + " for writing");
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (i) out_ << ',';
            out_ << header[i];
        }
        out_ << '\n';
    }
    void row(const std::vector<double>& values) {
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i) out_ << ',';
            out_ << detail::fmt17(values[i]);
        }
        out_ << '\n';
    }
    void row_mixed(long long first, const std::vector<double>& rest) {
        out_ << first;
        for (double v : rest) out_ << ',' << detail::fmt17(v);
        out_ << '\n';
    }

private:
    std::ofstream out_;
};

/// cdf.csv: the measure sampled at uniform x (so fixed abscissae appear as
/// rows regardless of the internal partition).
inline void write_cdf_csv(const std::string& path, const GridMeasure& mu, int rows = 1 << 12) {
    CsvWriter w(path, {"x", "cdf"});
    for (int i = 0; i <= rows; ++i) {
        double x = static_cast<double>(i) / rows;
        w.row({x, mu.cdf_at(x)});
    }
}

inline void write_f_csv(const std::string& path, const ConjugacyProfile& prof) {
    CsvWriter w(path, {"y", "F"});
    for (std::size_t i = 0; i < prof.y_samples.size(); ++i)
        w.row({prof.y_samples[i], prof.F_samples[i]});
}

inline void write_doubling_csv(const std::string& path,
                               const std::vector<std::pair<double, double>>& curve) {
    CsvWriter w(path, {"r", "sup_ratio"});
    for (auto [r, v] : curve) w.row({r, v});
}

inline void write_criticality_csv(const std::string& path, const std::vector<int>& raw,
                                  const std::vector<int>& plateau) {
    CsvWriter w(path, {"n", "max_criticality", "plateau"});
    for (std::size_t i = 0; i < plateau.size(); ++i)
        w.row_mixed(static_cast<long long>(i + 1),
                    {static_cast<double>(raw[i]), static_cast<double>(plateau[i])});
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << content;
}

} // namespace qsdyn
