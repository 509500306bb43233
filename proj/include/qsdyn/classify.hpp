#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "qsdyn/config.hpp"
#include "qsdyn/conjugacy.hpp"
#include "qsdyn/map.hpp"
#include "qsdyn/measure.hpp"
#include "qsdyn/mme.hpp"
#include "qsdyn/pullback.hpp"
#include "qsdyn/symbolic.hpp"

namespace qsdyn {

/// The map failed a hypothesis screen; classification cannot proceed.
class screen_failure_error : public std::runtime_error {
public:
    explicit screen_failure_error(const std::string& what) : std::runtime_error(what) {}
};

struct EntropySection {
    double h_top = 0.0;
    double s = 1.0;
    int n_used = 0;
    double residual = 0.0;
    double s_mme = 1.0;
    bool routes_agree = false; // |s - s_mme| / s_mme <= 1e-3
};

struct CondSemiHyperbolic {
    bool verdict = false;
    int D = 0;
    double r = 0.0;
    std::vector<int> plateau;
    std::vector<int> raw_max;
};

struct RecurrenceGap {
    double location = 0.0;
    double gap = 0.0;
};

struct CondNonRecurrent {
    bool verdict = false;
    std::vector<RecurrenceGap> gaps;
};

struct CondDoubling {
    bool verdict = false;
    double C_star = 1.0;
    double r_star = 0.0;
    double worst_point = 0.0;
    bool growth = false;
    std::vector<std::pair<double, double>> curve;
};

struct CondQuasiSymmetric {
    bool verdict = false;
    double K = 1.0;
    double slope_residual = 0.0;
    double conj_residual = 0.0;
    bool growth = false;
    std::vector<std::pair<double, double>> curve;
};

struct MmeSection {
    double s_hat = 1.0;
    int iterations = 0;
    double residual = 0.0;
    bool converged = false;
    double jacobian_residual = 0.0;
    double invariance_residual = 0.0;
    double g_eigen_gap = 0.0;
};

struct ClassificationReport {
    MapDescriptor map;
    EntropySection entropy;
    MmeSection mme;
    CondSemiHyperbolic cond1;
    CondNonRecurrent cond2;
    CondDoubling cond3;
    CondQuasiSymmetric cond4;
    bool consistent = false;
    Budgets budgets;
    Thresholds thresholds;
};

/// min over 1 <= n <= n_max of |f^n(c) - c|; a gap bounded away from zero as
/// the budget grows is non-recurrence evidence.
inline double recurrence_gap(const MultimodalMap& map, const CriticalPoint& c, long long n_max) {
    if (n_max > 1'000'000) throw std::invalid_argument("recurrence_gap: n_max must be <= 1e6");
    double x = c.location;
    double gap = 1.0;
    for (long long n = 1; n <= n_max; ++n) {
        x = map.eval(x);
        gap = std::min(gap, std::abs(x - c.location));
    }
    return gap;
}

namespace detail {

/// Scan centers for the measure-geometry scans: a uniform grid plus the
/// forward critical orbits, where the irregular part of the measure lives.
inline std::vector<double> measure_scan_centers(const MultimodalMap& map, int uniform_n,
                                                int seed_depth) {
    std::vector<double> xs;
    xs.reserve(uniform_n + 1 + seed_depth * map.critical_points().size());
    for (int i = 0; i <= uniform_n; ++i) xs.push_back(static_cast<double>(i) / uniform_n);
    for (const auto& c : map.critical_points()) {
        double x = c.location;
        for (int i = 0; i < seed_depth; ++i) {
            xs.push_back(x);
            x = map.eval(x);
        }
    }
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    return xs;
}

inline bool plateau_verdict(const std::vector<int>& plateau, int window) {
    int n = static_cast<int>(plateau.size());
    int w = std::max(window, n / 2);
    if (w >= n) w = n - 1;
    if (w < 1) return true;
    return plateau[n - 1 - w] == plateau[n - 1];
}

} // namespace detail

/// Run the full pipeline and fill the report. Throws screen_failure_error if
/// the map fails the class hypotheses (exactness certificate, repelling
/// periodic orbits) and mme_convergence_error on a stalled measure iteration.
inline ClassificationReport classify(const MultimodalMap& map, const RunConfig& cfg) {
    const Budgets& b = cfg.budgets;
    const Thresholds& t = cfg.thresholds;
    ClassificationReport rep;
    rep.map = map.descriptor();
    rep.budgets = b;
    rep.thresholds = t;

    // class screens
    auto exact = is_topologically_exact(map, b.exactness_depth, b.exactness_n_max);
    if (!exact.exact) {
        std::string w = exact.witness ? (" witness interval [" + std::to_string(exact.witness->lo) +
                                         ", " + std::to_string(exact.witness->hi) + "]")
                                      : "";
        throw screen_failure_error("map is not topologically exact at resolution 2^-" +
                                   std::to_string(b.exactness_depth) + ";" + w);
    }
    try {
        require_repelling_orbits(map, b.period_max);
    } catch (const non_repelling_orbit_error& e) {
        throw screen_failure_error(std::string("class screen failed: ") + e.what());
    } catch (const non_differentiable_error&) {
        throw screen_failure_error("class screen failed: periodic orbit through a corner point");
    }

    // entropy, two routes
    auto ent = topological_entropy(map, b.entropy_n_max);
    auto mme = compute_mme(map, b.grid_n, b.iter_max, b.tol);
    if (!mme.converged)
        throw mme_convergence_error("mme power iteration did not converge (residual " +
                                        std::to_string(mme.residual) + ")",
                                    mme.residual);
    rep.entropy.h_top = ent.h_top;
    rep.entropy.s = ent.s;
    rep.entropy.n_used = ent.n_used;
    rep.entropy.residual = ent.residual;
    rep.entropy.s_mme = mme.s_hat;
    rep.entropy.routes_agree = std::abs(ent.s - mme.s_hat) / mme.s_hat <= 1e-3;

    rep.mme.s_hat = mme.s_hat;
    rep.mme.iterations = mme.iterations;
    rep.mme.residual = mme.residual;
    rep.mme.converged = mme.converged;
    rep.mme.jacobian_residual = jacobian_residual(map, mme.measure, mme.s_hat);
    rep.mme.invariance_residual = invariance_residual(map, mme.measure);
    rep.mme.g_eigen_gap = mme.g_eigen_gap;

    // (1) semi-hyperbolicity scan
    auto scan = semi_hyperbolicity_scan(map, b.crit_radius, b.scan_depth, b.scan_grid,
                                        b.criticality_set);
    rep.cond1.D = scan.D;
    rep.cond1.r = b.crit_radius;
    rep.cond1.plateau = scan.plateau;
    rep.cond1.raw_max = scan.raw_max;
    rep.cond1.verdict = detail::plateau_verdict(scan.plateau, t.plateau_window);

    // (2) recurrence gaps
    rep.cond2.verdict = true;
    for (const auto& c : map.critical_points()) {
        double g = recurrence_gap(map, c, b.recurrence_n_max);
        rep.cond2.gaps.push_back({c.location, g});
        if (g < t.gap) rep.cond2.verdict = false;
    }

    // shared scan grids for the measure geometry
    auto scales = log_spaced_scales(b.scale_lo(), b.scale_max, b.scale_count);
    auto centers = detail::measure_scan_centers(map, b.x_grid, b.seed_depth);

    // (3) doubling of the maximal entropy measure
    auto dbl = doubling_constant(mme.measure, scales, centers);
    rep.cond3.C_star = dbl.C_star;
    rep.cond3.r_star = dbl.r_star;
    rep.cond3.worst_point = dbl.worst_point;
    rep.cond3.curve = dbl.curve;
    rep.cond3.growth = growth_trend(dbl.curve, t.growth_decades, t.growth_factor);
    rep.cond3.verdict = dbl.C_star <= t.c_star_max && !rep.cond3.growth;

    // (4) quasi-symmetric straightening
    auto prof = build_conjugacy(map, mme.measure, mme.s_hat);
    auto qs = qs_modulus(mme.measure, scales, centers);
    rep.cond4.K = qs.K;
    rep.cond4.slope_residual = prof.slope_residual;
    rep.cond4.conj_residual = conjugacy_residual(map, prof);
    rep.cond4.curve = qs.table;
    rep.cond4.growth = growth_trend(qs.table, t.growth_decades, t.growth_factor);
    rep.cond4.verdict = qs.K <= t.k_max && !rep.cond4.growth &&
                        prof.slope_residual <= t.slope_residual_max;

    rep.consistent = rep.cond1.verdict == rep.cond2.verdict &&
                     rep.cond2.verdict == rep.cond3.verdict &&
                     rep.cond3.verdict == rep.cond4.verdict;
    return rep;
}

/// Per-pair diagnostics for an inconsistent report, naming the budget that
/// most plausibly needs raising. Empty when consistent.
inline std::vector<std::string> cross_validate(const ClassificationReport& rep) {
    std::vector<std::string> out;
    struct Entry {
        const char* name;
        bool verdict;
        const char* remedy;
    };
    Entry entries[4] = {
        {"cond1", rep.cond1.verdict,
         "raise budgets.scan_depth / budgets.scan_grid or adjust budgets.crit_radius"},
        {"cond2", rep.cond2.verdict,
         "raise budgets.recurrence_n_max or revisit thresholds.gap"},
        {"cond3", rep.cond3.verdict,
         "raise grid N (budgets.grid_n) or widen the radius decades (budgets.scale_min)"},
        {"cond4", rep.cond4.verdict,
         "raise grid N (budgets.grid_n); the conjugacy interpolation may be too coarse"},
    };
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
            if (entries[i].verdict != entries[j].verdict) {
                const Entry& f = entries[i].verdict ? entries[j] : entries[i];
                out.push_back(std::string(entries[i].name) + "=" +
                              (entries[i].verdict ? "true" : "false") + " vs " + entries[j].name +
                              "=" + (entries[j].verdict ? "true" : "false") + ": " + f.remedy);
            }
    return out;
}

} // namespace qsdyn
