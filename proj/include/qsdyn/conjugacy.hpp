#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "qsdyn/map.hpp"
#include "qsdyn/measure.hpp"

namespace qsdyn {

/// Sampled conjugacy h(x) = mu([0,x]) and the straightened map F = h.f.h^{-1}.
///
/// F is sampled on the mass lattice of mu (the cdf values at the partition
/// nodes, refined uniformly inside cells when the partition is coarser than
/// the requested sample count). On that lattice the finite-difference slopes
/// of F realize the measure's Jacobian, so the slope residual measures how
/// close the straightened map is to constant slope +-s.
struct ConjugacyProfile {
    GridMeasure h;                  // the conjugacy as a grid cdf
    std::vector<double> x_samples;  // sample points in the source coordinate
    std::vector<double> y_samples;  // h(x_samples), the (near-uniform) mass lattice
    std::vector<double> F_samples;  // h(f(x_samples))
    double s = 1.0;                 // target slope magnitude
    double slope_residual = 0.0;    // max relative gap between |dF/dy| and s
    std::vector<double> turning_images; // h(c) for turning points c
    double model_f0 = 0.0;          // h(f(0)): anchor of the affine model
    double model_sign0 = 1.0;       // slope sign of the first lap
};

namespace detail {

/// The canonical piecewise affine map with slope +-s, breakpoints at the
/// turning images, anchored at F(0) = f0.
inline double affine_model_eval(double y, double s, double sign0, double f0,
                                const std::vector<double>& turning_images) {
    double val = f0;
    double sign = sign0;
    double prev = 0.0;
    for (double t : turning_images) {
        if (y <= t) break;
        val += sign * s * (t - prev);
        sign = -sign;
        prev = t;
    }
    return val + sign * s * (y - prev);
}

} // namespace detail

inline ConjugacyProfile build_conjugacy(const MultimodalMap& map, const GridMeasure& mu,
                                        double s_hat, int min_samples = 4096) {
    ConjugacyProfile prof;
    prof.h = mu;
    prof.s = s_hat;
    const auto& nodes = mu.nodes();
    const auto& cdf = mu.cdf();
    for (std::size_t i = 1; i < cdf.size(); ++i)
        if (!(cdf[i] > cdf[i - 1]))
            throw std::runtime_error("build_conjugacy: h is not strictly increasing (support failure)");

    int refine = 1;
    while (static_cast<int>(mu.cells()) * refine < min_samples) refine *= 2;
    prof.x_samples.reserve(mu.cells() * refine + 1);
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
        for (int k = 0; k < refine; ++k) {
            double t = static_cast<double>(k) / refine;
            prof.x_samples.push_back(nodes[i] + t * (nodes[i + 1] - nodes[i]));
        }
    }
    prof.x_samples.push_back(1.0);
    prof.y_samples.reserve(prof.x_samples.size());
    prof.F_samples.reserve(prof.x_samples.size());
    for (double x : prof.x_samples) {
        prof.y_samples.push_back(mu.cdf_at(x));
        prof.F_samples.push_back(mu.cdf_at(map.eval(x)));
    }

    for (double c : map.turning_points()) prof.turning_images.push_back(mu.cdf_at(c));
    prof.model_f0 = mu.cdf_at(map.eval(0.0));
    prof.model_sign0 = map.branches().front().increasing ? 1.0 : -1.0;

    // slope residual, excluding one cell around each turning image
    double cell = mu.max_cell_mass();
    double worst = 0.0;
    for (std::size_t i = 0; i + 1 < prof.y_samples.size(); ++i) {
        double dy = prof.y_samples[i + 1] - prof.y_samples[i];
        if (dy <= 0.0) continue;
        double mid = 0.5 * (prof.y_samples[i] + prof.y_samples[i + 1]);
        bool excluded = false;
        for (double t : prof.turning_images)
            if (std::abs(mid - t) <= 1.5 * cell + dy) excluded = true;
        if (excluded) continue;
        double slope = std::abs(prof.F_samples[i + 1] - prof.F_samples[i]) / dy;
        worst = std::max(worst, std::abs(slope - s_hat) / s_hat);
    }
    prof.slope_residual = worst;
    return prof;
}

/// Evaluate the slope +-s affine model carried by the profile.
inline double conjugate_model_eval(const ConjugacyProfile& prof, double y) {
    return detail::affine_model_eval(y, prof.s, prof.model_sign0, prof.model_f0,
                                     prof.turning_images);
}

/// max over uniform samples of |h(f(x)) - F(h(x))| against the affine model.
/// Feeding a wrong slope s into the build makes this blow up, which is used
/// as a negative control.
inline double conjugacy_residual(const MultimodalMap& map, const ConjugacyProfile& prof,
                                 int samples = 4096) {
    double worst = 0.0;
    for (int i = 0; i <= samples; ++i) {
        double x = static_cast<double>(i) / samples;
        double lhs = prof.h.cdf_at(map.eval(x));
        double rhs = conjugate_model_eval(prof, prof.h.cdf_at(x));
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    return worst;
}

struct QsReport {
    double K = 1.0;
    double worst_point = 0.0;
    double worst_scale = 0.0;
    std::vector<std::pair<double, double>> table; // eps -> sup ratio
};

/// Quasi-symmetry modulus of h: sup over scanned (x, eps), x +- eps in [0,1],
/// of the two-sided increment ratio |h(x+eps)-h(x)| / |h(x)-h(x-eps)|. For h
/// a cdf this is the same supremum as the adjacent-ratio constant of the
/// underlying measure on the same grid.
inline QsReport qs_modulus(const GridMeasure& h, const std::vector<double>& eps_grid,
                           const std::vector<double>& x_grid) {
    auto rep = adjacent_ratio_constant(h, eps_grid, x_grid);
    QsReport out;
    out.K = std::max(rep.C, 1.0);
    out.worst_point = rep.worst_point;
    out.worst_scale = rep.worst_scale;
    out.table = std::move(rep.curve);
    return out;
}

} // namespace qsdyn
