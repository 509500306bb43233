#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "qsdyn/interval.hpp"

namespace qsdyn {

/// Non-atomic Borel probability measure on [0,1], stored as a monotone cdf on
/// a partition. Interval masses interpolate linearly inside cells, so they
/// are additive and monotone at sub-cell resolution.
class GridMeasure {
public:
    GridMeasure() = default;

    GridMeasure(std::vector<double> nodes, std::vector<double> cdf)
        : x_(std::move(nodes)), cdf_(std::move(cdf)) {
        if (x_.size() != cdf_.size() || x_.size() < 2)
            throw std::invalid_argument("GridMeasure: partition and cdf sizes must match (>= 2)");
        if (x_.front() != 0.0 || x_.back() != 1.0)
            throw std::invalid_argument("GridMeasure: partition must run from 0 to 1");
        if (cdf_.front() != 0.0 || cdf_.back() != 1.0)
            throw std::invalid_argument("GridMeasure: cdf must run from 0 to 1");
        for (std::size_t i = 1; i < x_.size(); ++i) {
            if (!(x_[i] > x_[i - 1]))
                throw std::invalid_argument("GridMeasure: partition must be strictly increasing");
            if (cdf_[i] < cdf_[i - 1])
                throw std::invalid_argument("GridMeasure: cdf must be non-decreasing");
        }
    }

    static GridMeasure lebesgue(int cells) {
        std::vector<double> x(cells + 1), c(cells + 1);
        for (int i = 0; i <= cells; ++i) x[i] = c[i] = static_cast<double>(i) / cells;
        x.back() = c.back() = 1.0;
        return GridMeasure(std::move(x), std::move(c));
    }

    std::size_t cells() const { return x_.size() - 1; }
    const std::vector<double>& nodes() const { return x_; }
    const std::vector<double>& cdf() const { return cdf_; }

    double cdf_at(double x) const {
        if (x <= 0.0) return 0.0;
        if (x >= 1.0) return 1.0;
        std::size_t i = cell_index(x);
        double w = x_[i + 1] - x_[i];
        double t = (x - x_[i]) / w;
        return cdf_[i] + t * (cdf_[i + 1] - cdf_[i]);
    }

    double mass(double a, double b) const {
        if (b <= a) return 0.0;
        return cdf_at(b) - cdf_at(a);
    }
    double mass(const Interval& j) const { return j.is_empty() ? 0.0 : mass(j.lo, j.hi); }

    /// Hard envelope for the mass of (a,b): the linear interpolation is exact
    /// on whole cells, so the truth lies between dropping and keeping the
    /// partial boundary cells.
    std::pair<double, double> mass_envelope(double a, double b) const {
        if (b <= a) return {0.0, 0.0};
        a = std::max(a, 0.0);
        b = std::min(b, 1.0);
        std::size_t ia = cell_index(a), ib = cell_index(b);
        if (ia == ib) return {0.0, cdf_[ib + 1] - cdf_[ia]};
        double lower = cdf_[ib] - cdf_[ia + 1];
        double upper = cdf_[ib + 1] - cdf_[ia];
        return {std::max(lower, 0.0), upper};
    }

    /// Inverse cdf by monotone interpolation (left-continuous on flats).
    double quantile(double q) const {
        if (q <= 0.0) return 0.0;
        if (q >= 1.0) return 1.0;
        std::size_t lo = 0, hi = cdf_.size() - 1;
        while (hi - lo > 1) {
            std::size_t mid = (lo + hi) / 2;
            if (cdf_[mid] <= q) lo = mid;
            else hi = mid;
        }
        double dm = cdf_[hi] - cdf_[lo];
        if (dm <= 0.0) return x_[lo];
        double t = (q - cdf_[lo]) / dm;
        return x_[lo] + t * (x_[hi] - x_[lo]);
    }

    double max_cell_mass() const {
        double m = 0.0;
        for (std::size_t i = 1; i < cdf_.size(); ++i) m = std::max(m, cdf_[i] - cdf_[i - 1]);
        return m;
    }
    double min_cell_mass() const {
        double m = 1.0;
        for (std::size_t i = 1; i < cdf_.size(); ++i) m = std::min(m, cdf_[i] - cdf_[i - 1]);
        return m;
    }
    bool full_support() const { return min_cell_mass() > 0.0; }
    /// No atoms at grid scale: the heaviest cell carries at most 10x the
    /// equidistributed share.
    bool non_atomic_at_scale(double factor = 10.0) const {
        return max_cell_mass() <= factor / static_cast<double>(cells());
    }

private:
    std::vector<double> x_, cdf_;

    std::size_t cell_index(double x) const {
        std::size_t lo = 0, hi = x_.size() - 1;
        while (hi - lo > 1) {
            std::size_t mid = (lo + hi) / 2;
            if (x_[mid] <= x) lo = mid;
            else hi = mid;
        }
        return lo;
    }
};

/// Logarithmically spaced scales from lo to hi (inclusive).
inline std::vector<double> log_spaced_scales(double lo, double hi, int count) {
    if (!(lo > 0.0 && hi > lo) || count < 2)
        throw std::invalid_argument("log_spaced_scales: need 0 < lo < hi and count >= 2");
    std::vector<double> out(count);
    double llo = std::log(lo), lhi = std::log(hi);
    for (int i = 0; i < count; ++i)
        out[i] = std::exp(llo + (lhi - llo) * i / (count - 1));
    return out;
}

struct DoublingReport {
    double C_star = 1.0;
    double r_star = 0.0;     // largest scanned radius
    double worst_point = 0.0;
    std::vector<std::pair<double, double>> curve; // r -> sup ratio
};

namespace detail {

/// Per-scale center set: base grid clipped to validity, boundary-touching
/// points, and base +- scale edge-aligned points.
inline std::vector<double> scan_centers(const std::vector<double>& base, double scale,
                                        bool edge_shifted) {
    std::vector<double> xs;
    xs.reserve(base.size() * (edge_shifted ? 3 : 1) + 2);
    for (double x : base) {
        if (x >= 0.0 && x <= 1.0) xs.push_back(x);
        if (edge_shifted) {
            if (x - scale >= 0.0) xs.push_back(x - scale);
            if (x + scale <= 1.0) xs.push_back(x + scale);
        }
    }
    xs.push_back(scale);
    xs.push_back(1.0 - scale);
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    return xs;
}

} // namespace detail

/// sup over scanned (x, r) of mu(B_I(x,2r)) / mu(B_I(x,r)).
inline DoublingReport doubling_constant(const GridMeasure& mu, const std::vector<double>& r_grid,
                                        const std::vector<double>& x_grid) {
    DoublingReport rep;
    rep.r_star = *std::max_element(r_grid.begin(), r_grid.end());
    for (double r : r_grid) {
        double sup = 0.0;
        double arg = 0.0;
        for (double x : detail::scan_centers(x_grid, r, true)) {
            double b1 = mu.mass(ball(x, r));
            if (b1 <= 0.0) continue;
            double b2 = mu.mass(ball(x, 2.0 * r));
            double ratio = b2 / b1;
            if (ratio > sup) {
                sup = ratio;
                arg = x;
            }
        }
        rep.curve.emplace_back(r, sup);
        if (sup > rep.C_star) {
            rep.C_star = sup;
            rep.worst_point = arg;
        }
    }
    return rep;
}

struct AdjacentRatioReport {
    double C = 1.0;
    double worst_point = 0.0;
    double worst_scale = 0.0;
    std::vector<std::pair<double, double>> curve; // eps -> sup ratio
};

/// sup over scanned (x, eps) with x +- eps in [0,1] of
/// max(mu((x-eps,x))/mu((x,x+eps)), inverse).
inline AdjacentRatioReport adjacent_ratio_constant(const GridMeasure& mu,
                                                   const std::vector<double>& eps_grid,
                                                   const std::vector<double>& x_grid) {
    AdjacentRatioReport rep;
    for (double eps : eps_grid) {
        double sup = 0.0, arg = 0.0;
        for (double x : detail::scan_centers(x_grid, eps, true)) {
            if (x - eps < -1e-15 || x + eps > 1.0 + 1e-15) continue;
            double left = mu.mass(x - eps, x);
            double right = mu.mass(x, x + eps);
            if (left <= 0.0 || right <= 0.0) continue;
            double ratio = std::max(left / right, right / left);
            if (ratio > sup) {
                sup = ratio;
                arg = x;
            }
        }
        rep.curve.emplace_back(eps, sup);
        if (sup > rep.C) {
            rep.C = sup;
            rep.worst_point = arg;
            rep.worst_scale = eps;
        }
    }
    return rep;
}

/// Per-decade growth detector: true when the per-decade maxima of the curve
/// increase strictly toward the smallest scales over the `decades` smallest
/// decades and the total increase reaches `factor`.
inline bool growth_trend(const std::vector<std::pair<double, double>>& curve, int decades = 3,
                         double factor = 2.0) {
    if (curve.empty()) return false;
    std::vector<std::pair<int, double>> per; // decade -> max
    for (auto [scale, v] : curve) {
        int d = static_cast<int>(std::floor(std::log10(scale)));
        bool found = false;
        for (auto& p : per)
            if (p.first == d) {
                p.second = std::max(p.second, v);
                found = true;
            }
        if (!found) per.emplace_back(d, v);
    }
    std::sort(per.begin(), per.end()); // ascending decade = smallest scale first
    if (static_cast<int>(per.size()) < decades) return false;
    for (int i = 0; i + 1 < decades; ++i)
        if (!(per[i].second > per[i + 1].second)) return false;
    return per[0].second >= factor * per[decades - 1].second;
}

struct PowerLawFit {
    bool valid = false;
    double C = 0.0;
    double alpha = 0.0;
    double worst_exponent = 0.0; // steepest local scaling exponent seen
};

/// Fit the uniform lower bound mu(B_I(x,r)) >= C r^alpha. The object fitted
/// is the lower envelope m(r) = min over scanned x of mu(B_I(x,r)); alpha is
/// its log-log regression slope snapped up to the grid over [0.1, 4] in steps
/// of 0.05, and C is the smallest scanned quotient m(r)/r^alpha. A vanishing
/// envelope or an off-grid exponent yields the failure marker.
inline PowerLawFit polynomial_lower_bound_fit(const GridMeasure& mu,
                                              const std::vector<double>& r_grid,
                                              const std::vector<double>& x_grid) {
    PowerLawFit fit;
    std::vector<double> envelope;
    envelope.reserve(r_grid.size());
    for (double r : r_grid) {
        double m = std::numeric_limits<double>::infinity();
        for (double x : detail::scan_centers(x_grid, r, false))
            m = std::min(m, mu.mass(ball(x, r)));
        if (!(m > 0.0)) {
            fit.worst_exponent = std::numeric_limits<double>::infinity();
            return fit; // measure vanishes at scan resolution
        }
        envelope.push_back(m);
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (std::size_t k = 0; k < r_grid.size(); ++k) {
        double lx = std::log(r_grid[k]), ly = std::log(envelope[k]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++m;
    }
    double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    fit.worst_exponent = slope;
    if (slope > 4.0 + 0.02) return fit; // no admissible exponent on the grid
    double alpha = 4.0;
    for (int k = 0; k <= 78; ++k) {
        double a = 0.1 + 0.05 * k;
        if (a >= slope - 0.02) {
            alpha = a;
            break;
        }
    }
    double c = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < r_grid.size(); ++k)
        c = std::min(c, envelope[k] / std::pow(r_grid[k], alpha));
    if (!(c > 0.0) || !std::isfinite(c)) return fit;
    fit.valid = true;
    fit.alpha = alpha;
    fit.C = c;
    return fit;
}

struct MeasureEquivalenceResult {
    double C = 1.0;       // adjacent-ratio constant over the joint grid
    double C_star = 1.0;  // doubling constant over the joint grid
    bool forward_ok = false;  // C_star <= 1 + C
    bool backward_ok = false; // C <= C_star^2
};

/// Joint scan realizing both directions of the adjacent-ratio <-> doubling
/// equivalence: each scan includes the exact centers/scales the other
/// direction's inequality chain consumes, so the two bounds are guaranteed
/// for the scanned suprema when the measure satisfies them.
inline MeasureEquivalenceResult measure_equivalence_check(const GridMeasure& mu,
                                                          const std::vector<double>& scales,
                                                          const std::vector<double>& x_grid) {
    // adjacent pairs: base (x, eps) plus pairs induced by the doubling scan
    std::vector<std::pair<double, double>> adj_pairs, dbl_pairs;
    for (double eps : scales)
        for (double x : detail::scan_centers(x_grid, eps, true)) {
            if (x - eps < -1e-15 || x + eps > 1.0 + 1e-15) continue;
            adj_pairs.emplace_back(x, eps);
            // induced doubling pairs used to bound this adjacent ratio
            dbl_pairs.emplace_back(x - eps / 2, eps);
            dbl_pairs.emplace_back(x - eps / 2, eps / 2);
            dbl_pairs.emplace_back(x + eps / 2, eps);
            dbl_pairs.emplace_back(x + eps / 2, eps / 2);
        }
    for (double r : scales)
        for (double x : detail::scan_centers(x_grid, r, true)) {
            dbl_pairs.emplace_back(x, r);
            // induced adjacent pairs used to bound this doubling ratio
            double sl = std::min(r, x - r);
            if (sl > 0.0) adj_pairs.emplace_back(x - r, sl);
            double sr = std::min(r, 1.0 - (x + r));
            if (sr > 0.0) adj_pairs.emplace_back(x + r, sr);
        }
    MeasureEquivalenceResult res;
    for (auto [x, eps] : adj_pairs) {
        if (x - eps < -1e-15 || x + eps > 1.0 + 1e-15) continue;
        double l = mu.mass(x - eps, x), r = mu.mass(x, x + eps);
        if (l <= 0.0 || r <= 0.0) continue;
        res.C = std::max(res.C, std::max(l / r, r / l));
    }
    for (auto [x, r] : dbl_pairs) {
        double b1 = mu.mass(ball(x, r));
        if (b1 <= 0.0) continue;
        res.C_star = std::max(res.C_star, mu.mass(ball(x, 2 * r)) / b1);
    }
    const double tol = 1e-9;
    res.forward_ok = res.C_star <= 1.0 + res.C + tol;
    res.backward_ok = res.C <= res.C_star * res.C_star + tol;
    return res;
}

} // namespace qsdyn
