#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "qsdyn/interval.hpp"
#include "qsdyn/map.hpp"

namespace qsdyn {

struct EntropyEstimate {
    double h_top = 0.0;
    double s = 1.0;       // exp(h_top)
    int n_used = 0;       // regression window length
    double residual = 0.0; // max absolute regression deviation of log lap counts
};

/// Topological entropy from lap-number growth: least-squares slope of
/// log lap(f^n) against n over n in [n_max/2, n_max].
inline EntropyEstimate topological_entropy(const MultimodalMap& map, int n_max) {
    if (n_max < 4) throw std::invalid_argument("topological_entropy: n_max must be >= 4");
    auto counts = map.lap_counts(n_max);
    int n0 = n_max / 2;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (int n = n0; n <= n_max; ++n) {
        double x = n, y = std::log(static_cast<double>(counts[n - 1]));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++m;
    }
    double denom = m * sxx - sx * sx;
    double slope = (m * sxy - sx * sy) / denom;
    double icept = (sy - slope * sx) / m;
    double resid = 0.0;
    for (int n = n0; n <= n_max; ++n) {
        double y = std::log(static_cast<double>(counts[n - 1]));
        resid = std::max(resid, std::abs(slope * n + icept - y));
    }
    EntropyEstimate e;
    e.h_top = std::max(slope, 0.0);
    e.s = std::exp(e.h_top);
    e.n_used = m;
    e.residual = resid;
    return e;
}

struct ExactnessResult {
    bool exact = false;
    std::optional<Interval> witness; // a dyadic interval that failed to cover [0,1]
    int max_steps = 0;               // largest n needed over all test intervals
};

/// Resolution-bounded topological exactness certificate: every dyadic interval
/// of length 2^-k must cover [0,1] within n_max image iterations (up to 1e-9
/// at the endpoints). This is a desk-scale check, not a proof.
inline ExactnessResult is_topologically_exact(const MultimodalMap& map, int depth_k, int n_max) {
    if (depth_k > 20) throw std::invalid_argument("is_topologically_exact: depth must be <= 20");
    ExactnessResult r;
    const double tol = 1e-9;
    const std::int64_t count = std::int64_t{1} << depth_k;
    const double len = std::ldexp(1.0, -depth_k);
    for (std::int64_t i = 0; i < count; ++i) {
        Interval u = Interval::closed(i * len, (i + 1) * len);
        Interval j = u;
        bool covered = false;
        for (int n = 1; n <= n_max; ++n) {
            j = map.image_interval(j);
            if (j.lo <= tol && j.hi >= 1.0 - tol) {
                covered = true;
                r.max_steps = std::max(r.max_steps, n);
                break;
            }
        }
        if (!covered) {
            r.exact = false;
            r.witness = u;
            return r;
        }
    }
    r.exact = true;
    return r;
}

struct PeriodicOrbit {
    int period = 1;
    std::vector<double> points; // one full cycle, starting at the smallest point
    double multiplier = 1.0;    // |Df^period| along the orbit
};

class non_repelling_orbit_error : public std::runtime_error {
public:
    non_repelling_orbit_error(const std::string& what, PeriodicOrbit orbit)
        : std::runtime_error(what), orbit(std::move(orbit)) {}
    PeriodicOrbit orbit;
};

namespace detail {

inline double iterate_n(const MultimodalMap& m, double x, int n) {
    for (int i = 0; i < n; ++i) x = m.eval(x);
    return x;
}

inline std::vector<double> period_n_fixed_points(const MultimodalMap& m, int n) {
    auto laps = m.laps(n);
    std::vector<double> roots;
    auto g = [&](double x) { return iterate_n(m, x, n) - x; };
    for (const auto& lap : laps) {
        double a = lap.lo, b = lap.hi;
        double ga = g(a), gb = g(b);
        if (std::abs(ga) <= 1e-12) roots.push_back(a);
        if (std::abs(gb) <= 1e-12) roots.push_back(b);
        if (ga * gb < 0.0) {
            double lo = a, hi = b, flo = ga;
            for (int it = 0; it < 100 && hi - lo > 1e-14; ++it) {
                double mid = 0.5 * (lo + hi);
                double fm = g(mid);
                if (flo * fm <= 0.0) hi = mid;
                else {
                    lo = mid;
                    flo = fm;
                }
            }
            roots.push_back(0.5 * (lo + hi));
        }
    }
    std::sort(roots.begin(), roots.end());
    roots.erase(std::unique(roots.begin(), roots.end(),
                            [](double x, double y) { return std::abs(x - y) < 1e-9; }),
                roots.end());
    return roots;
}

inline double orbit_multiplier(const MultimodalMap& m, double p, int n) {
    double mult = 1.0, x = p;
    for (int i = 0; i < n; ++i) {
        mult *= std::abs(m.deriv(x));
        x = m.eval(x);
    }
    return mult;
}

} // namespace detail

/// All periodic orbits of exact period n: one root of f^n(x) = x per lap of
/// f^n where a sign change (or endpoint root) exists, lower periods filtered,
/// roots grouped into cycles.
inline std::vector<PeriodicOrbit> periodic_points(const MultimodalMap& map, int n) {
    if (n > 20) throw std::invalid_argument("periodic_points: period must be <= 20");
    auto roots = detail::period_n_fixed_points(map, n);
    std::vector<PeriodicOrbit> orbits;
    std::vector<double> used;
    auto seen = [&](double x) {
        for (double u : used)
            if (std::abs(u - x) < 1e-8) return true;
        return false;
    };
    for (double r : roots) {
        if (seen(r)) continue;
        // minimal period must be exactly n
        bool lower = false;
        for (int d = 1; d < n; ++d) {
            if (n % d != 0) continue;
            if (std::abs(detail::iterate_n(map, r, d) - r) <= 1e-9) {
                lower = true;
                break;
            }
        }
        if (lower) {
            used.push_back(r);
            continue;
        }
        PeriodicOrbit o;
        o.period = n;
        double x = r;
        for (int i = 0; i < n; ++i) {
            o.points.push_back(x);
            used.push_back(x);
            x = map.eval(x);
        }
        std::rotate(o.points.begin(),
                    std::min_element(o.points.begin(), o.points.end()), o.points.end());
        o.multiplier = detail::orbit_multiplier(map, o.points.front(), n);
        // residual and multiplier consistency along the orbit
        if (std::abs(detail::iterate_n(map, o.points.front(), n) - o.points.front()) > 1e-9)
            continue; // spurious root at a folding endpoint
        orbits.push_back(std::move(o));
    }
    return orbits;
}

/// min over all periodic orbits of period <= p_max of multiplier^(1/period).
/// Values > 1 are evidence of uniform hyperbolicity on periodic orbits.
inline double uniform_hyperbolicity_lower(const MultimodalMap& map, int p_max) {
    if (p_max > 14) throw std::invalid_argument("uniform_hyperbolicity_lower: p_max must be <= 14");
    double lam = std::numeric_limits<double>::infinity();
    for (int n = 1; n <= p_max; ++n)
        for (const auto& o : periodic_points(map, n))
            lam = std::min(lam, std::pow(o.multiplier, 1.0 / n));
    return lam;
}

/// Aborts with a diagnostic if any periodic orbit of period <= p_max fails to
/// be hyperbolic repelling (multiplier <= 1). Orbits through a non-smooth
/// corner surface as non_differentiable_error from deriv.
inline void require_repelling_orbits(const MultimodalMap& map, int p_max) {
    for (int n = 1; n <= p_max; ++n)
        for (const auto& o : periodic_points(map, n))
            if (!(o.multiplier > 1.0 + 1e-6))
                throw non_repelling_orbit_error(
                    "non-repelling periodic orbit of period " + std::to_string(n) +
                        " at x=" + std::to_string(o.points.front()) +
                        " (multiplier " + std::to_string(o.multiplier) + ")",
                    o);
}

} // namespace qsdyn
