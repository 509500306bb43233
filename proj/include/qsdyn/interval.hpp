#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qsdyn {

/// A subinterval of [0,1] with per-endpoint openness flags.
/// Length and measure computations ignore the flags; they matter only for
/// reporting and for containment of boundary points.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool lo_open = false;
    bool hi_open = false;

    static Interval closed(double a, double b) { return {a, b, false, false}; }
    static Interval open(double a, double b) { return {a, b, true, true}; }
    static Interval empty() { return {1.0, 0.0, true, true}; }

    bool is_empty() const { return !(lo <= hi); }
    double length() const { return is_empty() ? 0.0 : hi - lo; }
    double mid() const { return 0.5 * (lo + hi); }

    bool contains(double x, double tol = 0.0) const {
        return !is_empty() && x >= lo - tol && x <= hi + tol;
    }
    bool strictly_contains(double x) const {
        return !is_empty() && x > lo && x < hi;
    }
};

/// B_I(x, r): the radius-r ball around x clipped to [0,1]. Relatively open,
/// so an endpoint of [0,1] inside the ball is included (closed there).
inline Interval ball(double x, double r) {
    Interval b;
    b.lo = std::max(x - r, 0.0);
    b.hi = std::min(x + r, 1.0);
    b.lo_open = b.lo > 0.0;
    b.hi_open = b.hi < 1.0;
    return b;
}

/// The open interval with the same midpoint as J and length (1+2*eta)|J|.
inline Interval scaled(const Interval& j, double eta) {
    double half = 0.5 * (1.0 + 2.0 * eta) * j.length();
    return Interval::open(j.mid() - half, j.mid() + half);
}

inline Interval intersect(const Interval& a, const Interval& b) {
    Interval r;
    r.lo = std::max(a.lo, b.lo);
    r.hi = std::min(a.hi, b.hi);
    if (r.lo > r.hi) return Interval::empty();
    r.lo_open = (r.lo == a.lo) ? a.lo_open : b.lo_open;
    r.hi_open = (r.hi == a.hi) ? a.hi_open : b.hi_open;
    return r;
}

} // namespace qsdyn
