#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qsdyn/interval.hpp"

namespace qsdyn {

class lap_guard_error : public std::runtime_error {
public:
    explicit lap_guard_error(const std::string& what) : std::runtime_error(what) {}
};

class non_differentiable_error : public std::domain_error {
public:
    explicit non_differentiable_error(double x)
        : std::domain_error("map is not differentiable at x=" + std::to_string(x)), x(x) {}
    double x;
};

enum class MapFamily { polynomial, tent, piecewise_affine, logistic };

inline std::string family_name(MapFamily f) {
    switch (f) {
        case MapFamily::polynomial: return "polynomial";
        case MapFamily::tent: return "tent";
        case MapFamily::piecewise_affine: return "piecewise_affine";
        case MapFamily::logistic: return "logistic";
    }
    return "?";
}

inline std::optional<MapFamily> family_from_name(const std::string& s) {
    if (s == "polynomial") return MapFamily::polynomial;
    if (s == "tent") return MapFamily::tent;
    if (s == "piecewise_affine") return MapFamily::piecewise_affine;
    if (s == "logistic") return MapFamily::logistic;
    return std::nullopt;
}

struct CriticalPoint {
    double location = 0.0;
    double order = 1.0; // 1 for affine corners, >1 for genuine critical points
    bool is_turning = true;
};

/// Closed-form description of a self-map of [0,1], as ingested from config.
/// params:
///   tent             [slope]                       x -> slope * min(x, 1-x)
///   logistic         [a]                           x -> a x (1-x)
///   polynomial       [c0, c1, ..., cd]             ascending coefficients
///   piecewise_affine [x0,y0, x1,y1, ..., xk,yk]    graph nodes, x0=0, xk=1
struct MapDescriptor {
    MapFamily family = MapFamily::tent;
    std::vector<double> params;
    std::optional<std::vector<double>> critical_orders;       // override detected orders
    std::vector<std::pair<double, double>> extra_critical_points; // non-turning (location, order)
    bool core_rescale = false;
};

namespace detail {

inline double poly_eval(const std::vector<double>& c, double x) {
    double v = 0.0;
    for (std::size_t i = c.size(); i-- > 0;) v = v * x + c[i];
    return v;
}

inline std::vector<double> poly_derive(const std::vector<double>& c) {
    std::vector<double> d;
    for (std::size_t i = 1; i < c.size(); ++i) d.push_back(c[i] * static_cast<double>(i));
    if (d.empty()) d.push_back(0.0);
    return d;
}

/// Coefficients of y -> (p(v2 + L*y) - v2) / L.
inline std::vector<double> poly_affine_conjugate(const std::vector<double>& c, double v2, double L) {
    std::vector<double> out(c.size(), 0.0);
    // expand sum_k c_k (v2 + L y)^k with binomials
    for (std::size_t k = 0; k < c.size(); ++k) {
        // (v2 + L y)^k = sum_j C(k,j) v2^{k-j} L^j y^j
        double ckj = 1.0; // C(k, j) running
        double vpow = std::pow(v2, static_cast<double>(k));
        for (std::size_t j = 0; j <= k; ++j) {
            out[j] += c[k] * ckj * vpow * std::pow(L, static_cast<double>(j));
            ckj = ckj * static_cast<double>(k - j) / static_cast<double>(j + 1);
            if (v2 != 0.0) vpow /= v2;
            else vpow = (j + 1 == k) ? 1.0 : 0.0; // v2^0 term only
        }
    }
    out[0] -= v2;
    for (auto& v : out) v /= L;
    return out;
}

} // namespace detail

/// A multimodal self-map of [0,1] with derived critical-point data.
/// Immutable after construction; all member functions are const and reentrant.
class MultimodalMap {
public:
    struct Branch {
        Interval dom;      // closed lap of f
        bool increasing;
        double ymin, ymax; // image endpoints, sorted
    };

    static constexpr std::int64_t kLapGuard = 10'000'000;
    static constexpr double kRootTol = 1e-12;

    explicit MultimodalMap(MapDescriptor d) : desc_(std::move(d)) {
        build();
    }

    static MultimodalMap tent(double slope) {
        MapDescriptor d;
        d.family = MapFamily::tent;
        d.params = {slope};
        return MultimodalMap(std::move(d));
    }
    static MultimodalMap logistic(double a) {
        MapDescriptor d;
        d.family = MapFamily::logistic;
        d.params = {a};
        return MultimodalMap(std::move(d));
    }
    static MultimodalMap polynomial(std::vector<double> coeffs) {
        MapDescriptor d;
        d.family = MapFamily::polynomial;
        d.params = std::move(coeffs);
        return MultimodalMap(std::move(d));
    }
    static MultimodalMap piecewise_affine(const std::vector<double>& xs, const std::vector<double>& ys) {
        MapDescriptor d;
        d.family = MapFamily::piecewise_affine;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            d.params.push_back(xs[i]);
            d.params.push_back(ys[i]);
        }
        return MultimodalMap(std::move(d));
    }

    const MapDescriptor& descriptor() const { return desc_; }

    /// f(x); result clamped into [0,1] so orbits never escape by rounding.
    double eval(double x) const {
        if (x < -1e-12 || x > 1.0 + 1e-12)
            throw std::domain_error("eval: x outside [0,1]");
        x = std::min(std::max(x, 0.0), 1.0);
        double v = raw_eval(x);
        return std::min(std::max(v, 0.0), 1.0);
    }

    double iterate(double x, int n) const {
        for (int i = 0; i < n; ++i) x = eval(x);
        return x;
    }

    /// Df(x). Throws non_differentiable_error at affine corners.
    double deriv(double x) const {
        if (x < -1e-12 || x > 1.0 + 1e-12)
            throw std::domain_error("deriv: x outside [0,1]");
        x = std::min(std::max(x, 0.0), 1.0);
        switch (internal_family_) {
            case MapFamily::tent: {
                if (x == 0.5) throw non_differentiable_error(x);
                return x < 0.5 ? slope_ : -slope_;
            }
            case MapFamily::logistic:
                return a_ - 2.0 * a_ * x;
            case MapFamily::polynomial:
                return detail::poly_eval(dcoeffs_, x);
            case MapFamily::piecewise_affine: {
                for (std::size_t i = 1; i + 1 < pw_x_.size(); ++i)
                    if (x == pw_x_[i]) throw non_differentiable_error(x);
                std::size_t seg = pw_segment(x);
                return pw_slope_[seg];
            }
        }
        return 0.0;
    }

    const std::vector<CriticalPoint>& critical_points() const { return crit_; }

    std::vector<double> turning_points() const {
        std::vector<double> t;
        for (const auto& c : crit_)
            if (c.is_turning) t.push_back(c.location);
        return t;
    }

    /// Locations used when counting chain criticality with CritSet::all.
    std::vector<double> critical_locations() const {
        std::vector<double> t;
        for (const auto& c : crit_) t.push_back(c.location);
        return t;
    }

    double lmax() const { return lmax_; }
    double lmin() const { return lmin_; }

    const std::vector<Branch>& branches() const { return branches_; }

    /// All solutions of f(x) = y in [0,1], sorted, deduplicated.
    std::vector<double> preimages_point(double y) const {
        std::vector<double> out;
        for (const auto& b : branches_) {
            if (y < b.ymin - 1e-12 || y > b.ymax + 1e-12) continue;
            double yc = std::min(std::max(y, b.ymin), b.ymax);
            out.push_back(invert_on_branch(b, yc));
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end(),
                              [](double a, double b) { return std::abs(a - b) < 1e-13; }),
                  out.end());
        return out;
    }

    /// Connected components of f^{-1}(J), adjacent branch inverses merged.
    std::vector<Interval> branch_preimages(const Interval& J) const {
        std::vector<Interval> comps;
        if (J.is_empty() || J.length() <= 0.0) return comps;
        for (const auto& b : branches_) {
            double ylo = std::max(J.lo, b.ymin);
            double yhi = std::min(J.hi, b.ymax);
            if (ylo > yhi + 1e-15) continue;
            yhi = std::max(ylo, yhi);
            double x0 = invert_on_branch(b, b.increasing ? ylo : yhi);
            double x1 = invert_on_branch(b, b.increasing ? yhi : ylo);
            if (x1 < x0) std::swap(x0, x1);
            comps.push_back(Interval::open(x0, x1));
        }
        std::sort(comps.begin(), comps.end(),
                  [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
        std::vector<Interval> merged;
        for (const auto& c : comps) {
            if (!merged.empty() && c.lo <= merged.back().hi + 1e-11)
                merged.back().hi = std::max(merged.back().hi, c.hi);
            else
                merged.push_back(c);
        }
        std::vector<Interval> out;
        for (auto& c : merged) {
            if (c.hi - c.lo <= 0.0) continue;
            c.lo_open = c.lo > 0.0;
            c.hi_open = c.hi < 1.0;
            out.push_back(c);
        }
        return out;
    }

    /// f(J) as an interval: extrema over endpoints and interior critical points.
    Interval image_interval(const Interval& J) const {
        if (J.is_empty()) return Interval::empty();
        double vmin = std::numeric_limits<double>::infinity();
        double vmax = -vmin;
        auto feed = [&](double x) {
            double v = eval(x);
            vmin = std::min(vmin, v);
            vmax = std::max(vmax, v);
        };
        feed(J.lo);
        feed(J.hi);
        for (const auto& c : crit_)
            if (J.contains(c.location)) feed(c.location);
        return Interval::closed(vmin, vmax);
    }

    /// Breakpoint set of f^n: points where some f^j (j < n) hits a turning point.
    /// Sorted; size+1 = lap count of f^n.
    std::vector<double> lap_breakpoints(int n) const {
        std::vector<double> turning = turning_points();
        std::vector<double> b = turning;
        std::sort(b.begin(), b.end());
        for (int k = 2; k <= n; ++k) {
            std::vector<double> next = turning;
            for (double y : b) {
                auto pre = preimages_point(y);
                next.insert(next.end(), pre.begin(), pre.end());
            }
            std::sort(next.begin(), next.end());
            next.erase(std::unique(next.begin(), next.end(),
                                   [](double a, double c) { return std::abs(a - c) < 1e-13; }),
                       next.end());
            // interior only
            while (!next.empty() && next.front() < 1e-13) next.erase(next.begin());
            while (!next.empty() && next.back() > 1.0 - 1e-13) next.pop_back();
            b = std::move(next);
            if (static_cast<std::int64_t>(b.size()) + 1 > kLapGuard)
                throw lap_guard_error("lap count guard exceeded at n=" + std::to_string(k));
        }
        return b;
    }

    /// Maximal intervals of monotonicity of f^n, in order, tiling [0,1].
    std::vector<Interval> laps(int n) const {
        if (n < 1) throw std::invalid_argument("laps: n must be >= 1");
        auto b = lap_breakpoints(n);
        std::vector<Interval> out;
        double prev = 0.0;
        for (double x : b) {
            out.push_back(Interval::closed(prev, x));
            prev = x;
        }
        out.push_back(Interval::closed(prev, 1.0));
        return out;
    }

    /// Lap counts of f^1..f^n_max in one pass (for entropy regression).
    std::vector<std::int64_t> lap_counts(int n_max) const {
        std::vector<double> turning = turning_points();
        std::vector<std::int64_t> counts;
        std::vector<double> b = turning;
        std::sort(b.begin(), b.end());
        counts.push_back(static_cast<std::int64_t>(b.size()) + 1);
        for (int k = 2; k <= n_max; ++k) {
            std::vector<double> next = turning;
            for (double y : b) {
                auto pre = preimages_point(y);
                next.insert(next.end(), pre.begin(), pre.end());
            }
            std::sort(next.begin(), next.end());
            next.erase(std::unique(next.begin(), next.end(),
                                   [](double a, double c) { return std::abs(a - c) < 1e-13; }),
                       next.end());
            while (!next.empty() && next.front() < 1e-13) next.erase(next.begin());
            while (!next.empty() && next.back() > 1.0 - 1e-13) next.pop_back();
            b = std::move(next);
            if (static_cast<std::int64_t>(b.size()) + 1 > kLapGuard)
                throw lap_guard_error("lap count guard exceeded at n=" + std::to_string(k));
            counts.push_back(static_cast<std::int64_t>(b.size()) + 1);
        }
        return counts;
    }

private:
    MapDescriptor desc_;
    MapFamily internal_family_ = MapFamily::tent;
    // tent
    double slope_ = 2.0;
    // logistic
    double a_ = 4.0;
    // polynomial
    std::vector<double> coeffs_, dcoeffs_;
    bool quadratic_ = false;
    double q_vertex_ = 0.0, q_top_ = 0.0; // vertex location/value for degree 2
    // piecewise affine
    std::vector<double> pw_x_, pw_y_, pw_slope_;

    std::vector<CriticalPoint> crit_;
    double lmax_ = 1.0, lmin_ = 1.0;
    std::vector<Branch> branches_;

    double raw_eval(double x) const {
        switch (internal_family_) {
            case MapFamily::tent: return slope_ * std::min(x, 1.0 - x);
            case MapFamily::logistic: return a_ * x * (1.0 - x);
            case MapFamily::polynomial: return detail::poly_eval(coeffs_, x);
            case MapFamily::piecewise_affine: {
                std::size_t seg = pw_segment(x);
                return pw_y_[seg] + pw_slope_[seg] * (x - pw_x_[seg]);
            }
        }
        return 0.0;
    }

    std::size_t pw_segment(double x) const {
        std::size_t lo = 0, hi = pw_x_.size() - 1;
        while (hi - lo > 1) {
            std::size_t mid = (lo + hi) / 2;
            if (pw_x_[mid] <= x) lo = mid;
            else hi = mid;
        }
        return lo;
    }

    double invert_on_branch(const Branch& b, double y) const {
        switch (internal_family_) {
            case MapFamily::tent:
                return b.increasing ? y / slope_ : 1.0 - y / slope_;
            case MapFamily::logistic: {
                double disc = std::max(0.25 - y / a_, 0.0);
                double d = std::sqrt(disc);
                double x = b.increasing ? 0.5 - d : 0.5 + d;
                return std::min(std::max(x, b.dom.lo), b.dom.hi);
            }
            case MapFamily::polynomial:
                if (quadratic_) {
                    double c2 = coeffs_[2];
                    double disc = std::max(q_top_ - y, 0.0) / std::abs(c2);
                    double d = std::sqrt(disc);
                    bool vertex_is_max = c2 < 0.0;
                    double x;
                    if (vertex_is_max)
                        x = b.increasing ? q_vertex_ - d : q_vertex_ + d;
                    else
                        x = b.increasing ? q_vertex_ + d : q_vertex_ - d;
                    return std::min(std::max(x, b.dom.lo), b.dom.hi);
                }
                return bisect_branch(b, y);
            case MapFamily::piecewise_affine: {
                // locate the sub-segment of this branch containing y
                std::size_t s0 = pw_segment(b.dom.lo + 1e-15);
                std::size_t s1 = pw_segment(std::max(b.dom.hi - 1e-15, b.dom.lo));
                for (std::size_t s = s0; s <= s1; ++s) {
                    double ya = pw_y_[s] + pw_slope_[s] * (std::max(b.dom.lo, pw_x_[s]) - pw_x_[s]);
                    double xb = std::min(b.dom.hi, pw_x_[s + 1]);
                    double yb = pw_y_[s] + pw_slope_[s] * (xb - pw_x_[s]);
                    double alo = std::min(ya, yb), ahi = std::max(ya, yb);
                    if (y >= alo - 1e-12 && y <= ahi + 1e-12) {
                        double x = pw_x_[s] + (y - pw_y_[s]) / pw_slope_[s];
                        return std::min(std::max(x, b.dom.lo), b.dom.hi);
                    }
                }
                return bisect_branch(b, y);
            }
        }
        return bisect_branch(b, y);
    }

    double bisect_branch(const Branch& b, double y) const {
        double lo = b.dom.lo, hi = b.dom.hi;
        double flo = raw_eval(lo);
        bool inc = b.increasing;
        auto side = [&](double fv) { return inc ? (fv < y) : (fv > y); };
        if (!side(flo)) return lo;
        for (int it = 0; it < 80 && hi - lo > kRootTol * 0.5; ++it) {
            double mid = 0.5 * (lo + hi);
            if (side(raw_eval(mid))) lo = mid;
            else hi = mid;
        }
        return 0.5 * (lo + hi);
    }

    void build() {
        switch (desc_.family) {
            case MapFamily::tent: {
                if (desc_.params.size() != 1) throw std::invalid_argument("tent: expected params [slope]");
                slope_ = desc_.params[0];
                if (!(slope_ > 1.0)) throw std::invalid_argument("tent: slope must be > 1");
                if (slope_ > 2.0 + 1e-12) throw std::invalid_argument("tent: slope must be <= 2 to map into [0,1]");
                if (desc_.core_rescale) throw std::invalid_argument("core_rescale: supported for logistic/polynomial families");
                internal_family_ = MapFamily::tent;
                crit_ = {CriticalPoint{0.5, 1.0, true}};
                break;
            }
            case MapFamily::logistic: {
                if (desc_.params.size() != 1) throw std::invalid_argument("logistic: expected params [a]");
                a_ = desc_.params[0];
                if (!(a_ > 0.0 && a_ <= 4.0)) throw std::invalid_argument("logistic: a must be in (0,4]");
                if (desc_.core_rescale) {
                    build_core_rescaled({0.0, a_, -a_});
                } else {
                    internal_family_ = MapFamily::logistic;
                    crit_ = {CriticalPoint{0.5, 2.0, true}};
                }
                break;
            }
            case MapFamily::polynomial: {
                if (desc_.params.size() < 2) throw std::invalid_argument("polynomial: need at least 2 coefficients");
                if (desc_.core_rescale) build_core_rescaled(desc_.params);
                else init_polynomial(desc_.params);
                break;
            }
            case MapFamily::piecewise_affine: {
                init_piecewise(desc_.params);
                if (desc_.core_rescale) throw std::invalid_argument("core_rescale: supported for logistic/polynomial families");
                break;
            }
        }
        apply_overrides();
        finalize_orders();
        build_branches();
        validate();
    }

    void init_polynomial(const std::vector<double>& c) {
        internal_family_ = MapFamily::polynomial;
        coeffs_ = c;
        while (coeffs_.size() > 1 && coeffs_.back() == 0.0) coeffs_.pop_back();
        dcoeffs_ = detail::poly_derive(coeffs_);
        quadratic_ = coeffs_.size() == 3 && coeffs_[2] != 0.0;
        if (quadratic_) {
            q_vertex_ = -coeffs_[1] / (2.0 * coeffs_[2]);
            q_top_ = detail::poly_eval(coeffs_, q_vertex_);
        }
        detect_polynomial_criticals();
    }

    void build_core_rescaled(const std::vector<double>& c) {
        // unimodal core [f^2(t), f(t)] mapped affinely onto [0,1]
        std::vector<double> dc = detail::poly_derive(c);
        // locate the single interior derivative sign change
        double t = find_single_turning(c, dc);
        double v1 = detail::poly_eval(c, t);
        double v2 = detail::poly_eval(c, v1);
        if (!(v2 < t && t < v1 && v2 >= -1e-12 && v1 <= 1.0 + 1e-12))
            throw std::invalid_argument("core_rescale: map is not unimodal with f^2(c) < c < f(c)");
        double L = v1 - v2;
        auto g = detail::poly_affine_conjugate(c, v2, L);
        // keep the critical value at or below 1 despite rounding
        std::vector<double> dg = detail::poly_derive(g);
        double tg = (t - v2) / L;
        double vg = detail::poly_eval(g, tg);
        if (vg > 1.0) g[0] -= (vg - 1.0);
        init_polynomial(g);
    }

    static double find_single_turning(const std::vector<double>& c, const std::vector<double>& dc) {
        (void)c;
        const int K = 4096;
        double root = -1.0;
        double prev = detail::poly_eval(dc, 0.0);
        auto record = [&](double r) {
            if (root >= 0.0) throw std::invalid_argument("core_rescale: map must be unimodal");
            root = r;
        };
        for (int i = 1; i <= K; ++i) {
            double x = static_cast<double>(i) / K;
            double v = detail::poly_eval(dc, x);
            if (v == 0.0) {
                if (x > 1e-12 && x < 1.0 - 1e-12) record(x);
            } else if (prev != 0.0 && prev * v < 0.0) {
                double lo = static_cast<double>(i - 1) / K, hi = x;
                double flo = prev;
                for (int it = 0; it < 80; ++it) {
                    double mid = 0.5 * (lo + hi);
                    double fm = detail::poly_eval(dc, mid);
                    if (flo * fm <= 0.0) hi = mid;
                    else {
                        lo = mid;
                        flo = fm;
                    }
                }
                record(0.5 * (lo + hi));
            }
            prev = v;
        }
        if (root < 0.0) throw std::invalid_argument("core_rescale: no turning point found");
        return root;
    }

    void detect_polynomial_criticals() {
        crit_.clear();
        const int K = 4096;
        double prev = detail::poly_eval(dcoeffs_, 0.0);
        for (int i = 1; i <= K; ++i) {
            double x = static_cast<double>(i) / K;
            double v = detail::poly_eval(dcoeffs_, x);
            if (v == 0.0 && x > 1e-12 && x < 1.0 - 1e-12) {
                // sample landed exactly on a root; add it only if the sign flips
                double h = 0.25 / K;
                double left = detail::poly_eval(dcoeffs_, x - h);
                double right = detail::poly_eval(dcoeffs_, x + h);
                if (left * right < 0.0)
                    crit_.push_back(CriticalPoint{x, polynomial_order_at(x), true});
                prev = v;
                continue;
            }
            if (prev != 0.0 && prev * v < 0.0) {
                double lo = static_cast<double>(i - 1) / K, hi = x;
                double flo = prev;
                for (int it = 0; it < 80; ++it) {
                    double mid = 0.5 * (lo + hi);
                    double fm = detail::poly_eval(dcoeffs_, mid);
                    if (flo * fm <= 0.0) hi = mid;
                    else {
                        lo = mid;
                        flo = fm;
                    }
                }
                double c = 0.5 * (lo + hi);
                if (c > 1e-12 && c < 1.0 - 1e-12)
                    crit_.push_back(CriticalPoint{c, polynomial_order_at(c), true});
            }
            prev = v;
        }
    }

    double polynomial_order_at(double c) const {
        // l_c = 1 + multiplicity of the derivative's root at c
        double scale = 0.0;
        for (double v : coeffs_) scale = std::max(scale, std::abs(v));
        std::vector<double> d = dcoeffs_;
        int mult = 0;
        while (d.size() >= 1 && std::abs(detail::poly_eval(d, c)) <= 1e-8 * std::max(scale, 1.0)) {
            ++mult;
            if (d.size() == 1) break;
            d = detail::poly_derive(d);
        }
        return 1.0 + std::max(mult, 1);
    }

    void init_piecewise(const std::vector<double>& p) {
        if (p.size() < 6 || p.size() % 2 != 0)
            throw std::invalid_argument("piecewise_affine: expected params [x0,y0,...,xk,yk], k >= 2");
        internal_family_ = MapFamily::piecewise_affine;
        pw_x_.clear();
        pw_y_.clear();
        for (std::size_t i = 0; i < p.size(); i += 2) {
            pw_x_.push_back(p[i]);
            pw_y_.push_back(p[i + 1]);
        }
        if (pw_x_.front() != 0.0 || pw_x_.back() != 1.0)
            throw std::invalid_argument("piecewise_affine: nodes must start at x=0 and end at x=1");
        for (std::size_t i = 1; i < pw_x_.size(); ++i)
            if (!(pw_x_[i] > pw_x_[i - 1]))
                throw std::invalid_argument("piecewise_affine: node x-values must be strictly increasing");
        pw_slope_.clear();
        for (std::size_t i = 0; i + 1 < pw_x_.size(); ++i) {
            double s = (pw_y_[i + 1] - pw_y_[i]) / (pw_x_[i + 1] - pw_x_[i]);
            if (s == 0.0) throw std::invalid_argument("piecewise_affine: flat segments are not allowed");
            pw_slope_.push_back(s);
        }
        crit_.clear();
        for (std::size_t i = 1; i < pw_x_.size() - 1; ++i)
            if (pw_slope_[i - 1] * pw_slope_[i] < 0.0)
                crit_.push_back(CriticalPoint{pw_x_[i], 1.0, true});
    }

    void apply_overrides() {
        if (desc_.critical_orders) {
            const auto& o = *desc_.critical_orders;
            if (o.size() != crit_.size())
                throw std::invalid_argument("critical_orders: expected " + std::to_string(crit_.size()) +
                                            " entries, got " + std::to_string(o.size()));
            for (std::size_t i = 0; i < o.size(); ++i) {
                if (!(o[i] >= 1.0)) throw std::invalid_argument("critical_orders: orders must be >= 1");
                crit_[i].order = o[i];
            }
        }
        for (auto [loc, ord] : desc_.extra_critical_points) {
            if (!(loc > 0.0 && loc < 1.0)) throw std::invalid_argument("extra_critical_points: location must be in (0,1)");
            if (!(ord > 1.0)) throw std::invalid_argument("extra_critical_points: order must be > 1");
            double dv = 1.0;
            try {
                dv = deriv_unchecked(loc);
            } catch (...) {
            }
            if (std::abs(dv) > 1e-8)
                throw std::invalid_argument("extra_critical_points: derivative does not vanish at declared point");
            crit_.push_back(CriticalPoint{loc, ord, false});
        }
        std::sort(crit_.begin(), crit_.end(),
                  [](const CriticalPoint& a, const CriticalPoint& b) { return a.location < b.location; });
        for (std::size_t i = 1; i < crit_.size(); ++i)
            if (std::abs(crit_[i].location - crit_[i - 1].location) < 1e-12)
                throw std::invalid_argument("critical points must be pairwise distinct");
    }

    double deriv_unchecked(double x) const {
        switch (internal_family_) {
            case MapFamily::tent: return x < 0.5 ? slope_ : -slope_;
            case MapFamily::logistic: return a_ - 2.0 * a_ * x;
            case MapFamily::polynomial: return detail::poly_eval(dcoeffs_, x);
            case MapFamily::piecewise_affine: return pw_slope_[pw_segment(x)];
        }
        return 0.0;
    }

    void finalize_orders() {
        if (crit_.empty()) {
            lmax_ = lmin_ = 1.0;
            return;
        }
        lmax_ = crit_.front().order;
        lmin_ = crit_.front().order;
        for (const auto& c : crit_) {
            lmax_ = std::max(lmax_, c.order);
            lmin_ = std::min(lmin_, c.order);
        }
    }

    void build_branches() {
        std::vector<double> t = turning_points();
        std::vector<double> cuts = {0.0};
        cuts.insert(cuts.end(), t.begin(), t.end());
        cuts.push_back(1.0);
        branches_.clear();
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            Branch b;
            b.dom = Interval::closed(cuts[i], cuts[i + 1]);
            double flo = std::min(std::max(raw_eval(b.dom.lo), 0.0), 1.0);
            double fhi = std::min(std::max(raw_eval(b.dom.hi), 0.0), 1.0);
            b.increasing = fhi >= flo;
            b.ymin = std::min(flo, fhi);
            b.ymax = std::max(flo, fhi);
            branches_.push_back(b);
        }
    }

    void validate() {
        double lo_raw = std::min(raw_eval(0.0), raw_eval(1.0));
        double hi_raw = std::max(raw_eval(0.0), raw_eval(1.0));
        for (const auto& c : crit_) {
            lo_raw = std::min(lo_raw, raw_eval(c.location));
            hi_raw = std::max(hi_raw, raw_eval(c.location));
        }
        if (lo_raw < -1e-9 || hi_raw > 1.0 + 1e-9)
            throw std::invalid_argument("map does not send [0,1] into [0,1]");
        // strict monotonicity between consecutive turning points (sampled)
        for (const auto& b : branches_) {
            if (b.dom.length() < 1e-12) continue;
            double prev = raw_eval(b.dom.lo);
            int bad = 0;
            for (int i = 1; i <= 32; ++i) {
                double x = b.dom.lo + b.dom.length() * i / 32.0;
                double v = raw_eval(x);
                if (b.increasing ? v < prev - 1e-12 : v > prev + 1e-12) ++bad;
                prev = v;
            }
            bool has_nonturning_crit = false;
            for (const auto& c : crit_)
                if (!c.is_turning && b.dom.strictly_contains(c.location)) has_nonturning_crit = true;
            if (bad > 0 && !has_nonturning_crit)
                throw std::invalid_argument("map is not strictly monotone between turning points");
        }
    }
};

} // namespace qsdyn
