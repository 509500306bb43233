#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qsdyn/interval.hpp"
#include "qsdyn/map.hpp"

namespace qsdyn {

class component_guard_error : public std::runtime_error {
public:
    explicit component_guard_error(const std::string& what) : std::runtime_error(what) {}
};

/// Orbit point sitting on a pull-back component boundary; the caller is
/// expected to nudge the radius and retry.
class chain_boundary_error : public std::runtime_error {
public:
    chain_boundary_error(int index, double point)
        : std::runtime_error("orbit point " + std::to_string(point) +
                             " lies on a component boundary at chain index " + std::to_string(index)),
          index(index), point(point) {}
    int index;
    double point;
};

class not_diffeomorphic_error : public std::runtime_error {
public:
    explicit not_diffeomorphic_error(const std::string& what) : std::runtime_error(what) {}
};

/// Which set counts when flagging chain intervals. The turning set matches the
/// criticality definition; "all" also counts declared non-turning criticals.
enum class CritSet { turning, all };

struct Chain {
    std::vector<Interval> intervals; // G_0, ..., G_s
    int criticality = 0;             // #{i < s : G_i meets the chosen critical set}
};

struct CriticalityRecord {
    double x = 0.0;
    int m = 0;
    double r = 0.0;
    int count = 0;
    std::vector<int> flagged_indices;
};

namespace detail {

inline const std::vector<double>& crit_locations(const MultimodalMap& map, CritSet cs,
                                                 std::vector<double>& storage) {
    storage = (cs == CritSet::turning) ? map.turning_points() : map.critical_locations();
    return storage;
}

inline bool meets(const Interval& w, const std::vector<double>& pts) {
    for (double c : pts)
        if (w.lo < c && c < w.hi) return true;
    return false;
}

} // namespace detail

/// All connected components of f^{-n}(J).
inline std::vector<Interval> pullback_components(const MultimodalMap& map, const Interval& J, int n,
                                                 std::int64_t guard = 1'000'000) {
    if (n < 1) throw std::invalid_argument("pullback_components: n must be >= 1");
    std::vector<Interval> level = {J};
    for (int step = 0; step < n; ++step) {
        std::vector<Interval> next;
        for (const auto& c : level) {
            auto pre = map.branch_preimages(c);
            next.insert(next.end(), pre.begin(), pre.end());
        }
        if (static_cast<std::int64_t>(next.size()) > guard)
            throw component_guard_error("pull-back component guard exceeded");
        level = std::move(next);
    }
    std::sort(level.begin(), level.end(),
              [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    return level;
}

struct TrackedComponent {
    Interval iv;
    int crit_hits = 0; // chain intervals toward J that met Crit(f)
};

/// Pull-back components of J by f^n with, per component, the number of chain
/// indices whose interval contains a critical point (the D of the measure
/// bookkeeping).
inline std::vector<TrackedComponent> pullback_components_tracked(const MultimodalMap& map,
                                                                 const Interval& J, int n,
                                                                 std::int64_t guard = 1'000'000) {
    std::vector<double> crits = map.critical_locations();
    std::vector<TrackedComponent> level = {{J, 0}};
    for (int step = 0; step < n; ++step) {
        std::vector<TrackedComponent> next;
        for (const auto& c : level) {
            for (const auto& w : map.branch_preimages(c.iv)) {
                int hits = c.crit_hits + (detail::meets(w, crits) ? 1 : 0);
                next.push_back({w, hits});
            }
        }
        if (static_cast<std::int64_t>(next.size()) > guard)
            throw component_guard_error("pull-back component guard exceeded");
        level = std::move(next);
    }
    return level;
}

/// The chain W_0, ..., W_m with W_m = J and W_j the component of f^{-1}(W_{j+1})
/// containing f^j(x). Throws chain_boundary_error when an orbit point is not
/// strictly inside its component.
inline Chain chain_to(const MultimodalMap& map, const Interval& J, int m, double x,
                      CritSet cs = CritSet::turning) {
    std::vector<double> storage;
    const auto& crits = detail::crit_locations(map, cs, storage);
    std::vector<double> orbit(static_cast<std::size_t>(m) + 1);
    orbit[0] = x;
    for (int i = 1; i <= m; ++i) orbit[i] = map.eval(orbit[i - 1]);

    std::vector<Interval> chain(static_cast<std::size_t>(m) + 1);
    chain[m] = J;
    for (int j = m - 1; j >= 0; --j) {
        auto comps = map.branch_preimages(chain[j + 1]);
        double p = orbit[j];
        const Interval* sel = nullptr;
        for (const auto& w : comps)
            if (w.contains(p, 1e-12)) {
                sel = &w;
                break;
            }
        if (!sel) throw chain_boundary_error(j, p);
        // interior endpoints are ambiguous ties; domain endpoints are fine
        bool near_lo = p < sel->lo + 1e-12 && sel->lo > 1e-12;
        bool near_hi = p > sel->hi - 1e-12 && sel->hi < 1.0 - 1e-12;
        if (near_lo || near_hi) throw chain_boundary_error(j, p);
        chain[j] = *sel;
    }
    Chain out;
    out.intervals = std::move(chain);
    for (int j = 0; j < m; ++j)
        if (detail::meets(out.intervals[j], crits)) ++out.criticality;
    return out;
}

/// Criticality of f^m at x with respect to r: the number of chain indices
/// j < m whose pull-back of B_I(f^m(x), r) meets the critical set.
inline CriticalityRecord criticality(const MultimodalMap& map, double x, int m, double r,
                                     CritSet cs = CritSet::turning) {
    CriticalityRecord rec;
    rec.x = x;
    rec.m = m;
    rec.r = r;
    if (m == 0) return rec;
    double fm = map.iterate(x, m);
    Chain ch = chain_to(map, ball(fm, r), m, x, cs);
    std::vector<double> storage;
    const auto& crits = detail::crit_locations(map, cs, storage);
    for (int j = 0; j < m; ++j)
        if (detail::meets(ch.intervals[j], crits)) rec.flagged_indices.push_back(j);
    rec.count = static_cast<int>(rec.flagged_indices.size());
    return rec;
}

struct ScanResult {
    double r = 0.0;
    std::vector<int> raw_max;  // per-depth max criticality over the witness set
    std::vector<int> plateau;  // running maximum (monotone in n)
    bool plateaued = false;    // no growth over the trailing half window
    int D = 0;                 // final plateau value
    int skipped = 0;           // witnesses dropped after repeated boundary ties
};

/// Empirical semi-hyperbolicity scan: max criticality over a uniform witness
/// grid enriched with the critical orbits, for every depth up to n_max.
inline ScanResult semi_hyperbolicity_scan(const MultimodalMap& map, double r, int n_max,
                                          int grid_size, CritSet cs = CritSet::turning) {
    ScanResult res;
    res.r = r;
    std::vector<double> witnesses;
    witnesses.reserve(grid_size + 1);
    for (int i = 0; i <= grid_size; ++i)
        witnesses.push_back(static_cast<double>(i) / grid_size);
    int seed_depth = std::max(128, 2 * n_max);
    for (double c : map.critical_locations()) {
        double x = c;
        for (int i = 0; i < seed_depth; ++i) {
            witnesses.push_back(x);
            x = map.eval(x);
        }
    }
    int running = 0;
    for (int n = 1; n <= n_max; ++n) {
        int mx = 0;
        for (double x : witnesses) {
            int count = -1;
            double rr = r;
            for (int attempt = 0; attempt < 4 && count < 0; ++attempt) {
                try {
                    count = criticality(map, x, n, rr, cs).count;
                } catch (const chain_boundary_error&) {
                    rr *= 1.0 + 1e-6;
                }
            }
            if (count < 0) {
                ++res.skipped;
                continue;
            }
            mx = std::max(mx, count);
        }
        res.raw_max.push_back(mx);
        running = std::max(running, mx);
        res.plateau.push_back(running);
    }
    res.D = running;
    int half = std::max(1, n_max / 2);
    res.plateaued = res.plateau[half - 1] == res.plateau[n_max - 1];
    return res;
}

/// Exponential-shrinking-of-components rate over dyadic test intervals of
/// length delta: anchored decay rate of the worst component length,
/// lambda = min over n in (n_max/2, n_max] of (M_{n0}/M_n)^{1/(n-n0)}.
inline double esc_rate(const MultimodalMap& map, double delta, int n_max,
                       std::int64_t guard = 1'000'000) {
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("esc_rate: delta must be in (0,1)");
    int k = static_cast<int>(std::lround(1.0 / delta));
    std::vector<double> worst(static_cast<std::size_t>(n_max) + 1, 0.0);
    for (int i = 0; i < k; ++i) {
        Interval J = Interval::open(i * delta, std::min((i + 1) * delta, 1.0));
        std::vector<Interval> level = {J};
        for (int n = 1; n <= n_max; ++n) {
            std::vector<Interval> next;
            for (const auto& c : level) {
                auto pre = map.branch_preimages(c);
                next.insert(next.end(), pre.begin(), pre.end());
            }
            if (static_cast<std::int64_t>(next.size()) > guard)
                throw component_guard_error("esc_rate: component guard exceeded");
            level = std::move(next);
            for (const auto& w : level) worst[n] = std::max(worst[n], w.length());
        }
    }
    int n0 = n_max / 2;
    worst[0] = delta;
    double lam = std::numeric_limits<double>::infinity();
    for (int n = n0 + 1; n <= n_max; ++n) {
        if (worst[n] <= 0.0) continue;
        lam = std::min(lam, std::pow(worst[n0] / worst[n], 1.0 / (n - n0)));
    }
    return lam;
}

/// max |Df^s(x)| / |Df^s(y)| over 200 samples of T. Requires f^s to be a
/// diffeomorphism on T (no breakpoint of f^s strictly inside).
inline double distortion(const MultimodalMap& map, const Interval& T, int s) {
    auto breaks = map.lap_breakpoints(s);
    for (double b : breaks)
        if (T.lo + 1e-12 < b && b < T.hi - 1e-12)
            throw not_diffeomorphic_error("f^s has a lap boundary inside T at x=" + std::to_string(b));
    // declared non-turning criticals also break the diffeomorphism
    bool has_nonturning = false;
    for (const auto& c : map.critical_points())
        if (!c.is_turning) has_nonturning = true;
    if (has_nonturning) {
        Interval img = T;
        for (int j = 0; j < s; ++j) {
            for (const auto& c : map.critical_points())
                if (!c.is_turning && img.strictly_contains(c.location))
                    throw not_diffeomorphic_error("f^s has a vanishing derivative inside T");
            img = map.image_interval(img);
        }
    }
    const int samples = 200;
    double dmin = std::numeric_limits<double>::infinity(), dmax = 0.0;
    for (int i = 0; i < samples; ++i) {
        double x = T.lo + T.length() * i / (samples - 1.0);
        double d = 1.0;
        for (int j = 0; j < s; ++j) {
            d *= std::abs(map.deriv(x));
            x = map.eval(x);
        }
        if (d == 0.0) throw not_diffeomorphic_error("Df^s vanishes inside T");
        dmin = std::min(dmin, d);
        dmax = std::max(dmax, d);
    }
    return dmax / dmin;
}

struct NiceCandidate {
    std::vector<Interval> components; // one open interval per critical point
};

struct NiceWitness {
    double boundary_point = 0.0;
    int n = 0;
};

struct NiceVerifyResult {
    bool nice = false;
    std::optional<NiceWitness> witness;
};

/// n_max-bounded certificate that V is a nice set: forward orbits of boundary
/// points never re-enter V.
inline NiceVerifyResult verify_nice_set(const MultimodalMap& map, const NiceCandidate& V, int n_max) {
    NiceVerifyResult res;
    auto inside = [&](double x) {
        for (const auto& c : V.components)
            if (c.strictly_contains(x)) return true;
        return false;
    };
    for (const auto& c : V.components) {
        for (double b : {c.lo, c.hi}) {
            double x = b;
            for (int n = 1; n <= n_max; ++n) {
                x = map.eval(x);
                if (inside(x)) {
                    res.nice = false;
                    res.witness = NiceWitness{b, n};
                    return res;
                }
            }
        }
    }
    res.nice = true;
    return res;
}

/// md(V_hat, V): min over components of min(gap_left, gap_right) / |V^c|.
inline double nice_couple_modulus(const NiceCandidate& outer, const NiceCandidate& inner) {
    if (outer.components.size() != inner.components.size())
        throw std::invalid_argument("nice_couple_modulus: component counts differ");
    double md = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < inner.components.size(); ++i) {
        const auto& v = inner.components[i];
        const auto& w = outer.components[i];
        if (v.lo < w.lo - 1e-15 || v.hi > w.hi + 1e-15)
            throw std::invalid_argument("nice_couple_modulus: inner component not contained in outer");
        double gap = std::min(v.lo - w.lo, w.hi - v.hi);
        md = std::min(md, std::max(gap, 0.0) / v.length());
    }
    return md;
}

/// Search for a nice set around the critical points: start from half the
/// closest-return distance and shrink symmetrically until the boundary-orbit
/// check passes at n_max.
inline std::optional<NiceCandidate> find_nice_set(const MultimodalMap& map, int n_max,
                                                  int return_depth = 512, double min_radius = 1e-8) {
    auto crits = map.critical_locations();
    if (crits.empty()) return std::nullopt;
    double e0 = 0.25;
    for (std::size_t i = 0; i < crits.size(); ++i) {
        e0 = std::min(e0, crits[i] / 2.0);
        e0 = std::min(e0, (1.0 - crits[i]) / 2.0);
        if (i > 0) e0 = std::min(e0, (crits[i] - crits[i - 1]) / 2.0);
        double x = crits[i];
        for (int n = 0; n < return_depth; ++n) {
            x = map.eval(x);
            e0 = std::min(e0, std::max(std::abs(x - crits[i]) / 2.0, min_radius));
        }
    }
    for (double e = e0; e >= min_radius; e *= 0.7) {
        NiceCandidate cand;
        for (double c : crits) cand.components.push_back(Interval::open(c - e, c + e));
        if (verify_nice_set(map, cand, n_max).nice) return cand;
    }
    return std::nullopt;
}

} // namespace qsdyn
