#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "qsdyn/interval.hpp"
#include "qsdyn/map.hpp"
#include "qsdyn/measure.hpp"
#include "qsdyn/pullback.hpp"

namespace qsdyn {

class mme_convergence_error : public std::runtime_error {
public:
    mme_convergence_error(const std::string& what, double residual)
        : std::runtime_error(what), residual(residual) {}
    double residual;
};

struct MmeResult {
    GridMeasure measure;    // the maximal entropy measure g * nu, normalized
    GridMeasure conformal;  // eigenmeasure nu of the dual operator: nu(f(E)) = s nu(E)
    std::vector<double> eigenfunction; // g at the partition nodes, mean-normalized
    double s_hat = 1.0;     // leading eigenvalue of the transfer operator
    double g_eigen_gap = 0.0; // relative disagreement of the forward eigenvalue
    int iterations = 0;
    double residual = 0.0;  // final sup-norm cdf change
    bool converged = false;
    int regrids = 0;
};

namespace detail {

struct CdfGrid {
    std::vector<double> x;
    std::vector<double> cdf;

    double at(double v) const {
        if (v <= 0.0) return 0.0;
        if (v >= 1.0) return 1.0;
        std::size_t lo = 0, hi = x.size() - 1;
        while (hi - lo > 1) {
            std::size_t mid = (lo + hi) / 2;
            if (x[mid] <= v) lo = mid;
            else hi = mid;
        }
        double w = x[hi] - x[lo];
        if (w <= 0.0) return cdf[lo];
        return cdf[lo] + (v - x[lo]) / w * (cdf[hi] - cdf[lo]);
    }
};

/// One application of the dual zero-potential transfer operator on cell
/// masses: m_i = sum over branches of nu(f(cell_i cap branch)). Returns the
/// normalization factor.
inline double dual_step(const MultimodalMap& map, CdfGrid& g) {
    const auto& branches = map.branches();
    std::size_t n = g.x.size() - 1;
    std::vector<double> mass(n, 0.0);
    for (const auto& b : branches) {
        for (std::size_t i = 0; i < n; ++i) {
            double lo = std::max(g.x[i], b.dom.lo);
            double hi = std::min(g.x[i + 1], b.dom.hi);
            if (lo >= hi) continue;
            double flo = map.eval(lo), fhi = map.eval(hi);
            if (flo > fhi) std::swap(flo, fhi);
            mass[i] += g.at(fhi) - g.at(flo);
        }
    }
    double lambda = 0.0;
    for (double m : mass) lambda += m;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += mass[i];
        g.cdf[i + 1] = acc / lambda;
    }
    g.cdf[0] = 0.0;
    g.cdf[n] = 1.0;
    return lambda;
}

inline void snap_nodes(std::vector<double>& nodes, const std::vector<double>& targets) {
    for (double t : targets) {
        if (t <= 0.0 || t >= 1.0) continue;
        std::size_t best = 1;
        double bd = 2.0;
        for (std::size_t i = 1; i + 1 < nodes.size(); ++i) {
            double d = std::abs(nodes[i] - t);
            if (d < bd) {
                bd = d;
                best = i;
            }
        }
        nodes[best] = t;
    }
}

} // namespace detail

/// Maximal entropy measure by power iteration of the zero-potential transfer
/// operator on a cdf grid. The dual iteration yields the conformal
/// eigenmeasure nu (constant Jacobian s_hat on injectivity branches); the
/// forward iteration yields the eigenfunction g; the invariant measure of
/// maximal entropy is the normalized product g * nu. For full branched maps
/// g is identically 1 and the two measures coincide.
///
/// The partition starts uniform, then regrids once to equal mass so rough
/// measures stay resolved; turning points are always kept as nodes.
inline MmeResult compute_mme(const MultimodalMap& map, int grid_n, int iter_max, double tol) {
    if (grid_n < 16) throw std::invalid_argument("compute_mme: grid_n must be >= 16");
    if (!(tol > 0.0)) throw std::invalid_argument("compute_mme: tol must be positive");

    auto turning = map.turning_points();
    detail::CdfGrid g;
    g.x.resize(grid_n + 1);
    for (int i = 0; i <= grid_n; ++i) g.x[i] = static_cast<double>(i) / grid_n;
    detail::snap_nodes(g.x, turning);
    g.cdf = g.x; // Lebesgue start: full support, symmetric across branches

    MmeResult res;
    double lambda = 1.0;
    double resid = 1.0;
    int it = 0;
    const int max_regrids = 1;
    for (int phase = 0; phase <= max_regrids; ++phase) {
        int phase_cap = (phase < max_regrids) ? iter_max / 2 : iter_max;
        while (it < phase_cap) {
            std::vector<double> prev = g.cdf;
            lambda = detail::dual_step(map, g);
            ++it;
            resid = 0.0;
            for (std::size_t i = 0; i < g.cdf.size(); ++i)
                resid = std::max(resid, std::abs(g.cdf[i] - prev[i]));
            if (resid <= tol) break;
        }
        if (phase < max_regrids) {
            // equal-mass regrid via interpolated quantiles
            std::vector<double> nodes(grid_n + 1);
            nodes[0] = 0.0;
            nodes[grid_n] = 1.0;
            std::size_t j = 0;
            for (int i = 1; i < grid_n; ++i) {
                double q = static_cast<double>(i) / grid_n;
                while (j + 1 < g.cdf.size() && g.cdf[j + 1] <= q) ++j;
                double dm = g.cdf[j + 1] - g.cdf[j];
                double t = dm > 0.0 ? (q - g.cdf[j]) / dm : 0.0;
                nodes[i] = g.x[j] + t * (g.x[j + 1] - g.x[j]);
            }
            detail::snap_nodes(nodes, turning);
            for (std::size_t i = 1; i < nodes.size(); ++i)
                if (!(nodes[i] > nodes[i - 1]))
                    throw mme_convergence_error("compute_mme: support failure during regrid", resid);
            std::vector<double> cdf(grid_n + 1);
            for (int i = 0; i <= grid_n; ++i) cdf[i] = g.at(nodes[i]);
            cdf[0] = 0.0;
            cdf[grid_n] = 1.0;
            g.x = std::move(nodes);
            g.cdf = std::move(cdf);
            ++res.regrids;
        }
    }
    bool converged = resid <= tol;
    // polish: drive the fixed-point residual well below the stopping tol
    for (int extra = 0; extra < 10; ++extra) lambda = detail::dual_step(map, g);
    it += 10;

    // forward eigenfunction g_{k+1}(y) = (1/lambda_g) sum_{f(x)=y} g_k(x),
    // piecewise constant per cell, collocated at cell midpoints. Midpoints
    // avoid the fold values where the preimage count drops on a null set.
    std::size_t nn = g.x.size();
    std::size_t cells = nn - 1;
    std::vector<std::vector<std::size_t>> stencil(cells);
    for (std::size_t i = 0; i < cells; ++i) {
        double mid = 0.5 * (g.x[i] + g.x[i + 1]);
        for (double p : map.preimages_point(mid)) {
            std::size_t lo = 0, hi = nn - 1;
            while (hi - lo > 1) {
                std::size_t m2 = (lo + hi) / 2;
                if (g.x[m2] <= p) lo = m2;
                else hi = m2;
            }
            stencil[i].push_back(lo);
        }
    }
    std::vector<double> ef(cells, 1.0), next(cells, 0.0);
    double lambda_g = lambda;
    for (int k = 0; k < 400; ++k) {
        double snum = 0.0, sden = 0.0;
        for (std::size_t i = 0; i < cells; ++i) {
            double v = 0.0;
            for (std::size_t idx : stencil[i]) v += ef[idx];
            next[i] = v;
            snum += v;
            sden += ef[i];
        }
        lambda_g = snum / sden;
        double shift = 0.0;
        for (std::size_t i = 0; i < cells; ++i) {
            next[i] /= lambda_g;
            shift = std::max(shift, std::abs(next[i] - ef[i]));
        }
        ef.swap(next);
        if (shift <= 1e-12) break;
    }

    // invariant measure: conformal cell masses weighted by the eigenfunction
    std::vector<double> mu_cdf(nn, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < cells; ++i) {
        total += (g.cdf[i + 1] - g.cdf[i]) * ef[i];
        mu_cdf[i + 1] = total;
    }
    for (auto& v : mu_cdf) v /= total;
    mu_cdf[0] = 0.0;
    mu_cdf[nn - 1] = 1.0;

    res.measure = GridMeasure(g.x, mu_cdf);
    res.conformal = GridMeasure(g.x, g.cdf);
    res.eigenfunction = std::move(ef);
    res.s_hat = lambda;
    res.g_eigen_gap = std::abs(lambda_g - lambda) / lambda;
    res.iterations = it;
    res.residual = resid;
    res.converged = converged;
    return res;
}

/// Constancy of the Jacobian: max over branches and 64 cell-aligned test
/// blocks per branch of |mu(f(A)) - s mu(A)| / mu(A).
inline double jacobian_residual(const MultimodalMap& map, const GridMeasure& mu, double s_hat) {
    const auto& nodes = mu.nodes();
    double worst = 0.0;
    for (const auto& b : map.branches()) {
        // node index range of this branch
        std::size_t i0 = 0, i1 = nodes.size() - 1;
        while (i0 + 1 < nodes.size() && nodes[i0] < b.dom.lo - 1e-15) ++i0;
        while (i1 > 0 && nodes[i1] > b.dom.hi + 1e-15) --i1;
        if (i1 <= i0) continue;
        const int blocks = 64;
        for (int k = 0; k < blocks; ++k) {
            std::size_t a = i0 + (i1 - i0) * k / blocks;
            std::size_t c = i0 + (i1 - i0) * (k + 1) / blocks;
            if (c <= a) continue;
            double ma = mu.mass(nodes[a], nodes[c]);
            if (ma <= 0.0) continue;
            double flo = map.eval(nodes[a]), fhi = map.eval(nodes[c]);
            if (flo > fhi) std::swap(flo, fhi);
            double mfa = mu.mass(flo, fhi);
            worst = std::max(worst, std::abs(mfa - s_hat * ma) / ma);
        }
    }
    return worst;
}

struct PullbackBoundCheck {
    bool ok = true;
    int components = 0;
    int checked = 0;    // components with masses above grid resolution
    int violations = 0;
    double worst_factor = 1.0; // largest multiplicative excursion past a bound
};

/// Pull-back measure bookkeeping: every pull-back W of V by f^m must satisfy
///   exp(-m h) mu(f^m(W)) <= mu(W) <= 2^D exp(-m h) mu(f^m(W))
/// with D the number of chain components meeting Crit(f), up to the given
/// multiplicative slack. Masses are compared through their grid envelopes, so
/// components below grid resolution cannot produce spurious failures.
inline PullbackBoundCheck pullback_measure_bound_check(const MultimodalMap& map,
                                                       const GridMeasure& mu, double s_hat,
                                                       const Interval& V, int m,
                                                       double slack = 1.05) {
    if (V.length() > 0.05 + 1e-12)
        throw std::invalid_argument("pullback_measure_bound_check: |V| must be <= 0.05");
    PullbackBoundCheck res;
    if (m == 0) return res;
    double emh = std::pow(s_hat, -m);
    for (const auto& tc : pullback_components_tracked(map, V, m)) {
        ++res.components;
        // forward image of the component
        Interval img = tc.iv;
        for (int j = 0; j < m; ++j) img = map.image_interval(img);
        auto [w_lo, w_hi] = mu.mass_envelope(tc.iv.lo, tc.iv.hi);
        auto [f_lo, f_hi] = mu.mass_envelope(img.lo, img.hi);
        double lower = emh * f_lo;                          // lower bound on mu(W)
        double upper = std::pow(2.0, tc.crit_hits) * emh * f_hi; // upper bound
        bool meaningful = w_lo > 0.0 && f_lo > 0.0;
        if (meaningful) ++res.checked;
        bool pass = w_hi * slack >= lower && w_lo <= upper * slack;
        if (!pass) {
            ++res.violations;
            res.ok = false;
            double excess = 1.0;
            if (w_hi * slack < lower) excess = lower / std::max(w_hi, 1e-300);
            if (w_lo > upper * slack) excess = std::max(excess, w_lo / std::max(upper, 1e-300));
            res.worst_factor = std::max(res.worst_factor, excess);
        }
    }
    return res;
}

/// f-invariance diagnostic: max over test intervals A of
/// |mu(f^{-1}(A)) - mu(A)|, with the preimage mass summed over components.
inline double invariance_residual(const MultimodalMap& map, const GridMeasure& mu,
                                  int intervals = 64) {
    double worst = 0.0;
    for (int k = 1; k <= intervals; ++k) {
        double c = static_cast<double>(k) / (intervals + 1);
        double h = 0.5 / (2.0 * (intervals + 1));
        Interval A = Interval::open(c - h, c + h);
        double pre = 0.0;
        for (const auto& w : map.branch_preimages(A)) pre += mu.mass(w);
        worst = std::max(worst, std::abs(pre - mu.mass(A)));
    }
    return worst;
}

} // namespace qsdyn
