#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "qsdyn/pullback.hpp"

using namespace qsdyn;

namespace {
MultimodalMap pw3() {
    return MultimodalMap::piecewise_affine({0, 1.0 / 3, 2.0 / 3, 1}, {0, 1, 0, 1});
}
} // namespace

TEST_CASE("pullback components: affine and quadratic oracles") {
    auto T = MultimodalMap::tent(2.0);
    auto c1 = pullback_components(T, Interval::open(0.4, 0.6), 1);
    REQUIRE(c1.size() == 2);
    CHECK(c1[0].lo == Catch::Approx(0.2).margin(1e-13));
    CHECK(c1[0].hi == Catch::Approx(0.3).margin(1e-13));
    CHECK(c1[1].lo == Catch::Approx(0.7).margin(1e-13));
    CHECK(c1[1].hi == Catch::Approx(0.8).margin(1e-13));

    auto L = MultimodalMap::logistic(4.0);
    auto q1 = pullback_components(L, Interval{0.9, 1.0, true, false}, 1);
    REQUIRE(q1.size() == 1);
    CHECK(q1[0].lo == Catch::Approx(0.5 - std::sqrt(0.25 - 0.9 / 4.0)).margin(1e-11));

    // constant-slope halving of every component
    for (int n = 1; n <= 6; ++n) {
        auto comps = pullback_components(T, Interval::open(0.3, 0.3 + 0.125), n);
        for (const auto& w : comps)
            CHECK(w.length() == Catch::Approx(0.125 / std::pow(2.0, n)).margin(1e-12));
    }
}

TEST_CASE("pullback components cover exactly the sampled preimage set") {
    auto L = MultimodalMap::logistic(4.0);
    Interval J = Interval::open(0.55, 0.62);
    int n = 4;
    auto comps = pullback_components(L, J, n);
    std::mt19937 rng(12345);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    for (int t = 0; t < 1000; ++t) {
        double x = dist(rng);
        bool maps_in = L.iterate(x, n) > J.lo + 1e-9 && L.iterate(x, n) < J.hi - 1e-9;
        bool in_comp = false;
        for (const auto& w : comps)
            if (w.contains(x, 1e-9)) in_comp = true;
        if (maps_in) CHECK(in_comp);
        if (!in_comp) CHECK_FALSE(maps_in);
    }
}

TEST_CASE("chain_to: the quadratic fold example") {
    auto L = MultimodalMap::logistic(4.0);
    auto ch = chain_to(L, ball(1.0, 0.1), 1, 0.5);
    REQUIRE(ch.intervals.size() == 2);
    CHECK(ch.intervals[1].lo == Catch::Approx(0.9));
    CHECK(ch.intervals[0].lo == Catch::Approx(0.34188611699158103).margin(1e-9));
    CHECK(ch.intervals[0].hi == Catch::Approx(0.65811388300841897).margin(1e-9));
    CHECK(ch.criticality == 1);
}

TEST_CASE("chain_to nests correctly under the image map") {
    auto L = MultimodalMap::logistic(4.0);
    for (double x : {0.123, 0.3, 0.61, 0.87}) {
        int m = 6;
        double fm = L.iterate(x, m);
        auto ch = chain_to(L, ball(fm, 0.02), m, x);
        for (int i = 0; i < m; ++i) {
            auto img = L.image_interval(ch.intervals[i]);
            CHECK(img.lo >= ch.intervals[i + 1].lo - 1e-9);
            CHECK(img.hi <= ch.intervals[i + 1].hi + 1e-9);
        }
    }
}

TEST_CASE("criticality: oracle values") {
    auto L = MultimodalMap::logistic(4.0);
    CHECK(criticality(L, 0.5, 1, 0.1).count == 1);

    auto T = MultimodalMap::tent(2.0);
    // affine oracle: W_0 = B(T(0.9), 0.01) inverted on the right branch
    auto rec = criticality(T, 0.9, 1, 0.01);
    CHECK(rec.count == 0);
    auto ch = chain_to(T, ball(T.eval(0.9), 0.01), 1, 0.9);
    CHECK(ch.intervals[0].lo == Catch::Approx(0.895).margin(1e-12));
    CHECK(ch.intervals[0].hi == Catch::Approx(0.905).margin(1e-12));

    CHECK(criticality(L, 0.3, 0, 0.1).count == 0);

    // a turning point at the start of the chain flags index 0
    auto t2 = criticality(T, 0.5, 2, 1e-4);
    CHECK(t2.count >= 1);
    CHECK(t2.flagged_indices[0] == 0);
}

TEST_CASE("criticality is monotone in the radius") {
    auto L = MultimodalMap::logistic(4.0);
    for (double x : {0.1, 0.37, 0.5, 0.82}) {
        for (int m : {2, 5, 9}) {
            auto small = criticality(L, x, m, 0.005);
            auto large = criticality(L, x, m, 0.02);
            CHECK(small.count <= large.count);
        }
    }
}

TEST_CASE("semi-hyperbolicity scan plateaus on the oracle maps") {
    auto sL = semi_hyperbolicity_scan(MultimodalMap::logistic(4.0), 0.01, 20, 256);
    CHECK(sL.D <= 2);
    CHECK(sL.plateaued);
    for (std::size_t i = 1; i < sL.plateau.size(); ++i)
        CHECK(sL.plateau[i] >= sL.plateau[i - 1]);

    auto sT = semi_hyperbolicity_scan(MultimodalMap::tent(2.0), 0.01, 20, 256);
    CHECK(sT.D <= 2);
    CHECK(sT.plateaued);
}

TEST_CASE("backward stability: small targets give uniformly small pull-backs") {
    // for kappa in {0.1, 0.05} some dyadic delta keeps all components shorter
    auto L = MultimodalMap::logistic(4.0);
    for (double kappa : {0.1, 0.05}) {
        bool found = false;
        for (int k = 4; k <= 10 && !found; ++k) {
            double delta = std::ldexp(1.0, -k);
            double worst = 0.0;
            for (int i = 0; i < (1 << k); ++i) {
                Interval J = Interval::open(i * delta, (i + 1) * delta);
                std::vector<Interval> level = {J};
                for (int n = 1; n <= 10; ++n) {
                    std::vector<Interval> next;
                    for (const auto& c : level) {
                        auto pre = L.branch_preimages(c);
                        next.insert(next.end(), pre.begin(), pre.end());
                    }
                    level = std::move(next);
                    for (const auto& w : level) worst = std::max(worst, w.length());
                }
            }
            if (worst < kappa) found = true;
        }
        CHECK(found);
    }
}

TEST_CASE("esc rates: exact on constant-slope maps, bounded below on logistic") {
    CHECK(esc_rate(MultimodalMap::tent(2.0), std::ldexp(1.0, -6), 14) ==
          Catch::Approx(2.0).margin(1e-6));
    CHECK(esc_rate(pw3(), std::ldexp(1.0, -6), 12) == Catch::Approx(3.0).margin(1e-6));
    CHECK(esc_rate(MultimodalMap::logistic(4.0), std::ldexp(1.0, -6), 12) >= 1.5);
}

TEST_CASE("distortion") {
    auto T = MultimodalMap::tent(2.0);
    CHECK(distortion(T, Interval::closed(0.1, 0.4), 1) == Catch::Approx(1.0));

    auto L = MultimodalMap::logistic(4.0);
    // |Df| = |4 - 8x| monotone on [0.1, 0.2]: ratio 3.2 / 2.4
    CHECK(distortion(L, Interval::closed(0.1, 0.2), 1) == Catch::Approx(4.0 / 3.0).margin(1e-6));
    CHECK_THROWS_AS(distortion(L, Interval::closed(0.45, 0.55), 1), not_diffeomorphic_error);
}

TEST_CASE("nice set verification") {
    auto L = MultimodalMap::logistic(4.0);
    NiceCandidate bad{{Interval::open(0.4, 0.6)}};
    auto r = verify_nice_set(L, bad, 10);
    CHECK_FALSE(r.nice);
    REQUIRE(r.witness.has_value());
    CHECK(r.witness->boundary_point == 0.4);
    CHECK(r.witness->n == 3);
    // orbit oracle: 0.4 -> 0.96 -> 0.1536 -> 0.52002816 inside (0.4, 0.6)
    CHECK(L.iterate(0.4, 3) == Catch::Approx(0.52002816).margin(1e-12));

    auto T = MultimodalMap::tent(2.0);
    NiceCandidate tb{{Interval::open(0.25, 0.75)}};
    auto rt = verify_nice_set(T, tb, 10);
    CHECK_FALSE(rt.nice);
    CHECK(rt.witness->n == 1);

    // a searched candidate passes at n_max = 50
    auto found = find_nice_set(L, 50);
    REQUIRE(found.has_value());
    CHECK(verify_nice_set(L, *found, 50).nice);
}

TEST_CASE("nice couple modulus") {
    NiceCandidate inner{{Interval::open(0.45, 0.55)}};
    NiceCandidate outer{{Interval::open(0.4, 0.6)}};
    CHECK(nice_couple_modulus(outer, inner) == Catch::Approx(0.5));

    NiceCandidate outer2{{Interval::open(0.45, 0.6)}};
    CHECK(nice_couple_modulus(outer2, inner) == Catch::Approx(0.0));

    NiceCandidate in2{{Interval::open(0.2, 0.25), Interval::open(0.7, 0.8)}};
    NiceCandidate out2{{Interval::open(0.15, 0.30), Interval::open(0.69, 0.83)}};
    double m1 = std::min(0.05, 0.05) / 0.05;
    double m2 = std::min(0.01, 0.03) / 0.1;
    CHECK(nice_couple_modulus(out2, in2) == Catch::Approx(std::min(m1, m2)));

    NiceCandidate mism{{Interval::open(0.1, 0.2)}};
    CHECK_THROWS_AS(nice_couple_modulus(mism, in2), std::invalid_argument);
}

TEST_CASE("tracked pullbacks count critical hits like the chain") {
    auto L = MultimodalMap::logistic(4.0);
    Interval V = Interval::open(0.48, 0.52);
    auto tracked = pullback_components_tracked(L, V, 3);
    REQUIRE(!tracked.empty());
    for (const auto& tc : tracked) {
        // recompute hits by walking the chain of this component
        double mid = tc.iv.mid();
        auto ch = chain_to(L, V, 3, mid, CritSet::all);
        CHECK(ch.criticality == tc.crit_hits);
    }
}
