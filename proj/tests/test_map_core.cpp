#include <catch2/catch_amalgamated.hpp>

#include "qsdyn/map.hpp"

using namespace qsdyn;

namespace {

// Independent oracle for logistic branch inversion: quadratic formula for
// a x (1-x) = y, i.e. x = 1/2 -+ sqrt(1/4 - y/a).
double logistic_pre_left(double a, double y) { return 0.5 - std::sqrt(0.25 - y / a); }
double logistic_pre_right(double a, double y) { return 0.5 + std::sqrt(0.25 - y / a); }

} // namespace

TEST_CASE("eval on closed-form families") {
    auto T = MultimodalMap::tent(2.0);
    CHECK(T.eval(0.25) == 0.5);

    auto L = MultimodalMap::logistic(4.0);
    CHECK(L.eval(0.5) == 1.0);
    CHECK(L.eval(0.96) == Catch::Approx(4.0 * 0.96 * 0.04).margin(1e-15));
    CHECK(L.eval(0.96) == Catch::Approx(0.1536).margin(1e-12));

    CHECK_THROWS_AS(L.eval(1.5), std::domain_error);
    CHECK_THROWS_AS(L.eval(-0.2), std::domain_error);
}

TEST_CASE("deriv, including the tent corner error") {
    auto L = MultimodalMap::logistic(4.0);
    CHECK(L.deriv(0.0) == 4.0);
    CHECK(L.deriv(0.5) == 0.0);

    auto T = MultimodalMap::tent(2.0);
    CHECK_THROWS_AS(T.deriv(0.5), non_differentiable_error);
    CHECK(T.deriv(0.25) == 2.0);
    CHECK(T.deriv(0.75) == -2.0);
}

TEST_CASE("critical point data per family") {
    auto L = MultimodalMap::logistic(4.0);
    REQUIRE(L.critical_points().size() == 1);
    CHECK(L.critical_points()[0].location == 0.5);
    CHECK(L.critical_points()[0].order == 2.0);
    CHECK(L.critical_points()[0].is_turning);
    CHECK(L.lmax() == 2.0);
    CHECK(L.lmin() == 2.0);

    auto T = MultimodalMap::tent(2.0);
    REQUIRE(T.critical_points().size() == 1);
    CHECK(T.critical_points()[0].order == 1.0);

    // full +-3 map as a graph of nodes
    auto W = MultimodalMap::piecewise_affine({0, 1.0 / 3, 2.0 / 3, 1}, {0, 1, 0, 1});
    REQUIRE(W.critical_points().size() == 2);
    CHECK(W.critical_points()[0].location == Catch::Approx(1.0 / 3));
    CHECK(W.critical_points()[1].location == Catch::Approx(2.0 / 3));

    // quadratic polynomial: same map as logistic(4)
    auto P = MultimodalMap::polynomial({0.0, 4.0, -4.0});
    REQUIRE(P.critical_points().size() == 1);
    CHECK(P.critical_points()[0].location == Catch::Approx(0.5).margin(1e-10));
    CHECK(P.critical_points()[0].order == 2.0);
}

TEST_CASE("construction rejects maps leaving [0,1]") {
    CHECK_THROWS_AS(MultimodalMap::tent(2.5), std::invalid_argument);
    CHECK_THROWS_AS(MultimodalMap::polynomial({0.0, 5.0, -4.0}), std::invalid_argument);
}

TEST_CASE("non-turning critical point can be declared") {
    // p(x) = 0.5 + 4 (x - 0.5)^3 is strictly increasing with p'(0.5) = 0
    MapDescriptor d;
    d.family = MapFamily::polynomial;
    d.params = {0.5 - 4.0 * 0.125, 3.0, -6.0, 4.0};
    d.extra_critical_points = {{0.5, 3.0}};
    MultimodalMap m(d);
    REQUIRE(m.critical_points().size() == 1);
    CHECK_FALSE(m.critical_points()[0].is_turning);
    CHECK(m.lmax() == 3.0);
    CHECK(m.turning_points().empty());
}

TEST_CASE("laps: counts and exact subdivision") {
    auto T = MultimodalMap::tent(2.0);
    // oracle: recursive halving gives 2^n laps of length 2^-n
    auto l3 = T.laps(3);
    REQUIRE(l3.size() == 8);
    for (std::size_t i = 0; i < 8; ++i) {
        CHECK(l3[i].lo == Catch::Approx(i / 8.0).margin(1e-14));
        CHECK(l3[i].length() == Catch::Approx(1.0 / 8).margin(1e-14));
    }

    auto L = MultimodalMap::logistic(4.0);
    CHECK(L.laps(1).size() == 2);
    CHECK(L.laps(1)[0].hi == 0.5);
    CHECK(L.laps(5).size() == 32);
}

TEST_CASE("laps tile [0,1] and refine") {
    for (auto m : {MultimodalMap::logistic(4.0), MultimodalMap::tent(2.0),
                   MultimodalMap::piecewise_affine({0, 1.0 / 3, 2.0 / 3, 1}, {0, 1, 0, 1})}) {
        for (int n = 1; n <= 5; ++n) {
            auto laps = m.laps(n);
            CHECK(laps.front().lo == 0.0);
            CHECK(laps.back().hi == 1.0);
            for (std::size_t i = 1; i < laps.size(); ++i)
                CHECK(laps[i].lo == laps[i - 1].hi);
        }
        // refinement: every lap of f^{n+1} inside exactly one lap of f^n
        auto coarse = m.laps(3);
        auto fine = m.laps(4);
        for (const auto& f : fine) {
            int owners = 0;
            for (const auto& c : coarse)
                if (f.lo >= c.lo - 1e-12 && f.hi <= c.hi + 1e-12) ++owners;
            CHECK(owners >= 1);
        }
    }
}

TEST_CASE("iterates are monotone on each lap") {
    auto L = MultimodalMap::logistic(4.0);
    for (int n : {2, 4}) {
        for (const auto& lap : L.laps(n)) {
            if (lap.length() < 1e-9) continue;
            double prev = L.iterate(lap.lo + lap.length() * 0.005, n);
            int sign = 0;
            for (int i = 1; i <= 100; ++i) {
                double x = lap.lo + lap.length() * (0.005 + 0.99 * i / 100.0);
                double v = L.iterate(x, n);
                int s = v > prev ? 1 : (v < prev ? -1 : 0);
                if (s != 0) {
                    if (sign == 0) sign = s;
                    CHECK(s == sign);
                }
                prev = v;
            }
        }
    }
}

TEST_CASE("branch preimages: merging across the fold") {
    auto L = MultimodalMap::logistic(4.0);
    auto comps = L.branch_preimages(Interval{0.9, 1.0, true, false});
    REQUIRE(comps.size() == 1);
    CHECK(comps[0].lo == Catch::Approx(logistic_pre_left(4.0, 0.9)).margin(1e-11));
    CHECK(comps[0].hi == Catch::Approx(logistic_pre_right(4.0, 0.9)).margin(1e-11));
    CHECK(comps[0].lo == Catch::Approx(0.34188611699158103).margin(1e-9));

    auto T = MultimodalMap::tent(2.0);
    auto tc = T.branch_preimages(Interval::open(0.0, 0.5));
    REQUIRE(tc.size() == 2);
    CHECK(tc[0].lo == Catch::Approx(0.0).margin(1e-14));
    CHECK(tc[0].hi == Catch::Approx(0.25).margin(1e-14));
    CHECK(tc[1].lo == Catch::Approx(0.75).margin(1e-14));
    CHECK(tc[1].hi == Catch::Approx(1.0).margin(1e-14));

    CHECK(L.branch_preimages(Interval::open(1.0, 1.0)).empty());
}

TEST_CASE("image_interval") {
    auto L = MultimodalMap::logistic(4.0);
    auto img = L.image_interval(Interval::closed(0.4, 0.6));
    CHECK(img.lo == Catch::Approx(0.96).margin(1e-14));
    CHECK(img.hi == 1.0);

    auto T = MultimodalMap::tent(2.0);
    auto it = T.image_interval(Interval::closed(0.0, 0.25));
    CHECK(it.lo == 0.0);
    CHECK(it.hi == 0.5);

    auto whole = L.image_interval(Interval::closed(0.0, 1.0));
    CHECK(whole.lo == 0.0);
    CHECK(whole.hi == 1.0);
}

TEST_CASE("preimage components push forward onto J within range") {
    auto L = MultimodalMap::logistic(4.0);
    for (auto J : {Interval::open(0.2, 0.35), Interval::open(0.9, 0.99), Interval::open(0.01, 0.03)}) {
        auto comps = L.branch_preimages(J);
        REQUIRE(!comps.empty());
        for (const auto& w : comps) {
            auto img = L.image_interval(w);
            CHECK(img.lo >= J.lo - 1e-9);
            CHECK(img.hi <= J.hi + 1e-9);
        }
        // sampled membership equivalence
        for (int i = 0; i <= 500; ++i) {
            double x = i / 500.0;
            bool in_pre = false;
            for (const auto& w : comps)
                if (w.contains(x, 1e-9)) in_pre = true;
            bool maps_in = L.eval(x) > J.lo + 1e-9 && L.eval(x) < J.hi - 1e-9;
            if (maps_in) CHECK(in_pre);
        }
    }
}

TEST_CASE("core rescale of a logistic parameter gives an exact-on-core quadratic") {
    MapDescriptor d;
    d.family = MapFamily::logistic;
    d.params = {3.9};
    d.core_rescale = true;
    MultimodalMap m(d);
    REQUIRE(m.critical_points().size() == 1);
    double c = m.critical_points()[0].location;
    // critical value of the rescaled core map is the top of the core
    CHECK(m.eval(c) == Catch::Approx(1.0).margin(1e-12));
    // descriptor echo preserves the user's input
    CHECK(m.descriptor().family == MapFamily::logistic);
    CHECK(m.descriptor().core_rescale);
    // orbit stays in [0,1]
    double x = c;
    for (int i = 0; i < 2000; ++i) {
        x = m.eval(x);
        REQUIRE(x >= 0.0);
        REQUIRE(x <= 1.0);
    }
}

TEST_CASE("critical order override") {
    MapDescriptor d;
    d.family = MapFamily::logistic;
    d.params = {4.0};
    d.critical_orders = std::vector<double>{2.5};
    MultimodalMap m(d);
    CHECK(m.critical_points()[0].order == 2.5);
    CHECK(m.lmax() == 2.5);

    d.critical_orders = std::vector<double>{1.0, 2.0};
    CHECK_THROWS_AS(MultimodalMap(d), std::invalid_argument);
}
