#include <catch2/catch_amalgamated.hpp>

#include <numbers>

#include "qsdyn/conjugacy.hpp"
#include "qsdyn/mme.hpp"

using namespace qsdyn;

namespace {

MultimodalMap pw3() {
    return MultimodalMap::piecewise_affine({0, 1.0 / 3, 2.0 / 3, 1}, {0, 1, 0, 1});
}

double tent2(double y) { return y <= 0.5 ? 2.0 * y : 2.0 - 2.0 * y; }

GridMeasure square_cdf_measure(int n) {
    // h(x) = x^2 as a grid measure; a scanner sanity target, not a map cdf
    std::vector<double> xs(n + 1), cs(n + 1);
    for (int i = 0; i <= n; ++i) {
        xs[i] = static_cast<double>(i) / n;
        cs[i] = xs[i] * xs[i];
    }
    xs[n] = cs[n] = 1.0;
    return GridMeasure(std::move(xs), std::move(cs));
}

} // namespace

TEST_CASE("conjugacy of the full tent map is the identity") {
    auto T = MultimodalMap::tent(2.0);
    auto res = compute_mme(T, 1 << 12, 200, 1e-6);
    auto prof = build_conjugacy(T, res.measure, res.s_hat);
    CHECK(prof.slope_residual <= 1e-6);
    for (std::size_t i = 0; i < prof.x_samples.size(); i += 97)
        CHECK(prof.y_samples[i] == Catch::Approx(prof.x_samples[i]).margin(1e-9));
    CHECK(conjugacy_residual(T, prof) <= 1e-9);
    REQUIRE(prof.turning_images.size() == 1);
    CHECK(prof.turning_images[0] == Catch::Approx(0.5).margin(1e-9));
}

TEST_CASE("conjugacy of the full quadratic map straightens to the tent map") {
    auto L = MultimodalMap::logistic(4.0);
    auto res = compute_mme(L, 1 << 12, 200, 1e-6);
    auto prof = build_conjugacy(L, res.measure, res.s_hat);
    CHECK(prof.slope_residual <= 1e-2);
    double sup = 0.0;
    for (std::size_t i = 0; i < prof.y_samples.size(); ++i)
        sup = std::max(sup, std::abs(prof.F_samples[i] - tent2(prof.y_samples[i])));
    CHECK(sup <= 1e-3);
    // h(1/2) = 1/2 and F(1/2) = 1
    CHECK(res.measure.cdf_at(0.5) == Catch::Approx(0.5).margin(1e-3));
    CHECK(conjugate_model_eval(prof, 0.5) == Catch::Approx(1.0).margin(1e-3));
    CHECK(conjugacy_residual(L, prof) <= 2e-3);
}

TEST_CASE("piecewise affine maps are their own straightening") {
    auto W = pw3();
    auto res = compute_mme(W, 1 << 12, 200, 1e-6);
    auto prof = build_conjugacy(W, res.measure, res.s_hat);
    CHECK(prof.slope_residual <= 1e-6);
    CHECK(conjugacy_residual(W, prof) <= 1e-9);
}

TEST_CASE("wrong slope fed to the build is caught by the residual") {
    auto L = MultimodalMap::logistic(4.0);
    auto res = compute_mme(L, 1 << 12, 200, 1e-6);
    auto prof = build_conjugacy(L, res.measure, 1.5); // deliberately wrong
    CHECK(prof.slope_residual > 0.2);
    CHECK(conjugacy_residual(L, prof) > 0.05);
}

TEST_CASE("slope signs alternate exactly at turning images") {
    auto L = MultimodalMap::logistic(4.0);
    auto res = compute_mme(L, 1 << 12, 200, 1e-6);
    auto prof = build_conjugacy(L, res.measure, res.s_hat);
    // count sign changes of dF away from the excluded windows
    double cell = res.measure.max_cell_mass();
    int changes = 0;
    int prev_sign = 0;
    std::vector<double> change_pos;
    for (std::size_t i = 0; i + 1 < prof.y_samples.size(); ++i) {
        double dy = prof.y_samples[i + 1] - prof.y_samples[i];
        if (dy <= 0.0) continue;
        double df = prof.F_samples[i + 1] - prof.F_samples[i];
        int sign = df > 0 ? 1 : (df < 0 ? -1 : 0);
        if (sign == 0) continue;
        if (prev_sign != 0 && sign != prev_sign) {
            ++changes;
            change_pos.push_back(prof.y_samples[i]);
        }
        prev_sign = sign;
    }
    REQUIRE(changes == 1);
    CHECK(change_pos[0] == Catch::Approx(prof.turning_images[0]).margin(3 * cell));
}

TEST_CASE("qs modulus oracles") {
    std::vector<double> x_grid;
    for (int i = 0; i <= 1024; ++i) x_grid.push_back(i / 1024.0);
    auto eps_grid = log_spaced_scales(1e-3, 0.1, 24);

    // identity: K = 1
    auto leb = GridMeasure::lebesgue(1 << 12);
    CHECK(qs_modulus(leb, eps_grid, x_grid).K == Catch::Approx(1.0).margin(1e-9));

    // arcsine cdf: K -> sqrt(2)+1 hugging the endpoint
    auto L = MultimodalMap::logistic(4.0);
    auto res = compute_mme(L, 1 << 12, 200, 1e-6);
    auto qs = qs_modulus(res.measure, eps_grid, x_grid);
    CHECK(qs.K == Catch::Approx(std::sqrt(2.0) + 1.0).margin(0.05));

    // h(x) = x^2: ratio (2x+eps)/(2x-eps) maximal at x = eps, giving 3
    auto sq = square_cdf_measure(1 << 12);
    CHECK(qs_modulus(sq, eps_grid, x_grid).K == Catch::Approx(3.0).margin(1e-6));
}

TEST_CASE("qs modulus equals the adjacent-ratio constant on identical grids") {
    auto L = MultimodalMap::logistic(4.0);
    auto res = compute_mme(L, 1 << 12, 200, 1e-6);
    std::vector<double> x_grid;
    for (int i = 0; i <= 512; ++i) x_grid.push_back(i / 512.0);
    auto eps_grid = log_spaced_scales(1e-3, 0.1, 12);
    auto qs = qs_modulus(res.measure, eps_grid, x_grid);
    auto adj = adjacent_ratio_constant(res.measure, eps_grid, x_grid);
    CHECK(qs.K == adj.C);
    for (std::size_t i = 0; i < qs.table.size(); ++i)
        CHECK(qs.table[i].second == adj.curve[i].second);
}

TEST_CASE("a non-doubling synthetic cdf has diverging qs modulus") {
    // cdf(x) = exp(1 - 1/x): increments collapse toward 0 faster than any power
    std::vector<double> xs, cs;
    xs.push_back(0.0);
    cs.push_back(0.0);
    for (int i = 0; i <= 600; ++i) {
        double x = std::exp(std::log(1e-4) + (0.0 - std::log(1e-4)) * i / 600.0);
        if (x <= xs.back() + 1e-15) continue;
        xs.push_back(std::min(x, 1.0));
        cs.push_back(std::exp(1.0 - 1.0 / xs.back()));
    }
    xs.back() = cs.back() = 1.0;
    GridMeasure thin(std::move(xs), std::move(cs));
    std::vector<double> x_grid;
    for (int i = 0; i <= 512; ++i) x_grid.push_back(i / 512.0);
    auto qs = qs_modulus(thin, log_spaced_scales(1e-3, 0.1, 24), x_grid);
    CHECK(qs.K > 100.0);
    CHECK(growth_trend(qs.table, 3, 2.0));
}
