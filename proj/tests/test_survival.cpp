#include <doctest.h>

#include <cmath>

#include "ifpt/survival.hpp"

using namespace ifpt;

TEST_CASE("exponential survival closed forms") {
    const auto m = SurvivalModel::exponential(0.25);
    CHECK(m.survival(4.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
    CHECK(m.hazard(4.0) == doctest::Approx(0.25).epsilon(1e-14));

    const auto half = SurvivalModel::exponential(0.5);
    CHECK(half.survival(0.0) == 1.0);
    CHECK(half.survival_deriv(0.0) == doctest::Approx(-0.5).epsilon(1e-14));

    const auto slow = SurvivalModel::exponential(0.0625);
    CHECK(slow.survival(8.0) == doctest::Approx(0.6065306597126334).epsilon(1e-12));
    CHECK(slow.survival_deriv2(8.0) ==
          doctest::Approx(0.0625 * 0.0625 * std::exp(-0.5)).epsilon(1e-12));

    CHECK_THROWS_AS(SurvivalModel::exponential(0.0), InvalidParameter);
    CHECK_THROWS_AS(SurvivalModel::exponential(-0.1), InvalidParameter);
}

TEST_CASE("piecewise hazard survival") {
    const auto m = SurvivalModel::piecewise_hazard({{0.0, 0.1}, {1.0, 0.3}});
    CHECK(m.survival(2.0) == doctest::Approx(std::exp(-0.4)).epsilon(1e-14));
    CHECK(m.hazard(0.5) == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(m.hazard(1.0) == doctest::Approx(0.3).epsilon(1e-14)); // right limit at the knot

    const auto single = SurvivalModel::piecewise_hazard({{0.0, 0.37}});
    const auto expo = SurvivalModel::exponential(0.37);
    for (double t : {0.0, 0.4, 1.7, 6.3}) {
        CHECK(single.survival(t) == doctest::Approx(expo.survival(t)).epsilon(1e-15));
        CHECK(single.survival_deriv(t) == doctest::Approx(expo.survival_deriv(t)).epsilon(1e-15));
        CHECK(single.survival_deriv2(t) == doctest::Approx(expo.survival_deriv2(t)).epsilon(1e-15));
    }

    const auto tiny = SurvivalModel::piecewise_hazard({{0.0, 0.02}});
    CHECK(tiny.survival(1.0) == doctest::Approx(0.98019867).epsilon(1e-7));

    CHECK_THROWS_AS(SurvivalModel::piecewise_hazard({{0.0, 0.1}, {0.1, -0.2}}), InvalidParameter);
    CHECK_THROWS_AS(SurvivalModel::piecewise_hazard({{0.0, 0.1}, {0.0, 0.2}}), InvalidParameter);
    CHECK_THROWS_AS(SurvivalModel::piecewise_hazard({{0.5, 0.1}}), InvalidParameter);
}

TEST_CASE("hazard bound reports") {
    const auto ok = check_hazard_bound(SurvivalModel::exponential(0.25), 1.0, 8.0, 257);
    CHECK(ok.ok);
    // both margins shrink with G; the -g branch binds at the horizon
    CHECK(ok.worst_margin == doctest::Approx(0.25 * std::exp(-2.0)).epsilon(1e-10));
    CHECK(ok.argmin_t == doctest::Approx(8.0));

    const auto strict = check_hazard_bound(SurvivalModel::exponential(0.5), 0.5, 8.0, 257);
    CHECK_FALSE(strict.ok); // -g = lambda G exactly: the strict bound fails

    const auto pw = check_hazard_bound(SurvivalModel::piecewise_hazard({{0.0, 0.1}, {1.0, 0.9}}),
                                       0.5, 4.0, 257);
    CHECK_FALSE(pw.ok);
    CHECK(pw.argmin_t == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("finite differences reproduce the derivatives at second order") {
    const auto models = {SurvivalModel::exponential(0.3),
                         SurvivalModel::piecewise_hazard({{0.0, 0.1}, {1.0, 0.3}})};
    for (const auto& m : models) {
        const double t = 0.5; // interior of the first segment
        auto fd_error_g = [&](double dt) {
            const double fd = (m.survival(t + dt) - m.survival(t - dt)) / (2.0 * dt);
            return std::abs(fd - m.survival_deriv(t));
        };
        auto fd_error_gp = [&](double dt) {
            const double fd = (m.survival_deriv(t + dt) - m.survival_deriv(t - dt)) / (2.0 * dt);
            return std::abs(fd - m.survival_deriv2(t));
        };
        const double r_g = fd_error_g(1e-3) / fd_error_g(5e-4);
        const double r_gp = fd_error_gp(1e-3) / fd_error_gp(5e-4);
        CHECK(r_g == doctest::Approx(4.0).epsilon(0.15));
        CHECK(r_gp == doctest::Approx(4.0).epsilon(0.15));
    }
}

TEST_CASE("tabulated survival: spline interpolation plus bound-check refusal") {
    std::vector<double> ts, gs;
    for (int i = 0; i <= 16; ++i) {
        ts.push_back(0.5 * i);
        gs.push_back(std::exp(-0.25 * ts.back()));
    }
    const auto tab = SurvivalModel::tabulated(ts, gs);
    const auto expo = SurvivalModel::exponential(0.25);
    for (double t : {0.25, 1.1, 3.3, 7.2}) {
        CHECK(tab.survival(t) == doctest::Approx(expo.survival(t)).epsilon(1e-6));
        CHECK(tab.survival_deriv(t) == doctest::Approx(expo.survival_deriv(t)).epsilon(1e-3));
    }
    CHECK(check_hazard_bound(tab, 1.0, 8.0, 257).ok);

    // a nearly flat stretch drives the spline hazard through zero between
    // breakpoints; construction succeeds, the bound check refuses it
    std::vector<double> bad_t{0.0, 1.0, 2.0, 3.0, 4.0};
    std::vector<double> bad_g{1.0, 0.5, 0.499999, 0.499998, 0.1};
    const auto wiggly = SurvivalModel::tabulated(bad_t, bad_g);
    CHECK_FALSE(check_hazard_bound(wiggly, 1.0, 4.0, 1025).ok);

    CHECK_THROWS_AS(SurvivalModel::tabulated({0.0, 1.0, 2.0}, {1.0, 0.5, 0.6}), InvalidParameter);
    CHECK_THROWS_AS(SurvivalModel::tabulated({0.0, 1.0}, {1.0, 0.5}), InvalidParameter);
}

TEST_CASE("conditional laws") {
    const auto expo = SurvivalModel::exponential(0.25);
    const auto cond = expo.conditional(3.0);
    CHECK(cond.survival(2.0) == doctest::Approx(expo.survival(5.0) / expo.survival(3.0)).epsilon(1e-14));

    const auto pw = SurvivalModel::piecewise_hazard({{0.0, 0.1}, {1.0, 0.3}, {2.0, 0.2}});
    const auto shifted = pw.conditional(1.5);
    for (double t : {0.0, 0.25, 0.5, 1.0, 2.0})
        CHECK(shifted.survival(t) ==
              doctest::Approx(pw.survival(1.5 + t) / pw.survival(1.5)).epsilon(1e-13));
}

TEST_CASE("initial densities") {
    const auto grid = make_grid(1024, 16.0);
    const auto f = InitialDensity::gaussian(0.0, 0.25);
    const Field samples = f.sample(grid);
    CHECK(std::abs(integrate(samples) - 1.0) < 1e-12);
    for (int i = 0; i < samples.size(); ++i) CHECK(samples[i] > 0.0);

    const double x = 0.3, h = 1e-5;
    CHECK(f.deriv(x) == doctest::Approx((f.value(x + h) - f.value(x - h)) / (2 * h)).epsilon(1e-7));
    CHECK(f.deriv2(x) == doctest::Approx((f.deriv(x + h) - f.deriv(x - h)) / (2 * h)).epsilon(1e-7));

    const auto carried = InitialDensity::from_field(samples);
    const Field resampled = carried.sample(grid);
    CHECK(resampled[100] == samples[100]);
    CHECK_FALSE(carried.is_gaussian());
    const auto other = make_grid(512, 16.0);
    CHECK_THROWS_AS(carried.sample(other), IncompatibleGrid);
    CHECK_THROWS_AS(carried.value(0.0), InvalidParameter);

    CHECK_THROWS_AS(InitialDensity::gaussian(0.0, 0.0), InvalidParameter);
}
