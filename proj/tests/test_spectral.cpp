#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ifpt/spectral.hpp"

using namespace ifpt;

namespace {

Field gaussian_field(const GridPtr& grid, double mean, double sigma) {
    Field f = Field::zeros(grid);
    for (int i = 0; i < grid->size(); ++i) {
        const double z = (grid->node(i) - mean) / sigma;
        f[i] = std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
    }
    return f;
}

double max_abs_diff(const Field& a, const Field& b) {
    double m = 0.0;
    for (int i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

} // namespace

TEST_CASE("grid nodes and spacing") {
    const auto grid = make_grid(8, 16.0);
    for (int k = 0; k < 8; ++k)
        CHECK(grid->node(k) == doctest::Approx(-8.0 + 2.0 * k).epsilon(1e-15));
    CHECK(grid->spacing() * grid->size() == doctest::Approx(16.0));

    const auto paper = make_grid(8192, 16.0);
    CHECK(paper->size() == 8192);
    CHECK(paper->spacing() == doctest::Approx(16.0 / 8192));

    CHECK_THROWS_AS(make_grid(7, 16.0), InvalidParameter);
    CHECK_THROWS_AS(make_grid(4, 16.0), InvalidParameter);
    CHECK_THROWS_AS(make_grid(64, -1.0), InvalidParameter);
}

TEST_CASE("spectral differentiation") {
    const auto grid = make_grid(64, 16.0);
    const SpectralEngine engine(grid);

    Field c = Field::zeros(grid);
    for (int i = 0; i < c.size(); ++i) c[i] = 3.25;
    const Field dc = engine.differentiate(c, 1);
    CHECK(max_abs_diff(dc, Field::zeros(grid)) < 1e-13);

    const double w = 2.0 * std::numbers::pi / 16.0;
    Field s = Field::zeros(grid), expected1 = Field::zeros(grid), expected2 = Field::zeros(grid);
    for (int i = 0; i < s.size(); ++i) {
        s[i] = std::sin(w * grid->node(i));
        expected1[i] = w * std::cos(w * grid->node(i));
        expected2[i] = -w * w * std::sin(w * grid->node(i));
    }
    CHECK(max_abs_diff(engine.differentiate(s, 1), expected1) < 1e-12);
    CHECK(max_abs_diff(engine.differentiate(s, 2), expected2) < 1e-12);

    CHECK_THROWS_AS(engine.differentiate(s, 3), InvalidParameter);
}

TEST_CASE("heat propagation against the closed-form Gaussian") {
    const auto grid = make_grid(1024, 16.0);
    const SpectralEngine engine(grid);
    const Field f = gaussian_field(grid, 0.0, 0.25);

    CHECK(max_abs_diff(engine.heat_propagate(f, 0.0), f) < 1e-14);

    const double sigma_t = std::sqrt(0.25 * 0.25 + 1.0);
    const Field expected = gaussian_field(grid, 0.0, sigma_t);
    CHECK(max_abs_diff(engine.heat_propagate(f, 1.0), expected) < 1e-10);

    CHECK(integrate(engine.heat_propagate(f, 2.5)) == doctest::Approx(integrate(f)).epsilon(1e-14));
    CHECK_THROWS_AS(engine.heat_propagate(f, -0.1), InvalidParameter);
}

TEST_CASE("quadrature") {
    const auto grid = make_grid(1024, 16.0);
    Field ones = Field::zeros(grid);
    for (int i = 0; i < ones.size(); ++i) ones[i] = 1.0;
    CHECK(integrate(ones) == doctest::Approx(16.0).epsilon(1e-15));

    const Field g = gaussian_field(grid, 0.0, 0.5);
    CHECK(std::abs(integrate(g) - 1.0) < 1e-12);
}

TEST_CASE("heat semigroup and commutation invariants") {
    const auto grid = make_grid(256, 16.0);
    const SpectralEngine engine(grid);
    const Field f = gaussian_field(grid, 0.4, 0.5);

    const Field two_hops = engine.heat_propagate(engine.heat_propagate(f, 0.3), 0.7);
    const Field one_hop = engine.heat_propagate(f, 1.0);
    CHECK(max_abs_diff(two_hops, one_hop) < 1e-13);

    const Field a = engine.differentiate(engine.heat_propagate(f, 0.5), 1);
    const Field b = engine.heat_propagate(engine.differentiate(f, 1), 0.5);
    CHECK(max_abs_diff(a, b) < 1e-12);
}

TEST_CASE("ARK4(3)6L[2]SA tableau consistency") {
    const ImexTableau t = ImexTableau::ark436l2sa();
    CHECK(t.stages == 6);
    CHECK(t.order == 4);
    CHECK_NOTHROW(t.validate());

    // second-order coupling condition b.c = 1/2 for the shared weights
    double bc = 0.0;
    for (int i = 0; i < 6; ++i)
        bc += t.weights[static_cast<std::size_t>(i)] * t.abscissae[static_cast<std::size_t>(i)];
    CHECK(bc == doctest::Approx(0.5).epsilon(1e-13));

    // stiffly accurate: weights equal the last implicit row
    for (int i = 0; i < 6; ++i)
        CHECK(t.weights[static_cast<std::size_t>(i)] ==
              doctest::Approx(t.a_implicit[5][static_cast<std::size_t>(i)]).epsilon(1e-14));

    ImexTableau broken = t;
    broken.a_explicit[0][1] = 0.5;
    CHECK_THROWS_AS(broken.validate(), InvalidParameter);
}

TEST_CASE("one IMEX step of u' = -u hits exp(-dt) at fifth order") {
    const auto grid = make_grid(16, 16.0);
    const SpectralEngine engine(grid);
    const ImexTableau tableau = ImexTableau::ark436l2sa();

    ImexSystem system;
    system.field_rhs = [](const Field& u, double, double, Field& out) {
        for (int i = 0; i < u.size(); ++i) out[i] = -u[i];
    };

    auto one_step_error = [&](double dt) {
        Field u0 = Field::zeros(grid);
        for (int i = 0; i < u0.size(); ++i) u0[i] = 1.0;
        const ImexState next = engine.imex_step({u0, 0.0}, 0.0, dt, tableau, system);
        return std::abs(next.u[0] - std::exp(-dt));
    };

    const double e1 = one_step_error(0.5);
    const double e2 = one_step_error(0.25);
    CHECK(e1 < 2e-4);                 // well below the dt^4 scale 6e-2
    CHECK(e1 / e2 > 20.0);            // local order ~5: ratio ~32
    // the scalar companion stays put without a scalar RHS
    Field u0 = Field::zeros(grid);
    for (int i = 0; i < u0.size(); ++i) u0[i] = 1.0;
    const ImexState next = engine.imex_step({u0, 1.25}, 0.0, 0.5, tableau, system);
    CHECK(next.b == 1.25);
}

TEST_CASE("IMEX with zero explicit part reproduces the heat flow at order >= 3.5") {
    const auto grid = make_grid(256, 16.0);
    const SpectralEngine engine(grid);
    const ImexTableau tableau = ImexTableau::ark436l2sa();

    ImexSystem system;
    system.field_rhs = [](const Field& u, double, double, Field& out) {
        for (int i = 0; i < u.size(); ++i) out[i] = 0.0;
    };

    const Field u0 = gaussian_field(grid, 0.0, 0.5);
    const Field exact = engine.heat_propagate(u0, 1.0);

    auto global_error = [&](int steps) {
        ImexState state{u0, 0.0};
        const double dt = 1.0 / steps;
        for (int s = 0; s < steps; ++s)
            state = engine.imex_step(state, s * dt, dt, tableau, system);
        return max_abs_diff(state.u, exact);
    };

    const double e8 = global_error(8);
    const double e16 = global_error(16);
    const double e32 = global_error(32);
    const double order1 = std::log2(e8 / e16);
    const double order2 = std::log2(e16 / e32);
    CHECK(order1 > 3.5);
    CHECK(order2 > 3.5);

    double err_est = 0.0;
    ImexState state{u0, 0.0};
    engine.imex_step(state, 0.0, 0.125, tableau, system, &err_est);
    CHECK(err_est > 0.0);
    CHECK(err_est < 1e-2);
}
