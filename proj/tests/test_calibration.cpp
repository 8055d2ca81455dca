#include <doctest.h>

#include <cmath>

#include "ifpt/calibration.hpp"

using namespace ifpt;

namespace {

CdsQuote quarterly_quote(int index, double start, double maturity, double upfront, double running) {
    CdsQuote q;
    q.index = index;
    q.maturity = maturity;
    q.upfront = upfront;
    q.running = running;
    for (double t = start + 0.25; t <= maturity + 1e-12; t += 0.25) {
        q.payment_times.push_back(t);
        q.accruals.push_back(0.25);
    }
    return q;
}

/// fair running premium for a flat hazard on one segment (pi0 = 0)
double fair_running(double hazard, const CdsQuote& q, double start, double survival_at_start,
                    const DiscountCurve& discount, double recovery) {
    CdsQuote fair = q;
    fair.upfront = 0.0;
    fair.running = 1.0;
    const LegValues legs = cds_leg_values(hazard, fair, start, survival_at_start, discount, recovery);
    return legs.protection / legs.premium;
}

} // namespace

TEST_CASE("leg values: degenerate limits") {
    const auto q = quarterly_quote(1, 0.0, 1.0, 0.0, 0.01);
    const auto flat = DiscountCurve::flat(0.02);

    const auto none = cds_leg_values(0.0, q, 0.0, 1.0, flat, 0.4);
    CHECK(none.protection == 0.0);
    CHECK(none.premium > 0.0);

    const auto nearly_full_recovery = cds_leg_values(0.05, q, 0.0, 1.0, flat, 0.999999);
    CHECK(nearly_full_recovery.protection < 1e-6);

    CHECK_THROWS_AS(cds_leg_values(-0.1, q, 0.0, 1.0, flat, 0.4), InvalidParameter);
    CHECK_THROWS_AS(cds_leg_values(0.1, q, 0.0, 1.0, flat, 1.2), InvalidParameter);
}

TEST_CASE("leg values against direct summation") {
    // single segment to T = 1, quarterly, unit discount, R = 0.4, h = 0.02
    const auto q = quarterly_quote(1, 0.0, 1.0, 0.0, 0.01);
    const auto unit_discount = DiscountCurve::flat(0.0);
    const double h = 0.02, recovery = 0.4;

    double annuity = 0.0, protection = 0.0;
    double t_prev = 0.0, g_prev = 1.0;
    for (double t : {0.25, 0.5, 0.75, 1.0}) {
        const double g = std::exp(-h * t);
        annuity += 0.25 * g_prev;           // paid at the period start
        protection += (1.0 - recovery) * (g_prev - g);
        t_prev = t;
        g_prev = g;
    }
    (void)t_prev;

    const auto legs = cds_leg_values(h, q, 0.0, 1.0, unit_discount, recovery);
    CHECK(legs.premium == doctest::Approx(0.01 * annuity).epsilon(1e-14));
    CHECK(legs.protection == doctest::Approx(protection).epsilon(1e-14));

    // the fair running premium balances the two legs by construction
    const double fair = fair_running(h, q, 0.0, 1.0, unit_discount, recovery);
    CdsQuote priced = q;
    priced.running = fair;
    const auto balanced = cds_leg_values(h, priced, 0.0, 1.0, unit_discount, recovery);
    CHECK(std::abs(balanced.premium - balanced.protection) < 1e-15);
}

TEST_CASE("bootstrap round-trips synthetic quotes") {
    const auto discount = DiscountCurve::flat(0.02);
    const double recovery = 0.4;
    const std::vector<double> true_h{0.02, 0.035};

    std::vector<CdsQuote> quotes;
    double start = 0.0, surv = 1.0;
    for (std::size_t j = 0; j < true_h.size(); ++j) {
        const double maturity = start + 1.0;
        CdsQuote q = quarterly_quote(static_cast<int>(j) + 1, start, maturity, 0.0, 0.0);
        q.running = fair_running(true_h[j], q, start, surv, discount, recovery);
        quotes.push_back(q);
        surv *= std::exp(-true_h[j] * (maturity - start));
        start = maturity;
    }

    const auto model = bootstrap_hazard(quotes, discount, recovery);
    REQUIRE(model.knots().size() == 2);
    CHECK(std::abs(model.knots()[0].second - 0.02) < 1e-8);
    CHECK(std::abs(model.knots()[1].second - 0.035) < 1e-8);

    // recovered hazards reprice every quote to machine residual
    start = 0.0;
    surv = 1.0;
    for (std::size_t j = 0; j < quotes.size(); ++j) {
        const double h = model.knots()[j].second;
        const auto legs = cds_leg_values(h, quotes[j], start, surv, discount, recovery);
        CHECK(std::abs(legs.premium - legs.protection) < 1e-12);
        surv *= std::exp(-h * (quotes[j].maturity - start));
        start = quotes[j].maturity;
    }
    // bootstrapped survival is nonincreasing
    for (double t = 0.0; t < 2.0; t += 0.1)
        CHECK(model.survival(t + 0.1) < model.survival(t));
}

TEST_CASE("overpriced upfront has no bootstrap solution") {
    const auto discount = DiscountCurve::flat(0.02);
    CdsQuote q = quarterly_quote(1, 0.0, 1.0, 5.0, 0.01); // upfront dwarfs any protection
    try {
        bootstrap_hazard({q}, discount, 0.4);
        FAIL("expected UnbootstrappableQuote");
    } catch (const UnbootstrappableQuote& e) {
        CHECK(e.segment() == 1);
    }
}

TEST_CASE("discount curves") {
    const auto flat = DiscountCurve::flat(0.02);
    CHECK(flat.value(0.0) == 1.0);
    CHECK(flat.value(2.0) == doctest::Approx(std::exp(-0.04)).epsilon(1e-14));

    const auto table = DiscountCurve::from_table({0.0, 1.0, 2.0}, {1.0, 0.98, 0.951});
    CHECK(table.value(0.5) == doctest::Approx(std::sqrt(0.98)).epsilon(1e-12));
    CHECK(table.value(3.0) < table.value(2.0)); // log-linear extrapolation
    CHECK_THROWS_AS(DiscountCurve::from_table({0.0, 1.0}, {1.0, 1.01}), InvalidParameter);
    CHECK_THROWS_AS(DiscountCurve::flat(-0.01), InvalidParameter);
}

TEST_CASE("single-segment stitching is a plain solve") {
    const auto model = SurvivalModel::piecewise_hazard({{0.0, 0.25}});
    const auto grid = make_grid(512, 16.0);
    const auto kernel = KillingKernel::fejer(64, 16.0);
    const auto density = InitialDensity::gaussian(0.0, 0.25);

    const auto stitched = stitch_barrier(model, density, 1.0, kernel, grid, 1.0 / 64.0, 2.0);

    IfptProblem p;
    p.survival = SurvivalModel::exponential(0.25);
    p.density = density;
    p.lambda = 1.0;
    p.kernel = kernel;
    p.grid = grid;
    p.dt = 1.0 / 64.0;
    p.horizon = 2.0;
    const auto direct = solve_barrier(p);

    REQUIRE(stitched.times.size() == direct.times.size());
    for (std::size_t i = 0; i < direct.times.size(); ++i)
        CHECK(stitched.barrier[i] == doctest::Approx(direct.barrier[i]).epsilon(1e-14));
}

TEST_CASE("equal-hazard knot restarts transparently") {
    const auto model = SurvivalModel::piecewise_hazard({{0.0, 0.25}, {1.0, 0.25}});
    const auto grid = make_grid(1024, 16.0);
    const auto kernel = KillingKernel::fejer(64, 16.0);
    const auto density = InitialDensity::gaussian(0.0, 0.25);

    const auto stitched = stitch_barrier(model, density, 1.0, kernel, grid, 1.0 / 64.0, 2.0);

    IfptProblem p;
    p.survival = SurvivalModel::exponential(0.25);
    p.density = density;
    p.lambda = 1.0;
    p.kernel = kernel;
    p.grid = grid;
    p.dt = 1.0 / 64.0;
    p.horizon = 2.0;
    const auto direct = solve_barrier(p);

    double worst = 0.0;
    for (std::size_t i = 0; i < stitched.times.size(); ++i)
        worst = std::max(worst,
                         std::abs(stitched.barrier[i] - direct.barrier_at(stitched.times[i])));
    CHECK(worst < 5e-3);
    CHECK(stitched.max_relerr_G < 1e-3);
}

TEST_CASE("hazard jump produces a barrier jump and keeps global conservation") {
    const auto model = SurvivalModel::piecewise_hazard({{0.0, 0.1}, {1.0, 0.3}});
    const auto grid = make_grid(1024, 16.0);
    const auto kernel = KillingKernel::fejer(64, 16.0);
    const auto density = InitialDensity::gaussian(0.0, 0.25);

    const auto sol = stitch_barrier(model, density, 1.0, kernel, grid, 1.0 / 64.0, 2.0);

    // locate the duplicated knot rows
    std::size_t knot = 0;
    while (knot + 1 < sol.times.size() && sol.times[knot + 1] != sol.times[knot]) ++knot;
    REQUIRE(knot + 1 < sol.times.size());
    CHECK(sol.times[knot] == doctest::Approx(1.0));
    const double jump = sol.barrier[knot + 1] - sol.barrier[knot];
    // the target hazard jumps up, so the kill region must grow: b moves up;
    // a continuous barrier cannot match the jumped hazard
    CHECK(jump > 0.01);
    const double kink = std::abs(sol.barrier_deriv[knot + 1] - sol.barrier_deriv[knot]);
    CHECK(kink > 0.0);

    // conservation against the global piecewise model holds on both segments
    CHECK(sol.max_relerr_G < 1e-3);
    CHECK(sol.max_relerr_h < 1e-3);

    // the merged series remains usable for interpolation across the jump
    CHECK(sol.barrier_at(1.0 - 1e-9) == doctest::Approx(sol.barrier[knot]).epsilon(1e-6));
    CHECK(sol.barrier_at(1.0) == doctest::Approx(sol.barrier[knot + 1]).epsilon(1e-12));
}

TEST_CASE("stitching validates its inputs") {
    const auto grid = make_grid(256, 16.0);
    const auto kernel = KillingKernel::fejer(64, 16.0);
    const auto density = InitialDensity::gaussian(0.0, 0.25);
    CHECK_THROWS_AS(stitch_barrier(SurvivalModel::exponential(0.25), density, 1.0, kernel, grid,
                                   1.0 / 32.0, 1.0),
                    InvalidParameter);
    // hazard above the killing rate: refused by the segment validation
    const auto hot = SurvivalModel::piecewise_hazard({{0.0, 0.1}, {1.0, 1.5}});
    CHECK_THROWS_AS(stitch_barrier(hot, density, 1.0, kernel, grid, 1.0 / 32.0, 2.0),
                    HazardBoundViolation);
}
