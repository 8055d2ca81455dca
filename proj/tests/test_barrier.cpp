#include <doctest.h>

#include <cmath>
#include <functional>

#include "ifpt/barrier.hpp"

using namespace ifpt;

namespace {

IfptProblem reference_problem() {
    IfptProblem p;
    p.survival = SurvivalModel::exponential(0.25);
    p.density = InitialDensity::gaussian(0.0, 0.25);
    p.lambda = 1.0;
    p.kernel = KillingKernel::fejer(64, 16.0);
    p.grid = make_grid(1024, 16.0);
    p.dt = 1.0 / 64.0;
    p.horizon = 8.0;
    return p;
}

double simpson(double a, double b, int panels, const std::function<double(double)>& f) {
    const double h = (b - a) / panels;
    double acc = 0.0;
    for (int i = 0; i < panels; ++i) {
        const double x0 = a + i * h;
        acc += h / 6.0 * (f(x0) + 4.0 * f(x0 + 0.5 * h) + f(x0 + h));
    }
    return acc;
}

} // namespace

TEST_CASE("initial barrier roots") {
    const auto grid = make_grid(1024, 16.0);
    const auto kernel = KillingKernel::fejer(512, 16.0);
    const auto density = InitialDensity::gaussian(0.0, 0.25);
    const Field f = density.sample(grid);

    // psi(x) + psi(-x) = 1 forces the killing rate through 1/2 at zero shift
    CHECK(initial_barrier(f, kernel, 1.0, 0.5) == doctest::Approx(0.0).epsilon(1e-9));

    // independent oracle: adaptive-resolution quadrature of psi(x-z) f(x)
    // plus its own bisection, never touching the grid machinery
    auto oracle_rate = [&](double z) {
        return simpson(-3.0, 3.0, 6000, [&](double x) { return kernel.value(x - z) * density.value(x); });
    };
    double lo = -2.0, hi = 2.0;
    while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        (oracle_rate(mid) < 0.25 ? lo : hi) = mid;
    }
    const double oracle_root = 0.5 * (lo + hi);
    const double b0 = initial_barrier(f, kernel, 1.0, 0.25);
    CHECK(b0 < 0.0);
    CHECK(b0 == doctest::Approx(oracle_root).epsilon(1e-8));

    // the root map is increasing: a larger kill target needs a higher barrier
    CHECK(initial_barrier(f, kernel, 1.0, 0.1) < initial_barrier(f, kernel, 1.0, 0.2));
    CHECK(initial_barrier(f, kernel, 1.0, 0.2) < initial_barrier(f, kernel, 1.0, 0.7));

    CHECK_THROWS_AS(initial_barrier(f, kernel, 1.0, 0.0), NoRoot);
    CHECK_THROWS_AS(initial_barrier(f, kernel, 1.0, 1.0), NoRoot);
    CHECK_THROWS_AS(initial_barrier(f, kernel, 1.0, 1.5), NoRoot);
}

TEST_CASE("barrier ODE right-hand side") {
    const auto p = reference_problem();
    const Field u = p.density.sample(p.grid);
    const double b0 = initial_barrier(u, p.kernel, p.lambda, -p.survival.survival_deriv(0.0));

    // on an exactly consistent state the stabilizer term vanishes
    IfptProblem raw = p;
    raw.theta = 0.0;
    const double with_theta = barrier_rhs(u, b0, 0.0, p);
    const double without = barrier_rhs(u, b0, 0.0, raw);
    CHECK(with_theta == doctest::Approx(without).epsilon(1e-9));

    // integration-by-parts equivalence of the two numerator forms
    const SpectralEngine engine(p.grid);
    const auto fields = p.kernel.eval_shifted(p.grid, b0);
    const Field ux = engine.differentiate(u, 1);
    const double g = p.survival.survival_deriv(0.0);
    const double gp = p.survival.survival_deriv2(0.0);
    const double denom = inner_product(fields.psi_x, u);
    const double ibp_form =
        (g + gp - inner_product(fields.phi, u) - 0.5 * inner_product(fields.psi_x, ux)) / denom;
    CHECK(with_theta == doctest::Approx(ibp_form).epsilon(1e-8));

    // both kernel transitions (central and wrap) far from the density:
    // the denominator collapses
    CHECK_THROWS_AS(barrier_rhs(u, 4.0, 0.0, p), BarrierDegeneracy);
}

TEST_CASE("reference solve meets its diagnostics contracts") {
    const auto p = reference_problem();
    const auto sol = solve_barrier(p);

    CHECK(sol.times.size() == 513);
    CHECK(sol.max_relerr_G < 1e-3);
    CHECK(sol.max_relerr_h < 1e-3);
    CHECK(sol.max_ibp_resid < 1e-6);
    CHECK(sol.max_boundary_mass < 2e-2);
    CHECK(sol.max_step_error_estimate > 0.0);
    CHECK(sol.max_step_error_estimate < 1e-4);

    // b stays continuous: increments bounded by the observed slope scale
    double max_slope = 0.0;
    for (double bp : sol.barrier_deriv) max_slope = std::max(max_slope, std::abs(bp));
    CHECK(sol.max_increment() <= max_slope * p.dt * 1.5);

    // snapshots strictly positive
    REQUIRE(!sol.snapshots.empty());
    for (const auto& [step, field] : sol.snapshots) {
        double lo = 1e300;
        for (int i = 0; i < field.size(); ++i) lo = std::min(lo, field[i]);
        CHECK(lo > 0.0);
    }

    // hazard identity holds pointwise along the run
    for (const auto& row : sol.diagnostics)
        CHECK(std::abs(row.h_num - row.h_ref) <= 1e-3 * row.h_ref);
}

// ~60 s: the full-resolution run (8192 nodes, order-512 kernel); run the
// binary with --no-skip to include it
TEST_CASE("full-resolution cell conserves mass and the hazard identity" * doctest::skip()) {
    IfptProblem p = reference_problem();
    p.kernel = KillingKernel::fejer(512, 16.0);
    p.grid = make_grid(8192, 16.0);
    const auto sol = solve_barrier(p);
    CHECK(sol.max_relerr_G < 1e-3);
    CHECK(sol.max_relerr_h < 1e-3);
    CHECK(sol.max_ibp_resid < 1e-6);
}

TEST_CASE("rate close to the killing ceiling still solves") {
    IfptProblem p = reference_problem();
    p.survival = SurvivalModel::exponential(0.5);
    const auto sol = solve_barrier(p);
    CHECK(sol.max_relerr_G < 1e-3);
    CHECK(sol.max_relerr_h < 1e-3);
}

TEST_CASE("problem validation failures") {
    IfptProblem p = reference_problem();

    IfptProblem bad = p;
    bad.lambda = 0.0;
    CHECK_THROWS_AS(solve_barrier(bad), InvalidParameter);

    bad = p;
    bad.lambda = 0.5;
    bad.survival = SurvivalModel::exponential(0.5);
    CHECK_THROWS_AS(solve_barrier(bad), HazardBoundViolation);

    bad = p;
    bad.kernel = KillingKernel::fejer(64, 8.0);
    CHECK_THROWS_AS(solve_barrier(bad), IncompatibleGrid);

    bad = p;
    bad.density = InitialDensity::gaussian(0.0, 3.0); // visible mass outside the period
    CHECK_THROWS_AS(solve_barrier(bad), InvalidParameter);

    bad = p;
    bad.leak_tolerance = 1e-9;
    CHECK_THROWS_AS(solve_barrier(bad), MassLeak);
}

TEST_CASE("stabilizer weight does not move the converged barrier") {
    IfptProblem p = reference_problem();
    const double b_theta1 = solve_barrier(p).barrier.back();
    p.theta = 0.0;
    const double b_theta0 = solve_barrier(p).barrier.back();
    CHECK(std::abs(b_theta1 - b_theta0) < 2e-4);
}

TEST_CASE("grid and step refinement moves b(T) below 1e-4") {
    IfptProblem p = reference_problem();
    const double coarse = solve_barrier(p).barrier.back();
    IfptProblem fine = p;
    fine.grid = make_grid(2048, 16.0);
    fine.dt = p.dt / 2.0;
    const double refined = solve_barrier(fine).barrier.back();
    CHECK(std::abs(coarse - refined) < 1e-4);
}

TEST_CASE("restart after renormalization matches the uninterrupted run") {
    IfptProblem p = reference_problem();
    p.horizon = 2.0;
    const auto full = solve_barrier(p);

    IfptProblem first = p;
    first.horizon = 1.0;
    const auto part1 = solve_barrier(first);
    Field u = *part1.final_density;
    const double mass = integrate(u);
    for (int i = 0; i < u.size(); ++i) u[i] /= mass;

    IfptProblem second = p;
    second.horizon = 1.0;
    second.survival = p.survival.conditional(1.0);
    second.density = InitialDensity::from_field(std::move(u));
    const auto part2 = solve_barrier(second);

    double worst = 0.0;
    for (std::size_t i = 0; i < part2.times.size(); ++i)
        worst = std::max(worst,
                         std::abs(part2.barrier[i] - full.barrier_at(1.0 + part2.times[i])));
    CHECK(worst < 5.0 * 1e-3);
}

TEST_CASE("mollifier bracket runs order and tighten") {
    IfptProblem base = reference_problem();
    base.grid = make_grid(2048, 16.0);
    base.horizon = 2.0;
    const auto brackets = bracket_barriers(base, {0.4, 0.2});
    REQUIRE(brackets.size() == 2);

    double prev_max_gap = 1e300;
    for (const auto& br : brackets) {
        double max_gap = -1e300;
        for (std::size_t i = 0; i < br.over.barrier.size(); ++i) {
            const double gap = br.under.barrier[i] - br.over.barrier[i];
            CHECK(br.over.barrier[i] <= br.under.barrier[i] + 1e-3);
            max_gap = std::max(max_gap, gap);
        }
        CHECK(max_gap > 0.0); // a positive-width pair keeps a positive gap
        CHECK(max_gap < prev_max_gap);
        prev_max_gap = max_gap;
    }

    IfptProblem wrong = base;
    wrong.lambda = 2.0;
    CHECK_THROWS_AS(bracket_barriers(wrong, {0.2}), InvalidParameter);
    CHECK_THROWS_AS(bracket_barriers(base, {}), InvalidParameter);
}
