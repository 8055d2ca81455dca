#include "ifpt/barrier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace ifpt {

namespace {

struct KernelMoments {
    double psi_u = 0.0;   // <psi_b, u>
    double psi2_u = 0.0;  // <psi_b^2, u>
    double psix_u = 0.0;  // <psi_x_b, u>
    double psixx_u = 0.0; // <psi_xx_b, u>
    double u_l1 = 0.0;
};

KernelMoments kernel_moments(const ShiftedKernelFields& k, const Field& u) {
    KernelMoments m;
    const auto& uv = u.values();
    const auto& pv = k.psi.values();
    const auto& pxv = k.psi_x.values();
    const auto& pxxv = k.psi_xx.values();
    for (std::size_t i = 0; i < uv.size(); ++i) {
        const double ui = uv[i];
        const double pi = pv[i];
        m.psi_u += pi * ui;
        m.psi2_u += pi * pi * ui;
        m.psix_u += pxv[i] * ui;
        m.psixx_u += pxxv[i] * ui;
        m.u_l1 += std::abs(ui);
    }
    const double dx = u.grid()->spacing();
    m.psi_u *= dx;
    m.psi2_u *= dx;
    m.psix_u *= dx;
    m.psixx_u *= dx;
    m.u_l1 *= dx;
    return m;
}

double rhs_from_moments(const KernelMoments& m, double t, double g, double gp,
                        double lambda, double theta) {
    const double denom = lambda * m.psix_u;
    const double floor = 1e-10 * std::max(1.0, lambda * m.u_l1);
    if (std::abs(denom) < floor) {
        std::ostringstream msg;
        msg << "barrier ODE denominator " << denom << " below floor " << floor
            << " at t = " << t;
        throw BarrierDegeneracy(t, denom, msg.str());
    }
    const double numer = gp + theta * (g + lambda * m.psi_u) - lambda * lambda * m.psi2_u +
                         0.5 * lambda * m.psixx_u;
    return numer / denom;
}

// Caches the shifted kernel samples for the barrier value last asked for;
// within one IMEX stage the field and scalar RHS share the same shift.
class ShiftCache {
public:
    ShiftCache(const KillingKernel& kernel, GridPtr grid)
        : kernel_(kernel), grid_(std::move(grid)) {}

    const ShiftedKernelFields& at(double b) {
        if (!fields_ || b != cached_b_) {
            fields_ = kernel_.eval_shifted(grid_, b);
            cached_b_ = b;
        }
        return *fields_;
    }

private:
    const KillingKernel& kernel_;
    GridPtr grid_;
    double cached_b_ = std::numeric_limits<double>::quiet_NaN();
    std::optional<ShiftedKernelFields> fields_;
};

double boundary_window_mass(const Field& u) {
    const auto& grid = *u.grid();
    const double edge = 0.5 * grid.period() - grid.period() / 16.0;
    double s = 0.0;
    for (int i = 0; i < grid.size(); ++i)
        if (std::abs(grid.node(i)) >= edge) s += u[i];
    return s * grid.spacing();
}

} // namespace

void IfptProblem::validate() const {
    if (!(lambda > 0.0))
        throw InvalidParameter("IfptProblem: lambda must be positive");
    if (!(dt > 0.0) || !(horizon > 0.0) || dt > horizon)
        throw InvalidParameter("IfptProblem: need 0 < dt <= horizon");
    if (snapshot_stride < 0)
        throw InvalidParameter("IfptProblem: snapshot_stride must be nonnegative");
    if (std::abs(kernel.period() - grid->period()) > 1e-12 * grid->period())
        throw IncompatibleGrid("IfptProblem: kernel period differs from grid period");

    const int samples = std::max(257, static_cast<int>(horizon / dt) + 1);
    const auto report = check_hazard_bound(survival, lambda, horizon, samples);
    if (!report.ok) {
        std::ostringstream msg;
        msg << "hazard bound 0 < -g < lambda*G violated on [0, " << horizon
            << "]: worst margin " << report.worst_margin << " at t = " << report.argmin_t;
        throw HazardBoundViolation(report.argmin_t, report.worst_margin, msg.str());
    }

    const Field f = density.sample(grid);
    const double mass = integrate(f);
    if (std::abs(mass - 1.0) > 1e-8) {
        std::ostringstream msg;
        msg << "IfptProblem: initial density mass " << mass << " deviates from 1 by more than 1e-8";
        throw InvalidParameter(msg.str());
    }
    // sharp Gaussians underflow to exact zero in the far tails; accept
    // zeros but never negative or non-finite samples
    for (int i = 0; i < f.size(); ++i)
        if (!std::isfinite(f[i]) || f[i] < 0.0)
            throw InvalidParameter("IfptProblem: initial density must be nonnegative and finite");
}

double BarrierSolution::barrier_at(double t) const {
    if (times.empty())
        throw InvalidParameter("barrier_at: empty solution");
    if (t <= times.front()) return barrier.front();
    if (t >= times.back()) return barrier.back();
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - times.begin());
    const double w = (t - times[i - 1]) / (times[i] - times[i - 1]);
    return barrier[i - 1] + w * (barrier[i] - barrier[i - 1]);
}

double BarrierSolution::max_increment() const {
    double m = 0.0;
    for (std::size_t i = 1; i < barrier.size(); ++i)
        m = std::max(m, std::abs(barrier[i] - barrier[i - 1]));
    return m;
}

double initial_barrier(const Field& f, const KillingKernel& kernel, double lambda,
                       double target) {
    if (!(lambda > 0.0))
        throw InvalidParameter("initial_barrier: lambda must be positive");
    const double total = lambda * integrate(f);
    if (!(target > 0.0) || !(target < total)) {
        std::ostringstream msg;
        msg << "initial_barrier: target " << target << " outside (0, " << total << ")";
        throw NoRoot(msg.str());
    }

    const GridPtr grid = f.grid();
    auto kill_rate = [&](double z) {
        const auto fields = kernel.eval_shifted(grid, z);
        return lambda * inner_product(fields.psi, f);
    };

    // The map z -> lambda <psi(. - z), f> increases through the target as
    // the barrier sweeps the density. Near the window edges the periodic
    // wrap of psi can contaminate the rate for spread-out densities, so
    // locate the increasing crossing by scanning before bisecting.
    const double half = 0.5 * grid->period();
    const double z_min = -half + kernel.half_width();
    const double z_max = half - kernel.half_width();
    const int n_scan = 128;
    double lo = 0.0, hi = 0.0;
    bool found = false;
    double prev_z = z_min;
    double prev_rate = kill_rate(prev_z);
    for (int i = 1; i <= n_scan; ++i) {
        const double z = z_min + (z_max - z_min) * i / n_scan;
        const double rate = kill_rate(z);
        if (prev_rate < target && target <= rate) {
            if (found) {
                std::ostringstream msg;
                msg << "initial_barrier: multiple crossings of target " << target
                    << " on the central window";
                throw NoRoot(msg.str());
            }
            lo = prev_z;
            hi = z;
            found = true;
        }
        prev_z = z;
        prev_rate = rate;
    }
    if (!found) {
        std::ostringstream msg;
        msg << "initial_barrier: target " << target << " has no increasing crossing on ["
            << z_min << ", " << z_max << "]";
        throw NoRoot(msg.str());
    }
    while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        if (kill_rate(mid) < target)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

double barrier_rhs(const Field& u, double b, double t, const IfptProblem& problem) {
    const auto fields = problem.kernel.eval_shifted(u.grid(), b);
    const auto m = kernel_moments(fields, u);
    return rhs_from_moments(m, t, problem.survival.survival_deriv(t),
                            problem.survival.survival_deriv2(t), problem.lambda,
                            problem.theta);
}

BarrierSolution solve_barrier(const IfptProblem& problem) {
    problem.validate();

    const GridPtr& grid = problem.grid;
    const SpectralEngine engine(grid);
    const ImexTableau tableau = ImexTableau::ark436l2sa();
    const double lambda = problem.lambda;

    const long n_steps = std::max<long>(1, std::lround(problem.horizon / problem.dt));
    const double dt = problem.horizon / static_cast<double>(n_steps);

    Field u = problem.density.sample(grid);
    const double target0 = -problem.survival.survival_deriv(0.0);
    double b = initial_barrier(u, problem.kernel, lambda, target0);

    ShiftCache cache(problem.kernel, grid);
    ImexSystem system;
    system.field_rhs = [&](const Field& uu, double bb, double, Field& out) {
        const auto& fields = cache.at(bb);
        const auto& pv = fields.psi.values();
        const auto& uv = uu.values();
        auto& ov = out.values();
        for (std::size_t i = 0; i < uv.size(); ++i) ov[i] = -lambda * pv[i] * uv[i];
    };
    system.scalar_rhs = [&](const Field& uu, double bb, double tt) {
        const auto m = kernel_moments(cache.at(bb), uu);
        return rhs_from_moments(m, tt, problem.survival.survival_deriv(tt),
                                problem.survival.survival_deriv2(tt), lambda,
                                problem.theta);
    };

    BarrierSolution sol;
    sol.times.reserve(static_cast<std::size_t>(n_steps) + 1);
    sol.barrier.reserve(static_cast<std::size_t>(n_steps) + 1);
    sol.barrier_deriv.reserve(static_cast<std::size_t>(n_steps) + 1);
    sol.diagnostics.reserve(static_cast<std::size_t>(n_steps) + 1);

    auto record = [&](long step, const Field& uu, double bb) {
        const double t = step * dt;
        const auto& fields = cache.at(bb);
        const auto m = kernel_moments(fields, uu);
        const double G_ref = problem.survival.survival(t);
        const double g = problem.survival.survival_deriv(t);
        const double gp = problem.survival.survival_deriv2(t);
        const double G_num = integrate(uu);

        DiagnosticsRow row;
        row.t = t;
        row.b = bb;
        row.bprime = rhs_from_moments(m, t, g, gp, lambda, problem.theta);
        row.G_ref = G_ref;
        row.G_num = G_num;
        row.relerr_G = std::abs(G_num - G_ref) / G_ref;
        row.h_ref = -g / G_ref;
        row.h_num = lambda * m.psi_u / G_num;
        row.relerr_h = std::abs(row.h_num - row.h_ref) / row.h_ref;
        const Field ux = engine.differentiate(uu, 1);
        const double psix_ux = inner_product(fields.psi_x, ux);
        row.ibp_resid = std::abs(m.psixx_u + psix_ux) / std::max(1.0, std::abs(psix_ux));
        row.boundary_mass = boundary_window_mass(uu);

        sol.times.push_back(t);
        sol.barrier.push_back(bb);
        sol.barrier_deriv.push_back(row.bprime);
        sol.diagnostics.push_back(row);
        sol.max_relerr_G = std::max(sol.max_relerr_G, row.relerr_G);
        sol.max_relerr_h = std::max(sol.max_relerr_h, row.relerr_h);
        sol.max_ibp_resid = std::max(sol.max_ibp_resid, row.ibp_resid);
        sol.max_boundary_mass = std::max(sol.max_boundary_mass, row.boundary_mass);

        if (row.boundary_mass > problem.leak_tolerance) {
            std::ostringstream msg;
            msg << "boundary mass " << row.boundary_mass << " exceeded leak tolerance "
                << problem.leak_tolerance << " at t = " << t;
            throw MassLeak(t, row.boundary_mass, msg.str());
        }
        const bool snapshot = (step == 0) || (step == n_steps) ||
                              (problem.snapshot_stride > 0 && step % problem.snapshot_stride == 0);
        if (snapshot)
            sol.snapshots.emplace_back(static_cast<int>(step), uu);
    };

    record(0, u, b);
    ImexState state{std::move(u), b};
    const bool adaptive = std::isfinite(problem.step_error_tol) && problem.step_error_tol > 0.0;
    for (long step = 0; step < n_steps; ++step) {
        const double t0 = step * dt;
        if (!adaptive) {
            double est = 0.0;
            state = engine.imex_step(state, t0, dt, tableau, system, &est);
            sol.max_step_error_estimate = std::max(sol.max_step_error_estimate, est);
        } else {
            for (int m = 1;; m *= 2) {
                ImexState trial = state;
                const double h = dt / m;
                double worst = 0.0;
                bool aborted = false;
                for (int s = 0; s < m; ++s) {
                    double est = 0.0;
                    trial = engine.imex_step(trial, t0 + s * h, h, tableau, system, &est);
                    worst = std::max(worst, est);
                    if (worst > problem.step_error_tol && m < 256) {
                        aborted = true;
                        break;
                    }
                }
                if (!aborted && (worst <= problem.step_error_tol || m >= 256)) {
                    state = std::move(trial);
                    sol.max_step_error_estimate = std::max(sol.max_step_error_estimate, worst);
                    break;
                }
            }
        }
        record(step + 1, state.u, state.b);
    }
    sol.final_density = std::move(state.u);
    return sol;
}

std::vector<BracketSolution> bracket_barriers(const IfptProblem& base,
                                              const std::vector<double>& eps_list) {
    if (std::abs(base.lambda - 1.0) > 1e-12)
        throw InvalidParameter("bracket_barriers: hard-barrier normalization requires lambda = 1");
    if (eps_list.empty())
        throw InvalidParameter("bracket_barriers: empty eps list");

    std::vector<BracketSolution> out;
    out.reserve(eps_list.size());
    for (double eps : eps_list) {
        const MollifierPair pair = build_mollifier_pair(eps, base.grid->period());
        BracketSolution bracket;
        bracket.eps = eps;
        IfptProblem p = base;
        p.kernel = pair.over;
        bracket.over = solve_barrier(p);
        p.kernel = pair.under;
        bracket.under = solve_barrier(p);
        out.push_back(std::move(bracket));
    }
    return out;
}

} // namespace ifpt
