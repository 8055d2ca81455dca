#pragma once

#include <optional>
#include <vector>

#include "ifpt/kernel.hpp"
#include "ifpt/spectral.hpp"
#include "ifpt/survival.hpp"

namespace ifpt {

/// One solve of the coupled density/barrier system.
struct IfptProblem {
    SurvivalModel survival = SurvivalModel::exponential(0.25);
    InitialDensity density = InitialDensity::gaussian(0.0, 0.25);
    double lambda = 1.0;
    KillingKernel kernel = KillingKernel::fejer(64, 16.0);
    GridPtr grid = make_grid(1024, 16.0);
    double dt = 1.0 / 64.0;
    double horizon = 8.0;

    /// Weight of the conservation-restoring term in the barrier ODE.
    /// It vanishes on exact solutions; 0 recovers the raw rearranged form.
    double theta = 1.0;

    /// Store a density snapshot every this many steps (0: endpoints only).
    int snapshot_stride = 0;

    /// Abort threshold for mass sitting within period/16 of the boundary.
    double leak_tolerance = 2e-2;

    /// A base step is re-run with doubled substep counts (up to 256)
    /// until the worst embedded error estimate falls below this. Sharp
    /// initial densities start a fast transient of the barrier ODE that
    /// a uniform mesh cannot resolve; the subdivision is deterministic,
    /// and diagnostics stay on the dt mesh. Set to infinity to force
    /// plain fixed-step integration (convergence studies).
    double step_error_tol = 1e-5;

    /// Diagnostic tolerances carried into the solution report.
    double conservation_tol = 1e-3;
    double hazard_tol = 1e-3;

    /// Throws InvalidParameter / HazardBoundViolation when the inputs
    /// cannot support a solve (bound violated on [0, horizon], density
    /// mass off by more than 1e-8, kernel/grid period mismatch, ...).
    void validate() const;
};

struct DiagnosticsRow {
    double t = 0.0;
    double b = 0.0;
    double bprime = 0.0;
    double G_ref = 0.0;
    double G_num = 0.0;
    double relerr_G = 0.0;
    double h_ref = 0.0;
    double h_num = 0.0;
    double relerr_h = 0.0;
    double ibp_resid = 0.0;
    double boundary_mass = 0.0;
};

class BarrierSolution {
public:
    std::vector<double> times;
    std::vector<double> barrier;
    std::vector<double> barrier_deriv;
    std::vector<DiagnosticsRow> diagnostics;
    std::vector<std::pair<int, Field>> snapshots; // (step index, density)
    std::optional<Field> final_density;

    double max_relerr_G = 0.0;
    double max_relerr_h = 0.0;
    double max_ibp_resid = 0.0;
    double max_boundary_mass = 0.0;
    /// Largest embedded-weights error estimate seen over accepted steps.
    double max_step_error_estimate = 0.0;

    double horizon() const { return times.empty() ? 0.0 : times.back(); }

    /// Linear interpolation of the barrier (clamped at the ends).
    double barrier_at(double t) const;
    /// Largest |b(t_{k+1}) - b(t_k)| over the mesh.
    double max_increment() const;
};

/// The unique root b0 of lambda * integral psi(x - b0) f(x) dx = target.
/// The map is strictly increasing in b0 for barriers in the central
/// window of the period; bisection runs to an interval below 1e-12.
double initial_barrier(const Field& f, const KillingKernel& kernel, double lambda,
                       double target);

/// Barrier ODE right-hand side
///   b' = [g' + theta (g + lambda <psi_b, u>) - lambda^2 <psi_b^2, u>
///         + (lambda/2) <psi_xx_b, u>] / (lambda <psi_x_b, u>).
/// Throws BarrierDegeneracy when the denominator falls below
/// 1e-10 * max(1, lambda * |u|_1).
double barrier_rhs(const Field& u, double b, double t, const IfptProblem& problem);

BarrierSolution solve_barrier(const IfptProblem& problem);

struct BracketSolution {
    double eps = 0.0;
    BarrierSolution over;  // barrier for the kernel dominating the indicator
    BarrierSolution under; // barrier for the kernel dominated by it
};

/// Runs the solve with mollifier kernel pairs for each width in eps_list.
/// Requires lambda == 1 (hard-barrier normalization 0 < -g/G < 1).
std::vector<BracketSolution> bracket_barriers(const IfptProblem& base,
                                              const std::vector<double>& eps_list);

} // namespace ifpt
