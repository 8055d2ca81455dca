#pragma once

#include <vector>

#include "ifpt/barrier.hpp"
#include "ifpt/survival.hpp"

namespace ifpt {

/// One CDS market quote. Payment times are the premium dates in
/// (T_{j-1}, T_j], the last one equal to the maturity; accruals[i] is the
/// year fraction of the period ending at payment_times[i].
struct CdsQuote {
    int index = 0;       // j, 1-based
    double maturity = 0; // T_j
    double upfront = 0;  // pi0_j
    double running = 0;  // pi1_j
    std::vector<double> payment_times;
    std::vector<double> accruals;

    void validate(double prev_maturity) const;
};

/// Risk-free zero-coupon bond prices p0(t), nonincreasing with p0(0) = 1.
class DiscountCurve {
public:
    static DiscountCurve flat(double rate);
    static DiscountCurve from_table(std::vector<double> times, std::vector<double> dfs);

    double value(double t) const;

private:
    DiscountCurve() = default;
    bool flat_ = true;
    double rate_ = 0.0;
    std::vector<double> times_;
    std::vector<double> log_dfs_;
};

struct LegValues {
    double premium = 0.0;    // pi0 + pi1 * annuity at period starts
    double protection = 0.0; // (1-R) * sum p0 * survival decrements
};

/// Both legs of quote j under a candidate flat hazard on its segment,
/// with survival continuing from survival_at_start at segment_start.
LegValues cds_leg_values(double hazard, const CdsQuote& quote, double segment_start,
                         double survival_at_start, const DiscountCurve& discount,
                         double recovery);

struct BootstrapOptions {
    double h_max = 10.0;        // root bracket upper end per segment
    double residual_tol = 1e-12;
};

/// Sequentially solves premium = protection for each quote's segment
/// hazard, carrying survival forward. Throws UnbootstrappableQuote when a
/// segment has no root in (0, h_max].
SurvivalModel bootstrap_hazard(const std::vector<CdsQuote>& quotes, const DiscountCurve& discount,
                               double recovery, const BootstrapOptions& options = {});

struct StitchOptions {
    double theta = 1.0;
    int snapshot_stride = 0;
    double leak_tolerance = 2e-2;
};

/// Multi-segment barrier for a piecewise-hazard survival model on
/// [0, horizon]. Each segment targets its conditional exponential law,
/// restarting from the renormalized killed density. The restart barrier
/// is re-rooted so the hazard identity holds at the segment start; it
/// jumps exactly when the target hazard jumps (matching hazards restart
/// continuously). Diagnostics are reported against the global model.
BarrierSolution stitch_barrier(const SurvivalModel& hazard_model, const InitialDensity& density,
                               double lambda, const KillingKernel& kernel, const GridPtr& grid,
                               double dt, double horizon, const StitchOptions& options = {});

} // namespace ifpt
