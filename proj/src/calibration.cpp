#include "ifpt/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ifpt {

void CdsQuote::validate(double prev_maturity) const {
    if (payment_times.empty() || accruals.size() != payment_times.size())
        throw InvalidParameter("CdsQuote: payment times and accruals must match and be nonempty");
    if (std::abs(payment_times.back() - maturity) > 1e-12)
        throw InvalidParameter("CdsQuote: last payment time must equal the maturity");
    double prev = prev_maturity;
    for (std::size_t i = 0; i < payment_times.size(); ++i) {
        if (!(payment_times[i] > prev))
            throw InvalidParameter("CdsQuote: payment times must increase within the segment");
        if (!(accruals[i] > 0.0))
            throw InvalidParameter("CdsQuote: accrual factors must be positive");
        prev = payment_times[i];
    }
    if (!(maturity > prev_maturity))
        throw InvalidParameter("CdsQuote: maturities must be strictly increasing");
}

DiscountCurve DiscountCurve::flat(double rate) {
    if (rate < 0.0)
        throw InvalidParameter("DiscountCurve: flat rate must be nonnegative");
    DiscountCurve c;
    c.flat_ = true;
    c.rate_ = rate;
    return c;
}

DiscountCurve DiscountCurve::from_table(std::vector<double> times, std::vector<double> dfs) {
    if (times.size() != dfs.size() || times.size() < 2)
        throw InvalidParameter("DiscountCurve: need >= 2 matching points");
    if (times.front() != 0.0 || std::abs(dfs.front() - 1.0) > 1e-12)
        throw InvalidParameter("DiscountCurve: table must start at (0, 1)");
    DiscountCurve c;
    c.flat_ = false;
    c.times_ = std::move(times);
    c.log_dfs_.resize(dfs.size());
    for (std::size_t i = 0; i < dfs.size(); ++i) {
        if (!(dfs[i] > 0.0) || dfs[i] > 1.0)
            throw InvalidParameter("DiscountCurve: factors must lie in (0, 1]");
        if (i > 0 && (!(c.times_[i] > c.times_[i - 1]) || dfs[i] > dfs[i - 1]))
            throw InvalidParameter("DiscountCurve: times increasing, factors nonincreasing");
        c.log_dfs_[i] = std::log(dfs[i]);
    }
    return c;
}

double DiscountCurve::value(double t) const {
    if (t <= 0.0) return 1.0;
    if (flat_) return std::exp(-rate_ * t);
    if (t >= times_.back()) {
        const std::size_t n = times_.size();
        const double slope = (log_dfs_[n - 1] - log_dfs_[n - 2]) / (times_[n - 1] - times_[n - 2]);
        return std::exp(log_dfs_[n - 1] + slope * (t - times_[n - 1]));
    }
    const auto it = std::upper_bound(times_.begin(), times_.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - times_.begin());
    const double w = (t - times_[i - 1]) / (times_[i] - times_[i - 1]);
    return std::exp((1.0 - w) * log_dfs_[i - 1] + w * log_dfs_[i]);
}

LegValues cds_leg_values(double hazard, const CdsQuote& quote, double segment_start,
                         double survival_at_start, const DiscountCurve& discount,
                         double recovery) {
    if (hazard < 0.0)
        throw InvalidParameter("cds_leg_values: hazard must be nonnegative");
    if (!(recovery > 0.0 && recovery < 1.0))
        throw InvalidParameter("cds_leg_values: recovery must lie in (0, 1)");

    // premium paid at period starts with the period's accrual, protection
    // on survival decrements at period ends
    LegValues legs;
    legs.premium = quote.upfront;
    double t_prev = segment_start;
    double g_prev = survival_at_start;
    for (std::size_t i = 0; i < quote.payment_times.size(); ++i) {
        const double t_i = quote.payment_times[i];
        const double g_i = survival_at_start * std::exp(-hazard * (t_i - segment_start));
        legs.premium += quote.running * quote.accruals[i] * discount.value(t_prev) * g_prev;
        legs.protection += (1.0 - recovery) * discount.value(t_i) * (g_prev - g_i);
        t_prev = t_i;
        g_prev = g_i;
    }
    return legs;
}

SurvivalModel bootstrap_hazard(const std::vector<CdsQuote>& quotes, const DiscountCurve& discount,
                               double recovery, const BootstrapOptions& options) {
    if (quotes.empty())
        throw InvalidParameter("bootstrap_hazard: no quotes");
    if (!(options.h_max > 0.0))
        throw InvalidParameter("bootstrap_hazard: h_max must be positive");

    std::vector<std::pair<double, double>> knots;
    double seg_start = 0.0;
    double seg_survival = 1.0;
    for (std::size_t j = 0; j < quotes.size(); ++j) {
        const CdsQuote& q = quotes[j];
        q.validate(seg_start);

        auto mismatch = [&](double h) {
            const LegValues legs = cds_leg_values(h, q, seg_start, seg_survival, discount, recovery);
            return legs.protection - legs.premium;
        };
        double lo = 0.0, hi = options.h_max;
        const double f_lo = mismatch(lo);
        const double f_hi = mismatch(hi);
        if (!(f_lo < 0.0) || !(f_hi > 0.0)) {
            std::ostringstream msg;
            msg << "bootstrap_hazard: segment " << j + 1 << " has no root in (0, " << options.h_max
                << "]: leg mismatch spans [" << f_lo << ", " << f_hi << "]";
            throw UnbootstrappableQuote(j + 1, msg.str());
        }
        for (int it = 0; it < 200 && hi - lo > 1e-16 * std::max(1.0, hi); ++it) {
            const double mid = 0.5 * (lo + hi);
            if (mismatch(mid) < 0.0)
                lo = mid;
            else
                hi = mid;
        }
        const double h = 0.5 * (lo + hi);
        const double resid = std::abs(mismatch(h));
        if (resid > options.residual_tol) {
            std::ostringstream msg;
            msg << "bootstrap_hazard: segment " << j + 1 << " residual " << resid
                << " above tolerance " << options.residual_tol;
            throw UnbootstrappableQuote(j + 1, msg.str());
        }
        knots.emplace_back(seg_start, h);
        seg_survival *= std::exp(-h * (q.maturity - seg_start));
        seg_start = q.maturity;
    }
    return SurvivalModel::piecewise_hazard(std::move(knots));
}

BarrierSolution stitch_barrier(const SurvivalModel& hazard_model, const InitialDensity& density,
                               double lambda, const KillingKernel& kernel, const GridPtr& grid,
                               double dt, double horizon, const StitchOptions& options) {
    if (hazard_model.kind() != SurvivalKind::piecewise_hazard)
        throw InvalidParameter("stitch_barrier: expected a piecewise-hazard model");
    if (!(horizon > 0.0))
        throw InvalidParameter("stitch_barrier: horizon must be positive");

    const auto bound = check_hazard_bound(hazard_model, lambda, horizon,
                                          std::max(257, static_cast<int>(horizon / dt) + 1));
    if (!bound.ok) {
        std::ostringstream msg;
        msg << "stitch_barrier: hazard bound violated at t = " << bound.argmin_t
            << " (margin " << bound.worst_margin << ")";
        throw HazardBoundViolation(bound.argmin_t, bound.worst_margin, msg.str());
    }

    // segment boundaries: hazard knots inside (0, horizon), then horizon
    std::vector<double> boundaries{0.0};
    for (const auto& [tj, hj] : hazard_model.knots()) {
        (void)hj;
        if (tj > 0.0 && tj < horizon) boundaries.push_back(tj);
    }
    boundaries.push_back(horizon);

    BarrierSolution merged;
    InitialDensity seg_density = density;
    double scale = 1.0; // product of killed masses at the completed restarts
    int step_offset = 0;

    for (std::size_t seg = 0; seg + 1 < boundaries.size(); ++seg) {
        const double t0 = boundaries[seg];
        const double t1 = boundaries[seg + 1];
        const double h_seg = hazard_model.hazard(t0);

        IfptProblem problem;
        problem.survival = SurvivalModel::exponential(h_seg);
        problem.density = seg_density;
        problem.lambda = lambda;
        problem.kernel = kernel;
        problem.grid = grid;
        problem.horizon = t1 - t0;
        const long n = std::max<long>(1, std::lround((t1 - t0) / dt));
        problem.dt = (t1 - t0) / static_cast<double>(n);
        problem.theta = options.theta;
        problem.snapshot_stride = options.snapshot_stride;
        problem.leak_tolerance = options.leak_tolerance;

        BarrierSolution sol;
        auto segment_label = [&](const char* what) {
            std::ostringstream msg;
            msg << "stitch_barrier: segment " << seg + 1 << " [" << t0 << ", " << t1
                << "] failed: " << what;
            return msg.str();
        };
        try {
            sol = solve_barrier(problem);
        } catch (const BarrierDegeneracy& e) {
            throw BarrierDegeneracy(t0 + e.time(), e.inner_product(), segment_label(e.what()));
        } catch (const MassLeak& e) {
            throw MassLeak(t0 + e.time(), e.boundary_mass(), segment_label(e.what()));
        } catch (const NumericalError& e) {
            throw NumericalError(e.code(), segment_label(e.what()));
        }

        // re-express the segment rows against the global model; the tau=0
        // row of a restarted segment repeats the knot time and carries the
        // re-rooted barrier, making the jump and the restart bookkeeping
        // visible in the merged series
        for (std::size_t r = 0; r < sol.times.size(); ++r) {
            DiagnosticsRow row = sol.diagnostics[r];
            const double t_glob = std::min(t0 + row.t, horizon);
            row.t = t_glob;
            row.G_num *= scale;
            row.G_ref = hazard_model.survival(t_glob);
            row.relerr_G = std::abs(row.G_num - row.G_ref) / row.G_ref;
            // the segment-end row belongs to this segment's hazard even when
            // it sits on a knot where the global hazard is right-continuous
            row.h_ref = h_seg;
            row.relerr_h = std::abs(row.h_num - row.h_ref) / row.h_ref;
            merged.times.push_back(t_glob);
            merged.barrier.push_back(sol.barrier[r]);
            merged.barrier_deriv.push_back(sol.barrier_deriv[r]);
            merged.diagnostics.push_back(row);
            merged.max_relerr_G = std::max(merged.max_relerr_G, row.relerr_G);
            merged.max_relerr_h = std::max(merged.max_relerr_h, row.relerr_h);
            merged.max_ibp_resid = std::max(merged.max_ibp_resid, row.ibp_resid);
            merged.max_boundary_mass = std::max(merged.max_boundary_mass, row.boundary_mass);
        }
        for (auto& [idx, field] : sol.snapshots) {
            if (seg > 0 && idx == 0) continue;
            Field scaled = field;
            for (int i = 0; i < scaled.size(); ++i) scaled[i] *= scale;
            merged.snapshots.emplace_back(step_offset + idx, std::move(scaled));
        }
        step_offset += static_cast<int>(sol.times.size()) - 1;

        // restart density: killed density renormalized by its own mass
        Field u_end = *sol.final_density;
        const double mass = integrate(u_end);
        if (seg + 2 < boundaries.size()) {
            Field normalized = u_end;
            for (int i = 0; i < normalized.size(); ++i) normalized[i] /= mass;
            seg_density = InitialDensity::from_field(std::move(normalized));
            scale *= mass;
        } else {
            Field global = u_end;
            for (int i = 0; i < global.size(); ++i) global[i] *= scale;
            merged.final_density = std::move(global);
        }
    }
    return merged;
}

} // namespace ifpt
