#pragma once

#include <functional>
#include <vector>

#include "ifpt/spectral.hpp"

namespace ifpt {

/// Sup norms and integral norms of the killing profile and of
/// phi = psi^2 - psi, measured over one period by fine sampling.
/// The total variation counts both the central transition and the
/// periodic wrap transition.
struct KernelNorms {
    double psi_x_sup = 0.0;
    double psi_xx_sup = 0.0;
    double psi_xxx_sup = 0.0;
    double psi_x_total_variation = 0.0;
    double phi_l1 = 0.0;
};

struct ShiftedKernelFields {
    Field psi;
    Field psi_x;
    Field psi_xx;
    Field phi; // psi^2 - psi
};

/// Smooth, [0,1]-valued, non-increasing (within ripple) killing profile
/// on one period. Two flavors share the interface: a finite trigonometric
/// polynomial (the Fejer smoothing of the step indicator), and an exact
/// smooth profile supplied through derivative callbacks (the escape hatch,
/// used by the mollifier bracket kernels). Immutable after construction.
class KillingKernel {
public:
    /// Cesaro (Fejer) mean of order m of the Fourier series of the
    /// indicator of {x < 0} periodized on [-L/2, L/2).
    static KillingKernel fejer(int order, double period);

    /// Escape hatch: exact profile with derivative callbacks. Callbacks
    /// receive x already wrapped into [-L/2, L/2) and are not validated.
    static KillingKernel from_profile(double period,
                                      std::function<double(double)> value,
                                      std::function<double(double)> d1,
                                      std::function<double(double)> d2,
                                      std::function<double(double)> d3 = {});

    double period() const { return period_; }
    /// Fejer order, or 0 for profile-backed kernels.
    int fejer_order() const { return order_; }

    double value(double x) const;
    double deriv(double x) const;
    double deriv2(double x) const;
    double deriv3(double x) const;

    /// Smallest h with |psi| <= clip_tolerance on [h, L/2-h] and
    /// |psi - 1| <= clip_tolerance on [-L/2+h, -h].
    double half_width() const { return half_width_; }
    /// Largest ripple magnitude outside [-h, h] (and outside the wrap
    /// transition, which mirrors the central one).
    double clip_tolerance() const { return clip_tol_; }

    const KernelNorms& norms() const { return norms_; }

    /// Samples psi, psi_x, psi_xx and phi = psi^2 - psi at x_k - shift
    /// for every grid node. Exact: trig polynomials are evaluated by
    /// stable rotation recurrences, profiles through their callbacks.
    ShiftedKernelFields eval_shifted(const GridPtr& grid, double shift) const;

    /// Equally spaced samples over one period starting at -L/2,
    /// for interpolation-based path evaluation.
    std::vector<double> lookup_table(int size) const;

private:
    KillingKernel() = default;
    void finalize_metrics();

    double period_ = 0.0;
    int order_ = 0;
    // trig representation: value = mean + sum_k (cos_c[k-1] cos(kw x) + sin_c[k-1] sin(kw x))
    double mean_ = 0.0;
    std::vector<double> cos_coef_;
    std::vector<double> sin_coef_;
    // profile representation
    std::function<double(double)> profile_value_, profile_d1_, profile_d2_, profile_d3_;
    bool has_profile_ = false;

    double half_width_ = 0.0;
    double clip_tol_ = 0.0;
    KernelNorms norms_;
};

/// Bracketing pair for the hard-barrier construction: under <= 1{x<=0} <= over
/// pointwise; both converge to the indicator as eps shrinks to 0.
struct MollifierPair {
    KillingKernel under;
    KillingKernel over;
    double eps = 0.0;
};

/// Builds the pair from the fixed smooth bump exp(-1/(w(1-w))) on (0,1):
/// over ramps from 1 to 0 on [0, eps], under on [-eps, 0]; both are
/// periodized with the mirrored wrap transition at +-L/2.
MollifierPair build_mollifier_pair(double eps, double period);

/// The normalized bump and its tail integral, exposed for test oracles.
double mollifier_bump(double w);
double mollifier_bump_tail(double s);

/// Fast periodic evaluator: linear interpolation in a precomputed table.
class KernelTable {
public:
    KernelTable(const KillingKernel& kernel, int size = 1 << 16);
    double operator()(double x) const;

private:
    std::vector<double> values_;
    double period_;
    double inv_step_;
};

} // namespace ifpt
