#pragma once

#include <cstdint>
#include <vector>

#include "ifpt/barrier.hpp"
#include "ifpt/kernel.hpp"
#include "ifpt/survival.hpp"

namespace ifpt {

struct McConfig {
    long paths = 100000;
    double dt_sim = 1.0 / 256.0;
    std::uint64_t seed = 20240101;
    bool antithetic = false;
    int threads = 1;

    void validate() const;
};

struct SurvivalEstimate {
    std::vector<double> times;
    std::vector<double> mean;
    std::vector<double> se;
};

/// Conditional-expectation survival estimator: averages exp(-Lambda_t)
/// with Lambda accumulated by the left-point rule along Euler paths of
/// Y = Y_0 + B. Never samples the exponential threshold. The barrier is
/// interpolated linearly between solver mesh points. Estimates are
/// reported at the barrier mesh times snapped to the simulation mesh.
SurvivalEstimate survival_mc(const BarrierSolution& barrier, const InitialDensity& density,
                             double lambda, const KillingKernel& kernel, double horizon,
                             const McConfig& cfg);

struct DefaultTimeSample {
    double tau = 0.0;
    bool censored = false;
};

/// Draws U ~ Exp(1) per path and returns the first simulation mesh time
/// at which the accumulated intensity integral exceeds U; paths that
/// never cross are censored at the horizon. Uses the same path substreams
/// as survival_mc, so both estimators see identical Brownian paths for a
/// fixed seed.
std::vector<DefaultTimeSample> sample_default_times(const BarrierSolution& barrier,
                                                    const InitialDensity& density,
                                                    double lambda, const KillingKernel& kernel,
                                                    double horizon, const McConfig& cfg);

} // namespace ifpt
