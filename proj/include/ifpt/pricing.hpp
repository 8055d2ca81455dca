#pragma once

#include <functional>
#include <vector>

#include "ifpt/barrier.hpp"
#include "ifpt/kernel.hpp"
#include "ifpt/montecarlo.hpp"

namespace ifpt {

/// Geometric Brownian asset correlated with the credit index Brownian.
struct MarketModel {
    double spot = 100.0;
    double drift = 0.05;   // mu, raw measure; no discounting is applied
    double vol = 0.2;      // sigma_X
    double corr = 0.0;     // rho in [-1, 1]

    void validate() const;
};

struct PayoffSpec {
    enum class Kind { unit, call, put, digital, custom };

    Kind kind = Kind::unit;
    double strike = 0.0;
    std::function<double(double)> custom_fn;

    static PayoffSpec unit();
    static PayoffSpec call(double strike);
    static PayoffSpec put(double strike);
    static PayoffSpec digital(double strike);
    static PayoffSpec custom(std::function<double(double)> fn);

    double operator()(double x_maturity) const;
    void validate() const;
};

struct PriceResult {
    double price = 0.0;
    double se = 0.0;
    long paths = 0;
};

/// Monte Carlo price of F(X_T) 1{tau > T}: simulates W = B', B = rho B' +
/// sqrt(1-rho^2) B'', steps X exactly lognormally, and averages
/// F(X_T) exp(-Lambda_T). With the unit payoff and rho = 0 this consumes
/// exactly the streams of survival_mc, so the two estimates coincide.
PriceResult price_claim(const BarrierSolution& barrier, const InitialDensity& density,
                        double lambda, const KillingKernel& kernel, const MarketModel& market,
                        const PayoffSpec& payoff, double maturity, const McConfig& cfg);

/// Conditional price given the asset path observed on [0, t_obs] and
/// survival to t_obs. B' on [0, t_obs] is reconstructed from the observed
/// prices, only B'' (and the future of B') is simulated, and the result
/// is the ratio of the exp(-Lambda)-weighted numerator and denominator
/// on shared draws, with a delta-method standard error.
PriceResult conditional_price(const BarrierSolution& barrier, const InitialDensity& density,
                              double lambda, const KillingKernel& kernel, const MarketModel& market,
                              const PayoffSpec& payoff, const std::vector<double>& observed_times,
                              const std::vector<double>& observed_prices, double t_obs,
                              double maturity, const McConfig& cfg);

} // namespace ifpt
