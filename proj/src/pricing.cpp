#include "ifpt/pricing.hpp"

#include <algorithm>
#include <cmath>

#include "ifpt/parallel.hpp"
#include "ifpt/rng.hpp"

namespace ifpt {

namespace {

constexpr long kBlock = 4096;

struct PathMesh {
    long n_steps = 0;
    double dt = 0.0;
    std::vector<double> barrier_at_step;
};

PathMesh build_mesh(const BarrierSolution& barrier, double horizon, double dt_sim) {
    if (barrier.times.empty() || barrier.horizon() < horizon - 1e-12)
        throw InvalidParameter("pricing: barrier is shorter than the maturity");
    PathMesh mesh;
    mesh.n_steps = std::max<long>(1, std::lround(horizon / dt_sim));
    mesh.dt = horizon / static_cast<double>(mesh.n_steps);
    mesh.barrier_at_step.resize(static_cast<std::size_t>(mesh.n_steps) + 1);
    for (long j = 0; j <= mesh.n_steps; ++j)
        mesh.barrier_at_step[static_cast<std::size_t>(j)] = barrier.barrier_at(j * mesh.dt);
    return mesh;
}

} // namespace

void MarketModel::validate() const {
    if (!(spot > 0.0))
        throw InvalidParameter("MarketModel: spot must be positive");
    if (!(vol > 0.0))
        throw InvalidParameter("MarketModel: volatility must be positive");
    if (!(corr >= -1.0 && corr <= 1.0))
        throw InvalidParameter("MarketModel: correlation must lie in [-1, 1]");
}

PayoffSpec PayoffSpec::unit() { return PayoffSpec{Kind::unit, 0.0, {}}; }
PayoffSpec PayoffSpec::call(double strike) { return PayoffSpec{Kind::call, strike, {}}; }
PayoffSpec PayoffSpec::put(double strike) { return PayoffSpec{Kind::put, strike, {}}; }
PayoffSpec PayoffSpec::digital(double strike) { return PayoffSpec{Kind::digital, strike, {}}; }
PayoffSpec PayoffSpec::custom(std::function<double(double)> fn) {
    return PayoffSpec{Kind::custom, 0.0, std::move(fn)};
}

double PayoffSpec::operator()(double x) const {
    switch (kind) {
    case Kind::unit: return 1.0;
    case Kind::call: return std::max(x - strike, 0.0);
    case Kind::put: return std::max(strike - x, 0.0);
    case Kind::digital: return x > strike ? 1.0 : 0.0;
    case Kind::custom: return custom_fn(x);
    }
    return 0.0;
}

void PayoffSpec::validate() const {
    if ((kind == Kind::call || kind == Kind::put || kind == Kind::digital) && !(strike > 0.0))
        throw InvalidParameter("PayoffSpec: strike must be positive");
    if (kind == Kind::custom && !custom_fn)
        throw InvalidParameter("PayoffSpec: custom payoff requires a callable");
}

PriceResult price_claim(const BarrierSolution& barrier, const InitialDensity& density,
                        double lambda, const KillingKernel& kernel, const MarketModel& market,
                        const PayoffSpec& payoff, double maturity, const McConfig& cfg) {
    cfg.validate();
    market.validate();
    payoff.validate();
    if (!density.is_gaussian())
        throw InvalidParameter("price_claim: initial density must be Gaussian");
    if (lambda < 0.0)
        throw InvalidParameter("price_claim: lambda must be nonnegative");
    if (!(maturity > 0.0))
        throw InvalidParameter("price_claim: maturity must be positive");

    const PathMesh mesh = build_mesh(barrier, maturity, cfg.dt_sim);
    const KernelTable psi(kernel);
    const double rho = market.corr;
    const double orth = std::sqrt(std::max(0.0, 1.0 - rho * rho));
    const double mu_y = density.mean();
    const double sd_y = density.stddev();
    const double sqdt = std::sqrt(mesh.dt);
    const double log_drift = (market.drift - 0.5 * market.vol * market.vol) * mesh.dt;

    const long n_blocks = (cfg.paths + kBlock - 1) / kBlock;
    std::vector<double> block_sum(static_cast<std::size_t>(n_blocks), 0.0);
    std::vector<double> block_sumsq(static_cast<std::size_t>(n_blocks), 0.0);

    parallel_blocks(cfg.paths, kBlock, cfg.threads, [&](long block, long begin, long end) {
        double sum = 0.0, sumsq = 0.0;
        for (long p = begin; p < end; ++p) {
            NormalStream stream_w(cfg.seed, static_cast<std::uint64_t>(p), 0);
            NormalStream stream_z(cfg.seed, static_cast<std::uint64_t>(p), 1);
            NormalStream stream_y(cfg.seed, static_cast<std::uint64_t>(p), 2);
            double y = mu_y + sd_y * stream_y.next();
            double log_x = std::log(market.spot);
            double lam = 0.0;
            for (long j = 0; j < mesh.n_steps; ++j) {
                lam += lambda * psi(y - mesh.barrier_at_step[static_cast<std::size_t>(j)]) * mesh.dt;
                const double dw = stream_w.next();
                const double dz = stream_z.next();
                y += sqdt * (rho * dw + orth * dz);
                log_x += log_drift + market.vol * sqdt * dw;
            }
            const double v = payoff(std::exp(log_x)) * std::exp(-lam);
            sum += v;
            sumsq += v * v;
        }
        block_sum[static_cast<std::size_t>(block)] = sum;
        block_sumsq[static_cast<std::size_t>(block)] = sumsq;
    });

    double sum = 0.0, sumsq = 0.0;
    for (long b = 0; b < n_blocks; ++b) {
        sum += block_sum[static_cast<std::size_t>(b)];
        sumsq += block_sumsq[static_cast<std::size_t>(b)];
    }
    const double n = static_cast<double>(cfg.paths);
    PriceResult result;
    result.paths = cfg.paths;
    result.price = sum / n;
    const double var = n > 1.0 ? std::max(0.0, (sumsq - sum * sum / n) / (n - 1.0)) : 0.0;
    result.se = std::sqrt(var / n);
    return result;
}

PriceResult conditional_price(const BarrierSolution& barrier, const InitialDensity& density,
                              double lambda, const KillingKernel& kernel, const MarketModel& market,
                              const PayoffSpec& payoff, const std::vector<double>& observed_times,
                              const std::vector<double>& observed_prices, double t_obs,
                              double maturity, const McConfig& cfg) {
    cfg.validate();
    market.validate();
    payoff.validate();
    if (!density.is_gaussian())
        throw InvalidParameter("conditional_price: initial density must be Gaussian");
    if (t_obs < 0.0 || t_obs >= maturity)
        throw InvalidParameter("conditional_price: need 0 <= t_obs < maturity");
    if (observed_times.size() != observed_prices.size())
        throw InvalidParameter("conditional_price: observed times/prices size mismatch");
    if (t_obs > 0.0) {
        if (observed_times.empty() || observed_times.front() > 1e-12 ||
            observed_times.back() < t_obs - 1e-12)
            throw InvalidParameter("conditional_price: observed path must cover [0, t_obs]");
        if (std::abs(observed_prices.front() - market.spot) > 1e-9 * market.spot)
            throw InvalidParameter("conditional_price: observed path must start at the spot");
        for (double x : observed_prices)
            if (!(x > 0.0))
                throw InvalidParameter("conditional_price: observed prices must be positive");
    }

    const PathMesh mesh = build_mesh(barrier, maturity, cfg.dt_sim);
    const KernelTable psi(kernel);
    const double rho = market.corr;
    const double orth = std::sqrt(std::max(0.0, 1.0 - rho * rho));
    const double mu_y = density.mean();
    const double sd_y = density.stddev();
    const double sqdt = std::sqrt(mesh.dt);
    const double log_drift = (market.drift - 0.5 * market.vol * market.vol) * mesh.dt;
    const long obs_steps = std::min<long>(mesh.n_steps, std::lround(t_obs / mesh.dt));

    // B'_s = (log X_s - log X_0 + (vol^2/2 - mu) s) / vol at the mesh times,
    // linear interpolation of log X between observations.
    std::vector<double> known_w(static_cast<std::size_t>(obs_steps) + 1, 0.0);
    if (obs_steps > 0) {
        const double log_x0 = std::log(market.spot);
        auto log_price_at = [&](double s) {
            if (s <= observed_times.front()) return std::log(observed_prices.front());
            if (s >= observed_times.back()) return std::log(observed_prices.back());
            const auto it = std::upper_bound(observed_times.begin(), observed_times.end(), s);
            const std::size_t i = static_cast<std::size_t>(it - observed_times.begin());
            const double w = (s - observed_times[i - 1]) / (observed_times[i] - observed_times[i - 1]);
            return (1.0 - w) * std::log(observed_prices[i - 1]) + w * std::log(observed_prices[i]);
        };
        for (long j = 0; j <= obs_steps; ++j) {
            const double s = j * mesh.dt;
            known_w[static_cast<std::size_t>(j)] =
                (log_price_at(s) - log_x0 + (0.5 * market.vol * market.vol - market.drift) * s) /
                market.vol;
        }
    }

    const long n_blocks = (cfg.paths + kBlock - 1) / kBlock;
    struct Sums { double a = 0, b = 0, aa = 0, bb = 0, ab = 0; };
    std::vector<Sums> block_sums(static_cast<std::size_t>(n_blocks));

    parallel_blocks(cfg.paths, kBlock, cfg.threads, [&](long block, long begin, long end) {
        Sums s;
        for (long p = begin; p < end; ++p) {
            NormalStream stream_w(cfg.seed, static_cast<std::uint64_t>(p), 0);
            NormalStream stream_z(cfg.seed, static_cast<std::uint64_t>(p), 1);
            NormalStream stream_y(cfg.seed, static_cast<std::uint64_t>(p), 2);
            double y = mu_y + sd_y * stream_y.next();
            double log_x = std::log(market.spot);
            double lam = 0.0;
            double denom_sample = 1.0;
            for (long j = 0; j < mesh.n_steps; ++j) {
                lam += lambda * psi(y - mesh.barrier_at_step[static_cast<std::size_t>(j)]) * mesh.dt;
                double dw;
                if (j < obs_steps) {
                    dw = (known_w[static_cast<std::size_t>(j) + 1] -
                          known_w[static_cast<std::size_t>(j)]) / sqdt;
                } else {
                    dw = stream_w.next();
                }
                const double dz = stream_z.next();
                y += sqdt * (rho * dw + orth * dz);
                log_x += log_drift + market.vol * sqdt * dw;
                if (j + 1 == obs_steps)
                    denom_sample = std::exp(-lam);
            }
            if (obs_steps == 0) denom_sample = 1.0;
            const double numer_sample = payoff(std::exp(log_x)) * std::exp(-lam);
            s.a += numer_sample;
            s.b += denom_sample;
            s.aa += numer_sample * numer_sample;
            s.bb += denom_sample * denom_sample;
            s.ab += numer_sample * denom_sample;
        }
        block_sums[static_cast<std::size_t>(block)] = s;
    });

    Sums total;
    for (const auto& s : block_sums) {
        total.a += s.a;
        total.b += s.b;
        total.aa += s.aa;
        total.bb += s.bb;
        total.ab += s.ab;
    }
    const double n = static_cast<double>(cfg.paths);
    const double mean_a = total.a / n;
    const double mean_b = total.b / n;
    if (!(mean_b > 0.0))
        throw NumericalError("conditional-degenerate", "conditional_price: denominator estimate is zero");
    const double ratio = mean_a / mean_b;
    const double var_a = std::max(0.0, total.aa / n - mean_a * mean_a);
    const double var_b = std::max(0.0, total.bb / n - mean_b * mean_b);
    const double cov_ab = total.ab / n - mean_a * mean_b;
    const double var_ratio =
        std::max(0.0, var_a - 2.0 * ratio * cov_ab + ratio * ratio * var_b) / (mean_b * mean_b);

    PriceResult result;
    result.paths = cfg.paths;
    result.price = ratio;
    result.se = std::sqrt(var_ratio / n);
    return result;
}

} // namespace ifpt
