#include "ifpt/montecarlo.hpp"

#include <algorithm>
#include <cmath>

#include "ifpt/parallel.hpp"
#include "ifpt/rng.hpp"

namespace ifpt {

namespace {

constexpr long kBlock = 4096;

struct SimMesh {
    long n_steps = 0;
    double dt = 0.0;
    std::vector<long> output_steps;  // ascending, first is 0
    std::vector<double> output_times;
    std::vector<double> barrier_at_step; // b(s_j) for j = 0..n_steps
};

SimMesh build_mesh(const BarrierSolution& barrier, double horizon, double dt_sim) {
    if (barrier.times.empty() || barrier.horizon() < horizon - 1e-12)
        throw InvalidParameter("monte carlo: barrier is shorter than the requested horizon");
    SimMesh mesh;
    mesh.n_steps = std::max<long>(1, std::lround(horizon / dt_sim));
    mesh.dt = horizon / static_cast<double>(mesh.n_steps);
    long prev = -1;
    for (double t : barrier.times) {
        if (t > horizon + 1e-12) break;
        const long j = std::lround(t / mesh.dt);
        if (j > prev && j <= mesh.n_steps) {
            mesh.output_steps.push_back(j);
            mesh.output_times.push_back(j * mesh.dt);
            prev = j;
        }
    }
    if (mesh.output_steps.empty() || mesh.output_steps.front() != 0) {
        mesh.output_steps.insert(mesh.output_steps.begin(), 0);
        mesh.output_times.insert(mesh.output_times.begin(), 0.0);
    }
    mesh.barrier_at_step.resize(static_cast<std::size_t>(mesh.n_steps) + 1);
    for (long j = 0; j <= mesh.n_steps; ++j)
        mesh.barrier_at_step[static_cast<std::size_t>(j)] = barrier.barrier_at(j * mesh.dt);
    return mesh;
}

struct Accumulator {
    std::vector<double> sum;
    std::vector<double> sumsq;
    explicit Accumulator(std::size_t n) : sum(n, 0.0), sumsq(n, 0.0) {}
    void add(const Accumulator& other) {
        for (std::size_t i = 0; i < sum.size(); ++i) {
            sum[i] += other.sum[i];
            sumsq[i] += other.sumsq[i];
        }
    }
};

} // namespace

void McConfig::validate() const {
    if (paths < 1)
        throw InvalidParameter("McConfig: paths must be >= 1");
    if (!(dt_sim > 0.0))
        throw InvalidParameter("McConfig: dt_sim must be positive");
    if (threads < 1)
        throw InvalidParameter("McConfig: threads must be >= 1");
}

SurvivalEstimate survival_mc(const BarrierSolution& barrier, const InitialDensity& density,
                             double lambda, const KillingKernel& kernel, double horizon,
                             const McConfig& cfg) {
    cfg.validate();
    if (!density.is_gaussian())
        throw InvalidParameter("survival_mc: initial density must be Gaussian for path sampling");
    if (lambda < 0.0)
        throw InvalidParameter("survival_mc: lambda must be nonnegative");

    const SimMesh mesh = build_mesh(barrier, horizon, cfg.dt_sim);
    const KernelTable psi(kernel);
    const std::size_t n_out = mesh.output_times.size();
    const double mu = density.mean();
    const double sd = density.stddev();
    const double sqdt = std::sqrt(mesh.dt);

    const long n_samples = cfg.antithetic ? (cfg.paths + 1) / 2 : cfg.paths;
    const long n_blocks = (n_samples + kBlock - 1) / kBlock;
    std::vector<Accumulator> partial(static_cast<std::size_t>(n_blocks), Accumulator(n_out));

    parallel_blocks(n_samples, kBlock, cfg.threads, [&](long block, long begin, long end) {
        Accumulator acc(n_out);
        std::vector<double> sample(n_out);
        for (long p = begin; p < end; ++p) {
            NormalStream incr(cfg.seed, static_cast<std::uint64_t>(p), 1);
            NormalStream start(cfg.seed, static_cast<std::uint64_t>(p), 2);
            const double z0 = start.next();
            double y_pos = mu + sd * z0;
            double y_neg = mu - sd * z0;
            double lam_pos = 0.0, lam_neg = 0.0;
            std::size_t out = 0;
            if (mesh.output_steps[out] == 0) {
                sample[out] = 1.0;
                ++out;
            }
            for (long j = 0; j < mesh.n_steps; ++j) {
                const double b = mesh.barrier_at_step[static_cast<std::size_t>(j)];
                lam_pos += lambda * psi(y_pos - b) * mesh.dt;
                const double z = incr.next();
                y_pos += sqdt * z;
                if (cfg.antithetic) {
                    lam_neg += lambda * psi(y_neg - b) * mesh.dt;
                    y_neg -= sqdt * z;
                }
                if (out < n_out && mesh.output_steps[out] == j + 1) {
                    sample[out] = cfg.antithetic
                                      ? 0.5 * (std::exp(-lam_pos) + std::exp(-lam_neg))
                                      : std::exp(-lam_pos);
                    ++out;
                }
            }
            for (std::size_t i = 0; i < n_out; ++i) {
                acc.sum[i] += sample[i];
                acc.sumsq[i] += sample[i] * sample[i];
            }
        }
        partial[static_cast<std::size_t>(block)] = std::move(acc);
    });

    Accumulator total(n_out);
    for (const auto& acc : partial) total.add(acc);

    SurvivalEstimate est;
    est.times = mesh.output_times;
    est.mean.resize(n_out);
    est.se.resize(n_out);
    const double n = static_cast<double>(n_samples);
    for (std::size_t i = 0; i < n_out; ++i) {
        est.mean[i] = total.sum[i] / n;
        const double var = n > 1.0
                               ? std::max(0.0, (total.sumsq[i] - total.sum[i] * total.sum[i] / n) / (n - 1.0))
                               : 0.0;
        est.se[i] = std::sqrt(var / n);
    }
    return est;
}

std::vector<DefaultTimeSample> sample_default_times(const BarrierSolution& barrier,
                                                    const InitialDensity& density,
                                                    double lambda, const KillingKernel& kernel,
                                                    double horizon, const McConfig& cfg) {
    cfg.validate();
    if (!density.is_gaussian())
        throw InvalidParameter("sample_default_times: initial density must be Gaussian");
    if (lambda < 0.0)
        throw InvalidParameter("sample_default_times: lambda must be nonnegative");

    const SimMesh mesh = build_mesh(barrier, horizon, cfg.dt_sim);
    const KernelTable psi(kernel);
    const double mu = density.mean();
    const double sd = density.stddev();
    const double sqdt = std::sqrt(mesh.dt);

    std::vector<DefaultTimeSample> out(static_cast<std::size_t>(cfg.paths));
    parallel_blocks(cfg.paths, kBlock, cfg.threads, [&](long, long begin, long end) {
        for (long p = begin; p < end; ++p) {
            NormalStream incr(cfg.seed, static_cast<std::uint64_t>(p), 1);
            NormalStream start(cfg.seed, static_cast<std::uint64_t>(p), 2);
            ExpStream threshold(cfg.seed, static_cast<std::uint64_t>(p), 3);
            const double u_threshold = threshold.next();
            double y = mu + sd * start.next();
            double lam = 0.0;
            DefaultTimeSample s{horizon, true};
            for (long j = 0; j < mesh.n_steps; ++j) {
                const double b = mesh.barrier_at_step[static_cast<std::size_t>(j)];
                lam += lambda * psi(y - b) * mesh.dt;
                if (lam > u_threshold) {
                    s.tau = (j + 1) * mesh.dt;
                    s.censored = false;
                    break;
                }
                y += sqdt * incr.next();
            }
            out[static_cast<std::size_t>(p)] = s;
        }
    });
    return out;
}

} // namespace ifpt
