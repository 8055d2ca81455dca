#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "ifpt/io.hpp"
#include "ifpt/parallel.hpp"
#include "ifpt/pricing.hpp"

namespace fs = std::filesystem;
using ifpt::io::json;

namespace {

struct CliOverrides {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    int threads = 1;
};

json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ifpt::InvalidParameter("cannot open config file " + path);
    json cfg = json::parse(in);
    if (!cfg.contains("schema") || cfg.at("schema").get<int>() != 1)
        throw ifpt::InvalidParameter("config: expected \"schema\": 1");
    return cfg;
}

fs::path resolve_out_dir(const json& cfg, const CliOverrides& cli) {
    std::string dir = cli.out_dir;
    if (dir.empty()) dir = cfg.value("out", "");
    if (dir.empty())
        throw ifpt::InvalidParameter("config: output directory missing (set \"out\" or pass --out)");
    fs::path p(dir);
    fs::create_directories(p);
    return p;
}

ifpt::IfptProblem problem_from_config(const json& cfg) {
    ifpt::IfptProblem p;
    p.survival = ifpt::io::survival_from_json(cfg.at("survival"));
    p.density = ifpt::io::density_from_json(cfg.at("initial_density"));
    p.kernel = ifpt::io::kernel_from_json(cfg.at("kernel"));
    p.grid = ifpt::io::grid_from_json(cfg.at("grid"));
    p.lambda = cfg.at("lambda").get<double>();
    p.dt = cfg.at("dt").get<double>();
    p.horizon = cfg.at("horizon").get<double>();
    p.theta = cfg.value("theta", 1.0);
    p.snapshot_stride = cfg.value("snapshot_stride", 0);
    p.leak_tolerance = cfg.value("leak_tolerance", 2e-2);
    return p;
}

ifpt::McConfig mc_from_config(const json& cfg, const CliOverrides& cli) {
    ifpt::io::check_keys(cfg, {"paths", "dt_sim"}, {"seed", "antithetic", "threads"}, "mc");
    ifpt::McConfig mc;
    mc.paths = cfg.at("paths").get<long>();
    mc.dt_sim = cfg.at("dt_sim").get<double>();
    mc.seed = cfg.value("seed", static_cast<std::uint64_t>(20240101));
    mc.antithetic = cfg.value("antithetic", false);
    mc.threads = cfg.value("threads", 1);
    if (cli.seed) mc.seed = *cli.seed;
    if (cli.threads > 1) mc.threads = cli.threads;
    return mc;
}

constexpr std::initializer_list<const char*> kSolveKeys = {
    "survival", "initial_density", "kernel", "grid", "lambda", "dt", "horizon"};
constexpr std::initializer_list<const char*> kSolveOptional = {
    "schema", "command", "out", "theta", "snapshot_stride", "leak_tolerance"};

int run_solve(const json& cfg, const CliOverrides& cli) {
    json keys = cfg;
    ifpt::io::check_keys(cfg,
                         {"schema", "command", "survival", "initial_density", "kernel", "grid",
                          "lambda", "dt", "horizon"},
                         {"out", "theta", "snapshot_stride", "leak_tolerance"}, "solve config");
    const fs::path out = resolve_out_dir(cfg, cli);
    const auto solution = ifpt::solve_barrier(problem_from_config(cfg));
    ifpt::io::write_barrier_csv(out / "barrier.csv", solution);
    ifpt::io::write_snapshots(out, solution);
    return 0;
}

int run_grid6(const json& cfg, const CliOverrides& cli) {
    ifpt::io::check_keys(cfg,
                         {"schema", "command", "initial_density", "kernel", "grid", "lambda",
                          "dt", "horizon"},
                         {"out", "theta", "sigmas", "nus", "leak_tolerance"}, "grid6 config");
    const fs::path out = resolve_out_dir(cfg, cli);
    std::vector<double> sigmas = cfg.value("sigmas", std::vector<double>{0.0625, 0.125, 0.25, 0.5});
    std::vector<double> nus = cfg.value("nus", std::vector<double>{0.0625, 0.125, 0.25, 0.5});

    struct Cell {
        double sigma, nu;
        double max_relerr_G = 0, max_relerr_h = 0, max_ibp = 0, b_end = 0;
        std::string file;
        std::string error;
    };
    std::vector<Cell> cells;
    for (double s : sigmas)
        for (double n : nus) cells.push_back({s, n, 0, 0, 0, 0, "", ""});

    ifpt::parallel_blocks(static_cast<long>(cells.size()), 1, cli.threads,
                          [&](long, long begin, long end) {
        for (long i = begin; i < end; ++i) {
            Cell& cell = cells[static_cast<std::size_t>(i)];
            ifpt::IfptProblem p;
            p.survival = ifpt::SurvivalModel::exponential(cell.nu);
            p.density = ifpt::InitialDensity::gaussian(0.0, cell.sigma);
            p.kernel = ifpt::io::kernel_from_json(cfg.at("kernel"));
            p.grid = ifpt::io::grid_from_json(cfg.at("grid"));
            p.lambda = cfg.at("lambda").get<double>();
            p.dt = cfg.at("dt").get<double>();
            p.horizon = cfg.at("horizon").get<double>();
            p.theta = cfg.value("theta", 1.0);
            p.leak_tolerance = cfg.value("leak_tolerance", 2e-2);
            std::ostringstream name;
            name << "cell_sigma" << cell.sigma << "_nu" << cell.nu << ".csv";
            cell.file = name.str();
            try {
                const auto solution = ifpt::solve_barrier(p);
                ifpt::io::write_barrier_csv(out / cell.file, solution);
                cell.max_relerr_G = solution.max_relerr_G;
                cell.max_relerr_h = solution.max_relerr_h;
                cell.max_ibp = solution.max_ibp_resid;
                cell.b_end = solution.barrier.back();
            } catch (const std::exception& e) {
                cell.error = e.what();
            }
        }
    });

    std::ofstream summary(out / "summary.csv");
    summary << "sigma,nu,file,max_relerr_G,max_relerr_h,max_ibp_resid,b_end,error\n";
    bool any_error = false;
    for (const auto& c : cells) {
        summary << ifpt::io::format_full(c.sigma) << ',' << ifpt::io::format_full(c.nu) << ','
                << c.file << ',' << ifpt::io::format_full(c.max_relerr_G) << ','
                << ifpt::io::format_full(c.max_relerr_h) << ','
                << ifpt::io::format_full(c.max_ibp) << ',' << ifpt::io::format_full(c.b_end)
                << ',' << c.error << '\n';
        if (!c.error.empty()) any_error = true;
    }
    if (any_error)
        throw ifpt::NumericalError("grid6-cell-failure", "one or more grid cells failed; see summary.csv");
    return 0;
}

int run_mc_check(const json& cfg, const CliOverrides& cli) {
    ifpt::io::check_keys(cfg,
                         {"schema", "command", "survival", "initial_density", "kernel", "grid",
                          "lambda", "dt", "horizon", "mc"},
                         {"out", "theta", "snapshot_stride", "leak_tolerance"}, "mc-check config");
    const fs::path out = resolve_out_dir(cfg, cli);
    const auto problem = problem_from_config(cfg);
    const auto solution = ifpt::solve_barrier(problem);
    ifpt::io::write_barrier_csv(out / "barrier.csv", solution);

    const auto mc = mc_from_config(cfg.at("mc"), cli);
    const auto estimate = ifpt::survival_mc(solution, problem.density, problem.lambda,
                                            problem.kernel, problem.horizon, mc);
    ifpt::io::write_survival_estimate_csv(out / "mc_survival.csv", estimate);
    const auto taus = ifpt::sample_default_times(solution, problem.density, problem.lambda,
                                                 problem.kernel, problem.horizon, mc);
    ifpt::io::write_default_times_csv(out / "default_times.csv", taus);

    std::ofstream cmp(out / "mc_compare.csv");
    cmp << "t,S_hat,se,G_ref,abs_err\n";
    for (std::size_t i = 0; i < estimate.times.size(); ++i) {
        const double g = problem.survival.survival(estimate.times[i]);
        cmp << ifpt::io::format_full(estimate.times[i]) << ','
            << ifpt::io::format_full(estimate.mean[i]) << ','
            << ifpt::io::format_full(estimate.se[i]) << ',' << ifpt::io::format_full(g) << ','
            << ifpt::io::format_full(std::abs(estimate.mean[i] - g)) << '\n';
    }
    return 0;
}

int run_bracket(const json& cfg, const CliOverrides& cli) {
    ifpt::io::check_keys(cfg,
                         {"schema", "command", "survival", "initial_density", "grid", "lambda",
                          "dt", "horizon", "eps_list"},
                         {"out", "theta", "leak_tolerance"}, "bracket config");
    const fs::path out = resolve_out_dir(cfg, cli);
    ifpt::IfptProblem base;
    base.survival = ifpt::io::survival_from_json(cfg.at("survival"));
    base.density = ifpt::io::density_from_json(cfg.at("initial_density"));
    base.grid = ifpt::io::grid_from_json(cfg.at("grid"));
    base.kernel = ifpt::KillingKernel::fejer(64, base.grid->period()); // replaced per eps
    base.lambda = cfg.at("lambda").get<double>();
    base.dt = cfg.at("dt").get<double>();
    base.horizon = cfg.at("horizon").get<double>();
    base.theta = cfg.value("theta", 1.0);
    base.leak_tolerance = cfg.value("leak_tolerance", 2e-2);
    const auto eps_list = cfg.at("eps_list").get<std::vector<double>>();

    const auto brackets = ifpt::bracket_barriers(base, eps_list);
    std::ofstream summary(out / "bracket_summary.csv");
    summary << "eps,max_gap,min_gap\n";
    for (const auto& b : brackets) {
        std::ostringstream tag;
        tag << b.eps;
        ifpt::io::write_barrier_csv(out / ("over_eps" + tag.str() + ".csv"), b.over);
        ifpt::io::write_barrier_csv(out / ("under_eps" + tag.str() + ".csv"), b.under);
        double max_gap = -1e300, min_gap = 1e300;
        for (std::size_t i = 0; i < b.over.barrier.size(); ++i) {
            const double gap = b.under.barrier[i] - b.over.barrier[i];
            max_gap = std::max(max_gap, gap);
            min_gap = std::min(min_gap, gap);
        }
        summary << ifpt::io::format_full(b.eps) << ',' << ifpt::io::format_full(max_gap) << ','
                << ifpt::io::format_full(min_gap) << '\n';
    }
    return 0;
}

int run_calibrate(const json& cfg, const CliOverrides& cli) {
    ifpt::io::check_keys(cfg,
                         {"schema", "command", "quotes_csv", "recovery", "lambda",
                          "initial_density", "kernel", "grid", "dt"},
                         {"out", "discount_csv", "flat_rate", "h_max", "theta", "leak_tolerance"},
                         "calibrate config");
    const fs::path out = resolve_out_dir(cfg, cli);
    const auto quotes = ifpt::io::read_quotes_csv(cfg.at("quotes_csv").get<std::string>());
    ifpt::DiscountCurve discount = cfg.contains("discount_csv")
        ? ifpt::io::read_discount_csv(cfg.at("discount_csv").get<std::string>())
        : ifpt::DiscountCurve::flat(cfg.value("flat_rate", 0.0));

    ifpt::BootstrapOptions opts;
    opts.h_max = cfg.value("h_max", 10.0);
    const auto model =
        ifpt::bootstrap_hazard(quotes, discount, cfg.at("recovery").get<double>(), opts);
    {
        std::ofstream hz(out / "hazard.json");
        hz << ifpt::io::survival_to_json(model).dump(2) << '\n';
    }

    ifpt::StitchOptions stitch;
    stitch.theta = cfg.value("theta", 1.0);
    stitch.leak_tolerance = cfg.value("leak_tolerance", 2e-2);
    const auto solution = ifpt::stitch_barrier(
        model, ifpt::io::density_from_json(cfg.at("initial_density")),
        cfg.at("lambda").get<double>(), ifpt::io::kernel_from_json(cfg.at("kernel")),
        ifpt::io::grid_from_json(cfg.at("grid")), cfg.at("dt").get<double>(),
        quotes.back().maturity, stitch);
    ifpt::io::write_barrier_csv(out / "stitched_barrier.csv", solution);
    return 0;
}

int run_price(const json& cfg, const CliOverrides& cli) {
    ifpt::io::check_keys(cfg,
                         {"schema", "command", "survival", "initial_density", "kernel", "grid",
                          "lambda", "dt", "market", "payoff", "maturity", "mc"},
                         {"out", "theta", "leak_tolerance", "observed_path_csv", "observe_until"},
                         "price config");
    const fs::path out = resolve_out_dir(cfg, cli);

    json solve_cfg = cfg;
    solve_cfg["horizon"] = cfg.at("maturity");
    const auto problem = [&] {
        ifpt::IfptProblem p;
        p.survival = ifpt::io::survival_from_json(cfg.at("survival"));
        p.density = ifpt::io::density_from_json(cfg.at("initial_density"));
        p.kernel = ifpt::io::kernel_from_json(cfg.at("kernel"));
        p.grid = ifpt::io::grid_from_json(cfg.at("grid"));
        p.lambda = cfg.at("lambda").get<double>();
        p.dt = cfg.at("dt").get<double>();
        p.horizon = cfg.at("maturity").get<double>();
        p.theta = cfg.value("theta", 1.0);
        p.leak_tolerance = cfg.value("leak_tolerance", 2e-2);
        return p;
    }();
    const auto solution = ifpt::solve_barrier(problem);

    const json& mj = cfg.at("market");
    ifpt::io::check_keys(mj, {"spot", "drift", "vol", "corr"}, {}, "market");
    ifpt::MarketModel market{mj.at("spot").get<double>(), mj.at("drift").get<double>(),
                             mj.at("vol").get<double>(), mj.at("corr").get<double>()};

    const json& pj = cfg.at("payoff");
    ifpt::io::check_keys(pj, {"kind"}, {"strike"}, "payoff");
    const std::string kind = pj.at("kind").get<std::string>();
    ifpt::PayoffSpec payoff;
    if (kind == "unit") payoff = ifpt::PayoffSpec::unit();
    else if (kind == "call") payoff = ifpt::PayoffSpec::call(pj.at("strike").get<double>());
    else if (kind == "put") payoff = ifpt::PayoffSpec::put(pj.at("strike").get<double>());
    else if (kind == "digital") payoff = ifpt::PayoffSpec::digital(pj.at("strike").get<double>());
    else throw ifpt::InvalidParameter("payoff: unknown kind '" + kind + "'");

    const auto mc = mc_from_config(cfg.at("mc"), cli);
    const double maturity = cfg.at("maturity").get<double>();

    ifpt::PriceResult result;
    if (cfg.contains("observed_path_csv")) {
        std::vector<double> ts, xs;
        ifpt::io::read_observed_path_csv(cfg.at("observed_path_csv").get<std::string>(), ts, xs);
        const double t_obs = cfg.value("observe_until", ts.empty() ? 0.0 : ts.back());
        result = ifpt::conditional_price(solution, problem.density, problem.lambda, problem.kernel,
                                         market, payoff, ts, xs, t_obs, maturity, mc);
    } else {
        result = ifpt::price_claim(solution, problem.density, problem.lambda, problem.kernel,
                                   market, payoff, maturity, mc);
    }

    json rj{{"price", result.price}, {"se", result.se}, {"paths", result.paths}};
    std::ofstream pr(out / "price.json");
    pr << rj.dump(2) << '\n';
    return 0;
}

int dispatch(const CliOverrides& cli) {
    const json cfg = load_config(cli.config_path);
    if (!cfg.contains("command"))
        throw ifpt::InvalidParameter("config: missing \"command\"");
    const std::string cmd = cfg.at("command").get<std::string>();
    if (cmd == "solve") return run_solve(cfg, cli);
    if (cmd == "grid6") return run_grid6(cfg, cli);
    if (cmd == "mc-check") return run_mc_check(cfg, cli);
    if (cmd == "bracket") return run_bracket(cfg, cli);
    if (cmd == "calibrate") return run_calibrate(cfg, cli);
    if (cmd == "price") return run_price(cfg, cli);
    throw ifpt::InvalidParameter("config: unknown command '" + cmd + "'");
}

void emit_error(const CliOverrides& cli, const std::string& code, const std::string& message) {
    json err{{"error", {{"code", code}, {"message", message}}}};
    std::cerr << err.dump() << std::endl;
    try {
        if (!cli.out_dir.empty()) {
            fs::create_directories(cli.out_dir);
            std::ofstream out(fs::path(cli.out_dir) / "error.json");
            out << err.dump(2) << '\n';
        }
    } catch (...) {
        // stderr already carries the payload
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Smoothed inverse first-passage-time barrier toolkit"};
    CliOverrides cli;
    app.add_option("--config", cli.config_path, "JSON run configuration")->required();
    app.add_option("--out", cli.out_dir, "output directory (overrides config)");
    std::uint64_t seed_opt = 0;
    auto* seed_flag = app.add_option("--seed", seed_opt, "Monte Carlo seed override");
    app.add_option("--threads", cli.threads, "worker threads for independent cells/paths");
    CLI11_PARSE(app, argc, argv);
    if (*seed_flag) cli.seed = seed_opt;

    try {
        return dispatch(cli);
    } catch (const ifpt::NumericalError& e) {
        emit_error(cli, e.code(), e.what());
        return 3;
    } catch (const ifpt::InvalidParameter& e) {
        emit_error(cli, "invalid-parameter", e.what());
        return 2;
    } catch (const ifpt::IncompatibleGrid& e) {
        emit_error(cli, "incompatible-grid", e.what());
        return 2;
    } catch (const json::exception& e) {
        emit_error(cli, "config-parse", e.what());
        return 2;
    } catch (const std::exception& e) {
        emit_error(cli, "internal", e.what());
        return 3;
    }
}
