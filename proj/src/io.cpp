#include "ifpt/io.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace ifpt::io {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream stream(line);
    while (std::getline(stream, cell, sep)) out.push_back(cell);
    return out;
}

double parse_double(const std::string& s, const std::string& context) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
        if (pos != s.size())
            throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw InvalidParameter(context + ": cannot parse number '" + s + "'");
    }
}

std::vector<double> parse_list(const std::string& s, const std::string& context) {
    std::vector<double> out;
    for (const auto& item : split(s, ';'))
        out.push_back(parse_double(item, context));
    return out;
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw InvalidParameter("cannot open input file " + path.string());
    return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw InvalidParameter("cannot open output file " + path.string());
    return out;
}

} // namespace

void check_keys(const json& obj, std::initializer_list<const char*> required,
                std::initializer_list<const char*> optional, const std::string& context) {
    if (!obj.is_object())
        throw InvalidParameter(context + ": expected a JSON object");
    std::set<std::string> allowed;
    for (const char* k : required) {
        if (!obj.contains(k))
            throw InvalidParameter(context + ": missing key '" + k + "'");
        allowed.insert(k);
    }
    for (const char* k : optional) allowed.insert(k);
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (!allowed.count(key))
            throw InvalidParameter(context + ": unknown key '" + key + "'");
    }
}

SurvivalModel survival_from_json(const json& j) {
    check_keys(j, {"kind"}, {"nu", "knots", "points"}, "survival");
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "exponential") {
        check_keys(j, {"kind", "nu"}, {}, "survival");
        return SurvivalModel::exponential(j.at("nu").get<double>());
    }
    if (kind == "piecewise") {
        check_keys(j, {"kind", "knots"}, {}, "survival");
        std::vector<std::pair<double, double>> knots;
        for (const auto& k : j.at("knots"))
            knots.emplace_back(k.at(0).get<double>(), k.at(1).get<double>());
        return SurvivalModel::piecewise_hazard(std::move(knots));
    }
    if (kind == "tabulated") {
        check_keys(j, {"kind", "points"}, {}, "survival");
        std::vector<double> ts, gs;
        for (const auto& p : j.at("points")) {
            ts.push_back(p.at(0).get<double>());
            gs.push_back(p.at(1).get<double>());
        }
        return SurvivalModel::tabulated(std::move(ts), std::move(gs));
    }
    throw InvalidParameter("survival: unknown kind '" + kind + "'");
}

json survival_to_json(const SurvivalModel& model) {
    json j;
    switch (model.kind()) {
    case SurvivalKind::exponential:
        j["kind"] = "exponential";
        j["nu"] = model.rate();
        break;
    case SurvivalKind::piecewise_hazard: {
        j["kind"] = "piecewise";
        json knots = json::array();
        for (const auto& [t, h] : model.knots()) knots.push_back({t, h});
        j["knots"] = std::move(knots);
        break;
    }
    case SurvivalKind::tabulated:
        throw InvalidParameter("survival_to_json: tabulated models are not serialized");
    }
    return j;
}

InitialDensity density_from_json(const json& j) {
    check_keys(j, {"kind"}, {"mean", "sigma"}, "initial_density");
    const std::string kind = j.at("kind").get<std::string>();
    if (kind != "gaussian")
        throw InvalidParameter("initial_density: unknown kind '" + kind + "'");
    check_keys(j, {"kind", "sigma"}, {"mean"}, "initial_density");
    const double mean = j.value("mean", 0.0);
    return InitialDensity::gaussian(mean, j.at("sigma").get<double>());
}

KillingKernel kernel_from_json(const json& j) {
    check_keys(j, {"type"}, {"order", "period", "eps", "side"}, "kernel");
    const std::string type = j.at("type").get<std::string>();
    if (type == "fejer") {
        check_keys(j, {"type", "order", "period"}, {}, "kernel");
        return KillingKernel::fejer(j.at("order").get<int>(), j.at("period").get<double>());
    }
    if (type == "mollifier") {
        check_keys(j, {"type", "eps", "period"}, {"side"}, "kernel");
        const MollifierPair pair =
            build_mollifier_pair(j.at("eps").get<double>(), j.at("period").get<double>());
        const std::string side = j.value("side", "over");
        if (side == "over") return pair.over;
        if (side == "under") return pair.under;
        throw InvalidParameter("kernel: mollifier side must be 'over' or 'under'");
    }
    throw InvalidParameter("kernel: unknown type '" + type + "'");
}

GridPtr grid_from_json(const json& j) {
    check_keys(j, {"n", "period"}, {}, "grid");
    return make_grid(j.at("n").get<int>(), j.at("period").get<double>());
}

std::string format_full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_barrier_csv(const std::filesystem::path& path, const BarrierSolution& solution) {
    auto out = open_output(path);
    out << "t,b,bprime,G_ref,G_num,relerr_G,h_ref,h_num,relerr_h,ibp_resid,boundary_mass\n";
    for (const auto& r : solution.diagnostics) {
        out << format_full(r.t) << ',' << format_full(r.b) << ',' << format_full(r.bprime) << ','
            << format_full(r.G_ref) << ',' << format_full(r.G_num) << ','
            << format_full(r.relerr_G) << ',' << format_full(r.h_ref) << ','
            << format_full(r.h_num) << ',' << format_full(r.relerr_h) << ','
            << format_full(r.ibp_resid) << ',' << format_full(r.boundary_mass) << '\n';
    }
}

void write_snapshots(const std::filesystem::path& dir, const BarrierSolution& solution) {
    for (const auto& [step, field] : solution.snapshots) {
        auto out = open_output(dir / ("u_" + std::to_string(step) + ".csv"));
        out << "x,u\n";
        for (int i = 0; i < field.size(); ++i)
            out << format_full(field.grid()->node(i)) << ',' << format_full(field[i]) << '\n';
    }
}

void write_survival_estimate_csv(const std::filesystem::path& path, const SurvivalEstimate& estimate) {
    auto out = open_output(path);
    out << "t,S_hat,se\n";
    for (std::size_t i = 0; i < estimate.times.size(); ++i)
        out << format_full(estimate.times[i]) << ',' << format_full(estimate.mean[i]) << ','
            << format_full(estimate.se[i]) << '\n';
}

void write_default_times_csv(const std::filesystem::path& path,
                             const std::vector<DefaultTimeSample>& samples) {
    auto out = open_output(path);
    out << "tau,censored\n";
    for (const auto& s : samples)
        out << format_full(s.tau) << ',' << (s.censored ? 1 : 0) << '\n';
}

std::vector<CdsQuote> read_quotes_csv(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::string line;
    if (!std::getline(in, line) || split(line, ',').size() != 6)
        throw InvalidParameter("quotes CSV: expected header j,T,upfront,running,payment_times,accruals");
    std::vector<CdsQuote> quotes;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != 6)
            throw InvalidParameter("quotes CSV: expected 6 columns, got line '" + line + "'");
        CdsQuote q;
        q.index = static_cast<int>(parse_double(cells[0], "quotes CSV"));
        q.maturity = parse_double(cells[1], "quotes CSV");
        q.upfront = parse_double(cells[2], "quotes CSV");
        q.running = parse_double(cells[3], "quotes CSV");
        q.payment_times = parse_list(cells[4], "quotes CSV");
        q.accruals = parse_list(cells[5], "quotes CSV");
        quotes.push_back(std::move(q));
    }
    if (quotes.empty())
        throw InvalidParameter("quotes CSV: no quotes");
    return quotes;
}

DiscountCurve read_discount_csv(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::string line;
    if (!std::getline(in, line) || split(line, ',').size() != 2)
        throw InvalidParameter("discount CSV: expected header t,p0");
    std::vector<double> ts, ps;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != 2)
            throw InvalidParameter("discount CSV: expected 2 columns, got line '" + line + "'");
        ts.push_back(parse_double(cells[0], "discount CSV"));
        ps.push_back(parse_double(cells[1], "discount CSV"));
    }
    return DiscountCurve::from_table(std::move(ts), std::move(ps));
}

void read_observed_path_csv(const std::filesystem::path& path, std::vector<double>& times,
                            std::vector<double>& prices) {
    auto in = open_input(path);
    std::string line;
    if (!std::getline(in, line) || split(line, ',').size() != 2)
        throw InvalidParameter("observed path CSV: expected header t,X");
    times.clear();
    prices.clear();
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != 2)
            throw InvalidParameter("observed path CSV: expected 2 columns, got line '" + line + "'");
        times.push_back(parse_double(cells[0], "observed path CSV"));
        prices.push_back(parse_double(cells[1], "observed path CSV"));
    }
}

} // namespace ifpt::io
