#include "ifpt/survival.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ifpt {

SurvivalModel SurvivalModel::exponential(double nu) {
    if (!(nu > 0.0))
        throw InvalidParameter("exponential survival: rate must be positive");
    SurvivalModel m;
    m.kind_ = SurvivalKind::exponential;
    m.nu_ = nu;
    return m;
}

SurvivalModel SurvivalModel::piecewise_hazard(std::vector<std::pair<double, double>> knots) {
    if (knots.empty())
        throw InvalidParameter("piecewise hazard: need at least one knot");
    if (knots.front().first != 0.0)
        throw InvalidParameter("piecewise hazard: first knot must be at t = 0");
    for (std::size_t j = 0; j < knots.size(); ++j) {
        if (!(knots[j].second > 0.0))
            throw InvalidParameter("piecewise hazard: rates must be positive");
        if (j > 0 && !(knots[j].first > knots[j - 1].first))
            throw InvalidParameter("piecewise hazard: knot times must be strictly increasing");
    }
    SurvivalModel m;
    m.kind_ = SurvivalKind::piecewise_hazard;
    m.knots_ = std::move(knots);
    m.cumulative_.resize(m.knots_.size(), 0.0);
    for (std::size_t j = 1; j < m.knots_.size(); ++j)
        m.cumulative_[j] = m.cumulative_[j - 1] +
                           m.knots_[j - 1].second * (m.knots_[j].first - m.knots_[j - 1].first);
    return m;
}

SurvivalModel SurvivalModel::tabulated(std::vector<double> times, std::vector<double> survival) {
    const std::size_t n = times.size();
    if (n < 3 || survival.size() != n)
        throw InvalidParameter("tabulated survival: need >= 3 matching points");
    if (times.front() != 0.0 || std::abs(survival.front() - 1.0) > 1e-12)
        throw InvalidParameter("tabulated survival: must start at (0, 1)");
    for (std::size_t i = 0; i < n; ++i) {
        if (!(survival[i] > 0.0) || survival[i] > 1.0)
            throw InvalidParameter("tabulated survival: values must lie in (0, 1]");
        if (i > 0 && (!(times[i] > times[i - 1]) || !(survival[i] < survival[i - 1])))
            throw InvalidParameter("tabulated survival: times increasing, survival decreasing");
    }
    SurvivalModel m;
    m.kind_ = SurvivalKind::tabulated;
    m.tab_t_ = std::move(times);
    m.tab_y_.resize(n);
    for (std::size_t i = 0; i < n; ++i) m.tab_y_[i] = std::log(survival[i]);

    // natural cubic spline second derivatives (tridiagonal solve)
    std::vector<double> a(n, 0.0), b(n, 0.0), c(n, 0.0), d(n, 0.0);
    b[0] = 1.0;
    b[n - 1] = 1.0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double hl = m.tab_t_[i] - m.tab_t_[i - 1];
        const double hr = m.tab_t_[i + 1] - m.tab_t_[i];
        a[i] = hl / 6.0;
        b[i] = (hl + hr) / 3.0;
        c[i] = hr / 6.0;
        d[i] = (m.tab_y_[i + 1] - m.tab_y_[i]) / hr - (m.tab_y_[i] - m.tab_y_[i - 1]) / hl;
    }
    for (std::size_t i = 1; i < n; ++i) {
        const double w = a[i] / b[i - 1];
        b[i] -= w * c[i - 1];
        d[i] -= w * d[i - 1];
    }
    m.tab_m_.resize(n);
    m.tab_m_[n - 1] = d[n - 1] / b[n - 1];
    for (std::size_t i = n - 1; i-- > 0;)
        m.tab_m_[i] = (d[i] - c[i] * m.tab_m_[i + 1]) / b[i];
    return m;
}

double SurvivalModel::log_survival(double t) const {
    switch (kind_) {
    case SurvivalKind::exponential:
        return -nu_ * t;
    case SurvivalKind::piecewise_hazard: {
        auto it = std::upper_bound(knots_.begin(), knots_.end(), t,
                                   [](double v, const auto& k) { return v < k.first; });
        const std::size_t j = it == knots_.begin() ? 0 : static_cast<std::size_t>(it - knots_.begin()) - 1;
        return -(cumulative_[j] + knots_[j].second * (t - knots_[j].first));
    }
    case SurvivalKind::tabulated: {
        const std::size_t n = tab_t_.size();
        if (t >= tab_t_[n - 1]) {
            const double h = tab_t_[n - 1] - tab_t_[n - 2];
            const double slope = (tab_y_[n - 1] - tab_y_[n - 2]) / h + h / 6.0 * (2.0 * tab_m_[n - 1] + tab_m_[n - 2]);
            return tab_y_[n - 1] + slope * (t - tab_t_[n - 1]);
        }
        auto it = std::upper_bound(tab_t_.begin(), tab_t_.end(), t);
        const std::size_t i = it == tab_t_.begin() ? 1 : static_cast<std::size_t>(it - tab_t_.begin());
        const double h = tab_t_[i] - tab_t_[i - 1];
        const double xa = (tab_t_[i] - t) / h;
        const double xb = (t - tab_t_[i - 1]) / h;
        return xa * tab_y_[i - 1] + xb * tab_y_[i] +
               ((xa * xa * xa - xa) * tab_m_[i - 1] + (xb * xb * xb - xb) * tab_m_[i]) * h * h / 6.0;
    }
    }
    return 0.0;
}

double SurvivalModel::log_survival_d1(double t) const {
    switch (kind_) {
    case SurvivalKind::exponential:
        return -nu_;
    case SurvivalKind::piecewise_hazard: {
        auto it = std::upper_bound(knots_.begin(), knots_.end(), t,
                                   [](double v, const auto& k) { return v < k.first; });
        const std::size_t j = it == knots_.begin() ? 0 : static_cast<std::size_t>(it - knots_.begin()) - 1;
        return -knots_[j].second;
    }
    case SurvivalKind::tabulated: {
        const std::size_t n = tab_t_.size();
        if (t >= tab_t_[n - 1]) {
            const double h = tab_t_[n - 1] - tab_t_[n - 2];
            return (tab_y_[n - 1] - tab_y_[n - 2]) / h + h / 6.0 * (2.0 * tab_m_[n - 1] + tab_m_[n - 2]);
        }
        auto it = std::upper_bound(tab_t_.begin(), tab_t_.end(), t);
        const std::size_t i = it == tab_t_.begin() ? 1 : static_cast<std::size_t>(it - tab_t_.begin());
        const double h = tab_t_[i] - tab_t_[i - 1];
        const double xa = (tab_t_[i] - t) / h;
        const double xb = (t - tab_t_[i - 1]) / h;
        return (tab_y_[i] - tab_y_[i - 1]) / h +
               (-(3.0 * xa * xa - 1.0) * tab_m_[i - 1] + (3.0 * xb * xb - 1.0) * tab_m_[i]) * h / 6.0;
    }
    }
    return 0.0;
}

double SurvivalModel::log_survival_d2(double t) const {
    switch (kind_) {
    case SurvivalKind::exponential:
    case SurvivalKind::piecewise_hazard:
        return 0.0;
    case SurvivalKind::tabulated: {
        const std::size_t n = tab_t_.size();
        if (t >= tab_t_[n - 1]) return 0.0;
        auto it = std::upper_bound(tab_t_.begin(), tab_t_.end(), t);
        const std::size_t i = it == tab_t_.begin() ? 1 : static_cast<std::size_t>(it - tab_t_.begin());
        const double h = tab_t_[i] - tab_t_[i - 1];
        const double xa = (tab_t_[i] - t) / h;
        const double xb = (t - tab_t_[i - 1]) / h;
        return xa * tab_m_[i - 1] + xb * tab_m_[i];
    }
    }
    return 0.0;
}

double SurvivalModel::survival(double t) const { return std::exp(log_survival(t)); }

double SurvivalModel::survival_deriv(double t) const {
    return log_survival_d1(t) * survival(t);
}

double SurvivalModel::survival_deriv2(double t) const {
    const double l1 = log_survival_d1(t);
    return (log_survival_d2(t) + l1 * l1) * survival(t);
}

SurvivalModel SurvivalModel::conditional(double t0) const {
    if (t0 < 0.0)
        throw InvalidParameter("conditional: t0 must be nonnegative");
    switch (kind_) {
    case SurvivalKind::exponential:
        return *this; // memoryless
    case SurvivalKind::piecewise_hazard: {
        std::vector<std::pair<double, double>> shifted;
        shifted.emplace_back(0.0, 0.0);
        for (const auto& [tj, hj] : knots_) {
            if (tj <= t0)
                shifted.front().second = hj;
            else
                shifted.emplace_back(tj - t0, hj);
        }
        if (shifted.front().second == 0.0)
            shifted.front().second = knots_.back().second;
        return piecewise_hazard(std::move(shifted));
    }
    case SurvivalKind::tabulated:
        throw InvalidParameter("conditional: not supported for tabulated models");
    }
    throw InvalidParameter("conditional: unknown kind");
}

HazardBoundReport check_hazard_bound(const SurvivalModel& model, double lambda,
                                     double horizon, int n_samples) {
    if (!(lambda > 0.0) || !(horizon > 0.0) || n_samples < 2)
        throw InvalidParameter("check_hazard_bound: need lambda > 0, horizon > 0, n_samples >= 2");
    std::vector<double> ts;
    ts.reserve(static_cast<std::size_t>(n_samples) + 2 * model.knots().size());
    for (int i = 0; i < n_samples; ++i)
        ts.push_back(horizon * i / (n_samples - 1));
    for (const auto& [tj, hj] : model.knots()) {
        (void)hj;
        if (tj > 0.0 && tj < horizon) {
            ts.push_back(tj);
            ts.push_back(std::nextafter(tj, horizon));
        }
    }
    std::sort(ts.begin(), ts.end());

    HazardBoundReport report;
    report.worst_margin = std::numeric_limits<double>::infinity();
    for (double t : ts) {
        const double G = model.survival(t);
        const double g = model.survival_deriv(t);
        const double margin = std::min(-g, lambda * G + g);
        if (margin < report.worst_margin) {
            report.worst_margin = margin;
            report.argmin_t = t;
        }
    }
    report.ok = report.worst_margin > 0.0;
    return report;
}

InitialDensity InitialDensity::gaussian(double mean, double sigma) {
    if (!(sigma > 0.0))
        throw InvalidParameter("gaussian density: sigma must be positive");
    InitialDensity d;
    d.gaussian_ = true;
    d.mean_ = mean;
    d.sigma_ = sigma;
    return d;
}

InitialDensity InitialDensity::from_field(Field samples) {
    InitialDensity d;
    d.gaussian_ = false;
    d.field_grid_ = samples.grid();
    d.field_values_ = std::move(samples.values());
    return d;
}

double InitialDensity::value(double x) const {
    if (!gaussian_)
        throw InvalidParameter("InitialDensity::value: field-backed density is not analytic");
    const double z = (x - mean_) / sigma_;
    return std::exp(-0.5 * z * z) / (sigma_ * std::sqrt(2.0 * std::numbers::pi));
}

double InitialDensity::deriv(double x) const {
    const double z = (x - mean_) / sigma_;
    return -z / sigma_ * value(x);
}

double InitialDensity::deriv2(double x) const {
    const double z = (x - mean_) / sigma_;
    return (z * z - 1.0) / (sigma_ * sigma_) * value(x);
}

Field InitialDensity::sample(const GridPtr& grid) const {
    if (gaussian_) {
        Field f = Field::zeros(grid);
        for (int i = 0; i < grid->size(); ++i) f[i] = value(grid->node(i));
        return f;
    }
    if (field_grid_->size() != grid->size() || field_grid_->period() != grid->period())
        throw IncompatibleGrid("InitialDensity: field-backed density lives on a different grid");
    return Field(grid, field_values_);
}

} // namespace ifpt
