#include "ifpt/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

namespace ifpt {

namespace {

constexpr double kPi = std::numbers::pi;

double wrap_to_period(double x, double period) {
    double w = x - period * std::floor(x / period + 0.5);
    if (w >= 0.5 * period) w -= period; // guard against rounding at the seam
    return w;
}

// Raw bump exp(-1/(w(1-w))) on (0,1) and its first two derivatives.
double raw_bump(double w) {
    if (w <= 0.0 || w >= 1.0) return 0.0;
    return std::exp(-1.0 / (w * (1.0 - w)));
}

double raw_bump_d1(double w) {
    if (w <= 0.0 || w >= 1.0) return 0.0;
    const double p = w * (1.0 - w);
    return (1.0 - 2.0 * w) / (p * p) * raw_bump(w);
}

double raw_bump_d2(double w) {
    if (w <= 0.0 || w >= 1.0) return 0.0;
    const double p = w * (1.0 - w);
    const double q = 1.0 - 2.0 * w;
    const double inv2 = 1.0 / (p * p);
    const double term = -2.0 * inv2 - 2.0 * q * q * inv2 / p + q * q * inv2 * inv2;
    return term * raw_bump(w);
}

struct BumpTable {
    double integral = 0.0;
    std::vector<double> cumulative; // cumulative integral of raw bump at i/n
    int n = 1 << 16;

    BumpTable() {
        cumulative.resize(static_cast<std::size_t>(n) + 1, 0.0);
        const double h = 1.0 / n;
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            const double a = i * h;
            const double b = (i + 1) * h;
            acc += h / 6.0 * (raw_bump(a) + 4.0 * raw_bump(0.5 * (a + b)) + raw_bump(b));
            cumulative[static_cast<std::size_t>(i) + 1] = acc;
        }
        integral = acc;
    }

    double tail(double s) const {
        if (s <= 0.0) return 1.0;
        if (s >= 1.0) return 0.0;
        const double pos = s * n;
        const int i = std::min(static_cast<int>(pos), n - 1);
        const double frac = pos - i;
        const double c = cumulative[static_cast<std::size_t>(i)] +
                         frac * (cumulative[static_cast<std::size_t>(i) + 1] -
                                 cumulative[static_cast<std::size_t>(i)]);
        return 1.0 - c / integral;
    }
};

const BumpTable& bump_table() {
    static const BumpTable table;
    return table;
}

} // namespace

double mollifier_bump(double w) { return raw_bump(w) / bump_table().integral; }

double mollifier_bump_tail(double s) { return bump_table().tail(s); }

KillingKernel KillingKernel::fejer(int order, double period) {
    if (order < 1)
        throw InvalidParameter("fejer: order must be >= 1");
    if (!(period > 0.0))
        throw InvalidParameter("fejer: period must be positive");
    KillingKernel k;
    k.period_ = period;
    k.order_ = order;
    k.mean_ = 0.5;
    k.cos_coef_.assign(static_cast<std::size_t>(order), 0.0);
    k.sin_coef_.assign(static_cast<std::size_t>(order), 0.0);
    // indicator of {x<0} on [-L/2, L/2): 1/2 - sum_{k odd} (2/(pi k)) sin(2 pi k x / L);
    // Cesaro weights (1 - k/(m+1)) keep harmonics 1..m.
    for (int j = 1; j <= order; j += 2) {
        const double w = 1.0 - static_cast<double>(j) / (order + 1);
        k.sin_coef_[static_cast<std::size_t>(j) - 1] = -w * 2.0 / (kPi * j);
    }
    k.finalize_metrics();
    return k;
}

KillingKernel KillingKernel::from_profile(double period,
                                          std::function<double(double)> value,
                                          std::function<double(double)> d1,
                                          std::function<double(double)> d2,
                                          std::function<double(double)> d3) {
    if (!(period > 0.0))
        throw InvalidParameter("from_profile: period must be positive");
    if (!value || !d1 || !d2)
        throw InvalidParameter("from_profile: value, d1 and d2 callbacks are required");
    KillingKernel k;
    k.period_ = period;
    k.order_ = 0;
    k.has_profile_ = true;
    k.profile_value_ = std::move(value);
    k.profile_d1_ = std::move(d1);
    k.profile_d2_ = std::move(d2);
    k.profile_d3_ = std::move(d3);
    k.finalize_metrics();
    return k;
}

double KillingKernel::value(double x) const {
    const double w = wrap_to_period(x, period_);
    if (has_profile_) return profile_value_(w);
    const double theta = 2.0 * kPi * w / period_;
    const std::complex<double> rot(std::cos(theta), std::sin(theta));
    std::complex<double> z = rot;
    double acc = mean_;
    for (std::size_t k = 0; k < sin_coef_.size(); ++k) {
        acc += cos_coef_[k] * z.real() + sin_coef_[k] * z.imag();
        z *= rot;
    }
    return acc;
}

double KillingKernel::deriv(double x) const {
    const double w = wrap_to_period(x, period_);
    if (has_profile_) return profile_d1_(w);
    const double omega = 2.0 * kPi / period_;
    const double theta = omega * w;
    const std::complex<double> rot(std::cos(theta), std::sin(theta));
    std::complex<double> z = rot;
    double acc = 0.0;
    for (std::size_t k = 0; k < sin_coef_.size(); ++k) {
        const double kw = omega * static_cast<double>(k + 1);
        acc += kw * (-cos_coef_[k] * z.imag() + sin_coef_[k] * z.real());
        z *= rot;
    }
    return acc;
}

double KillingKernel::deriv2(double x) const {
    const double w = wrap_to_period(x, period_);
    if (has_profile_) return profile_d2_(w);
    const double omega = 2.0 * kPi / period_;
    const double theta = omega * w;
    const std::complex<double> rot(std::cos(theta), std::sin(theta));
    std::complex<double> z = rot;
    double acc = 0.0;
    for (std::size_t k = 0; k < sin_coef_.size(); ++k) {
        const double kw = omega * static_cast<double>(k + 1);
        acc -= kw * kw * (cos_coef_[k] * z.real() + sin_coef_[k] * z.imag());
        z *= rot;
    }
    return acc;
}

double KillingKernel::deriv3(double x) const {
    const double w = wrap_to_period(x, period_);
    if (has_profile_) {
        if (profile_d3_) return profile_d3_(w);
        const double h = 1e-5 * period_;
        return (profile_d2_(wrap_to_period(w + h, period_)) -
                profile_d2_(wrap_to_period(w - h, period_))) / (2.0 * h);
    }
    const double omega = 2.0 * kPi / period_;
    const double theta = omega * w;
    const std::complex<double> rot(std::cos(theta), std::sin(theta));
    std::complex<double> z = rot;
    double acc = 0.0;
    for (std::size_t k = 0; k < sin_coef_.size(); ++k) {
        const double kw = omega * static_cast<double>(k + 1);
        acc += kw * kw * kw * (cos_coef_[k] * z.imag() - sin_coef_[k] * z.real());
        z *= rot;
    }
    return acc;
}

void KillingKernel::finalize_metrics() {
    const int n = std::max(8192, 32 * std::max(order_, 1));
    const double dx = period_ / n;

    std::vector<double> right(static_cast<std::size_t>(n / 2), 0.0); // |psi| on (0, L/2)
    for (int i = 0; i < n / 2; ++i)
        right[static_cast<std::size_t>(i)] = std::abs(value((i + 0.5) * dx));

    // smallest h with the ripple on [h, L/2 - h] below a fixed clip level;
    // by the symmetry psi(x) + psi(-x) = 1 the left window follows.
    const double clip_level = 1e-2;
    auto window_max = [&](int start) {
        const int stop = n / 2 - start; // index of L/2 - h
        double mx = 0.0;
        for (int i = start; i < stop; ++i)
            mx = std::max(mx, right[static_cast<std::size_t>(i)]);
        return mx;
    };
    int lo = 0, hi = n / 4;
    if (window_max(hi) > clip_level) {
        half_width_ = 0.25 * period_;
        clip_tol_ = window_max(hi);
    } else {
        while (hi - lo > 1) {
            const int mid = (lo + hi) / 2;
            if (window_max(mid) <= clip_level)
                hi = mid;
            else
                lo = mid;
        }
        half_width_ = (hi + 0.5) * dx;
        clip_tol_ = window_max(hi);
    }

    double sup1 = 0.0, sup2 = 0.0, sup3 = 0.0, tv = 0.0, phi_l1 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = -0.5 * period_ + (i + 0.5) * dx;
        const double v = value(x);
        const double d1 = deriv(x);
        sup1 = std::max(sup1, std::abs(d1));
        sup2 = std::max(sup2, std::abs(deriv2(x)));
        sup3 = std::max(sup3, std::abs(deriv3(x)));
        tv += std::abs(d1) * dx;
        phi_l1 += std::abs(v * v - v) * dx;
    }
    norms_ = KernelNorms{sup1, sup2, sup3, tv, phi_l1};
}

ShiftedKernelFields KillingKernel::eval_shifted(const GridPtr& grid, double shift) const {
    if (std::abs(grid->period() - period_) > 1e-12 * period_)
        throw IncompatibleGrid("eval_shifted: kernel period differs from grid period");
    const int n = grid->size();
    Field psi = Field::zeros(grid);
    Field psi_x = Field::zeros(grid);
    Field psi_xx = Field::zeros(grid);
    Field phi = Field::zeros(grid);

    if (has_profile_) {
        for (int i = 0; i < n; ++i) {
            const double w = wrap_to_period(grid->node(i) - shift, period_);
            const double v = profile_value_(w);
            psi[i] = v;
            psi_x[i] = profile_d1_(w);
            psi_xx[i] = profile_d2_(w);
            phi[i] = v * v - v;
        }
        return {std::move(psi), std::move(psi_x), std::move(psi_xx), std::move(phi)};
    }

    const double omega = 2.0 * kPi / period_;
    const std::size_t m = sin_coef_.size();
    for (int i = 0; i < n; ++i) {
        const double theta = omega * (grid->node(i) - shift);
        const std::complex<double> rot(std::cos(theta), std::sin(theta));
        std::complex<double> z = rot;
        double v = mean_, d1 = 0.0, d2 = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            const double c = z.real();
            const double s = z.imag();
            const double kw = omega * static_cast<double>(k + 1);
            v += cos_coef_[k] * c + sin_coef_[k] * s;
            d1 += kw * (sin_coef_[k] * c - cos_coef_[k] * s);
            d2 -= kw * kw * (cos_coef_[k] * c + sin_coef_[k] * s);
            z *= rot;
        }
        psi[i] = v;
        psi_x[i] = d1;
        psi_xx[i] = d2;
        phi[i] = v * v - v;
    }
    return {std::move(psi), std::move(psi_x), std::move(psi_xx), std::move(phi)};
}

std::vector<double> KillingKernel::lookup_table(int size) const {
    std::vector<double> out(static_cast<std::size_t>(size));
    const double dx = period_ / size;
    for (int i = 0; i < size; ++i)
        out[static_cast<std::size_t>(i)] = value(-0.5 * period_ + i * dx);
    return out;
}

MollifierPair build_mollifier_pair(double eps, double period) {
    if (!(eps > 0.0))
        throw InvalidParameter("build_mollifier_pair: eps must be positive");
    if (!(eps < 0.25 * period))
        throw InvalidParameter("build_mollifier_pair: eps must be small compared to the period");

    const double L = period;
    // over: 1 on [-L/2+eps, 0], ramp T(x/eps) on [0, eps], 0 on [eps, L/2-?],
    // mirrored rise near the wrap at -L/2; under is over shifted left by eps.
    auto over_value = [eps, L](double x) {
        if (x >= 0.0) {
            if (x <= eps) return bump_table().tail(x / eps);
            return 0.0;
        }
        const double s = x + 0.5 * L;
        if (s <= eps && s >= 0.0) return 1.0 - bump_table().tail(s / eps);
        return 1.0;
    };
    auto over_d1 = [eps, L](double x) {
        if (x >= 0.0 && x <= eps) return -mollifier_bump(x / eps) / eps;
        const double s = x + 0.5 * L;
        if (s >= 0.0 && s <= eps) return mollifier_bump(s / eps) / eps;
        return 0.0;
    };
    const double I = bump_table().integral;
    auto over_d2 = [eps, L, I](double x) {
        if (x >= 0.0 && x <= eps) return -raw_bump_d1(x / eps) / (I * eps * eps);
        const double s = x + 0.5 * L;
        if (s >= 0.0 && s <= eps) return raw_bump_d1(s / eps) / (I * eps * eps);
        return 0.0;
    };
    auto over_d3 = [eps, L, I](double x) {
        if (x >= 0.0 && x <= eps) return -raw_bump_d2(x / eps) / (I * eps * eps * eps);
        const double s = x + 0.5 * L;
        if (s >= 0.0 && s <= eps) return raw_bump_d2(s / eps) / (I * eps * eps * eps);
        return 0.0;
    };

    // under shares over's wrap ramp and shifts only the central ramp to
    // [-eps, 0]; that keeps under <= over on the whole circle and
    // under <= 1{x<=0} everywhere, so the barrier ordering is structural.
    auto under_value = [eps, L](double x) {
        if (x >= 0.0) return 0.0;
        const double s = x + 0.5 * L;
        if (s >= 0.0 && s <= eps) return 1.0 - bump_table().tail(s / eps);
        if (x >= -eps) return bump_table().tail((x + eps) / eps);
        return 1.0;
    };
    auto under_d1 = [eps, L](double x) {
        if (x >= 0.0) return 0.0;
        const double s = x + 0.5 * L;
        if (s >= 0.0 && s <= eps) return mollifier_bump(s / eps) / eps;
        if (x >= -eps) return -mollifier_bump((x + eps) / eps) / eps;
        return 0.0;
    };
    auto under_d2 = [eps, L, I](double x) {
        if (x >= 0.0) return 0.0;
        const double s = x + 0.5 * L;
        if (s >= 0.0 && s <= eps) return raw_bump_d1(s / eps) / (I * eps * eps);
        if (x >= -eps) return -raw_bump_d1((x + eps) / eps) / (I * eps * eps);
        return 0.0;
    };
    auto under_d3 = [eps, L, I](double x) {
        if (x >= 0.0) return 0.0;
        const double s = x + 0.5 * L;
        if (s >= 0.0 && s <= eps) return raw_bump_d2(s / eps) / (I * eps * eps * eps);
        if (x >= -eps) return -raw_bump_d2((x + eps) / eps) / (I * eps * eps * eps);
        return 0.0;
    };

    return MollifierPair{
        KillingKernel::from_profile(period, under_value, under_d1, under_d2, under_d3),
        KillingKernel::from_profile(period, over_value, over_d1, over_d2, over_d3),
        eps};
}

KernelTable::KernelTable(const KillingKernel& kernel, int size)
    : values_(kernel.lookup_table(size)), period_(kernel.period()),
      inv_step_(size / kernel.period()) {
    values_.push_back(values_.front()); // closing sample for seamless interpolation
}

double KernelTable::operator()(double x) const {
    double w = x - period_ * std::floor(x / period_ + 0.5);
    double pos = (w + 0.5 * period_) * inv_step_;
    const int last = static_cast<int>(values_.size()) - 2;
    int i = static_cast<int>(pos);
    if (i < 0) i = 0;
    if (i > last) i = last;
    const double frac = pos - i;
    return values_[static_cast<std::size_t>(i)] +
           frac * (values_[static_cast<std::size_t>(i) + 1] - values_[static_cast<std::size_t>(i)]);
}

} // namespace ifpt
