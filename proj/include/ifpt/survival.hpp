#pragma once

#include <utility>
#include <vector>

#include "ifpt/spectral.hpp"

namespace ifpt {

enum class SurvivalKind { exponential, piecewise_hazard, tabulated };

/// Target lifetime law as an evaluable survival curve G with two
/// derivatives. Immutable after construction; shared concurrent reads
/// are safe.
class SurvivalModel {
public:
    /// G(t) = exp(-nu t).
    static SurvivalModel exponential(double nu);

    /// Piecewise-constant hazard: knots are (T_j, h_j) with T_0 = 0 and
    /// hazard h_j on [T_j, T_{j+1}). Derivatives are right limits at knots.
    static SurvivalModel piecewise_hazard(std::vector<std::pair<double, double>> knots);

    /// Natural cubic spline of log G through (times, survival) points;
    /// constant-hazard extrapolation beyond the last breakpoint. The
    /// scheme is C2 but not shape-preserving: run check_hazard_bound
    /// after construction and refuse models that violate it.
    static SurvivalModel tabulated(std::vector<double> times, std::vector<double> survival);

    SurvivalKind kind() const { return kind_; }

    double survival(double t) const;        // G(t)
    double survival_deriv(double t) const;  // g(t) = G'(t)
    double survival_deriv2(double t) const; // g'(t)
    double hazard(double t) const { return -survival_deriv(t) / survival(t); }

    /// Knots of a piecewise-hazard model (empty otherwise).
    const std::vector<std::pair<double, double>>& knots() const { return knots_; }
    /// Rate of an exponential model.
    double rate() const { return nu_; }

    /// The conditional law G(t0 + t) / G(t0) as a fresh model
    /// (exponential and piecewise kinds only).
    SurvivalModel conditional(double t0) const;

private:
    SurvivalModel() = default;

    SurvivalKind kind_ = SurvivalKind::exponential;
    double nu_ = 0.0;
    // piecewise: knot times/hazards plus cumulative hazard at knots
    std::vector<std::pair<double, double>> knots_;
    std::vector<double> cumulative_;
    // tabulated: cubic spline of log G
    std::vector<double> tab_t_, tab_y_, tab_m_; // breakpoints, log G, second derivs

    double log_survival(double t) const;
    double log_survival_d1(double t) const;
    double log_survival_d2(double t) const;
};

struct HazardBoundReport {
    bool ok = false;
    double worst_margin = 0.0;
    double argmin_t = 0.0;
};

/// Samples min(-g(t), lambda G(t) + g(t)) on [0, horizon] (knots of
/// piecewise models included) and reports the worst margin. ok means the
/// strict bound 0 < -g < lambda G held at every sample.
HazardBoundReport check_hazard_bound(const SurvivalModel& model, double lambda,
                                     double horizon, int n_samples);

/// Initial law of the credit index. Either an analytic Gaussian or grid
/// samples carried over from a previous solve (restarts).
class InitialDensity {
public:
    static InitialDensity gaussian(double mean, double sigma);
    static InitialDensity from_field(Field samples);

    bool is_gaussian() const { return gaussian_; }
    double mean() const { return mean_; }
    double stddev() const { return sigma_; }

    /// Analytic value/derivatives (Gaussian kind only).
    double value(double x) const;
    double deriv(double x) const;
    double deriv2(double x) const;

    /// Samples onto the grid. A field-backed density must live on the
    /// same grid already.
    Field sample(const GridPtr& grid) const;

private:
    InitialDensity() = default;

    bool gaussian_ = true;
    double mean_ = 0.0;
    double sigma_ = 1.0;
    std::vector<double> field_values_;
    GridPtr field_grid_;
};

} // namespace ifpt
