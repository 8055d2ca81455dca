#pragma once

#include <stdexcept>
#include <string>

namespace ifpt {

/// Bad argument to a constructor or operation (exit code 2 territory).
class InvalidParameter : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A field or kernel was combined with a grid of a different period/size.
class IncompatibleGrid : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Base for failures detected while computing (exit code 3 territory).
class NumericalError : public std::runtime_error {
public:
    NumericalError(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}
    const std::string& code() const { return code_; }

private:
    std::string code_;
};

/// The denominator of the barrier ODE fell below the floor.
class BarrierDegeneracy : public NumericalError {
public:
    BarrierDegeneracy(double time, double inner_product, const std::string& message)
        : NumericalError("barrier-degeneracy", message), time_(time), inner_product_(inner_product) {}
    double time() const { return time_; }
    double inner_product() const { return inner_product_; }

private:
    double time_;
    double inner_product_;
};

/// Too much density accumulated near the periodic boundary.
class MassLeak : public NumericalError {
public:
    MassLeak(double time, double boundary_mass, const std::string& message)
        : NumericalError("mass-leak", message), time_(time), boundary_mass_(boundary_mass) {}
    double time() const { return time_; }
    double boundary_mass() const { return boundary_mass_; }

private:
    double time_;
    double boundary_mass_;
};

/// A bracketed root does not exist (initial barrier, hazard bound, ...).
class NoRoot : public NumericalError {
public:
    explicit NoRoot(const std::string& message) : NumericalError("no-root", message) {}
};

/// The survival model violates 0 < -g < lambda*G on the requested horizon.
class HazardBoundViolation : public NumericalError {
public:
    HazardBoundViolation(double argmin_t, double margin, const std::string& message)
        : NumericalError("hazard-bound", message), argmin_t_(argmin_t), margin_(margin) {}
    double argmin_t() const { return argmin_t_; }
    double margin() const { return margin_; }

private:
    double argmin_t_;
    double margin_;
};

/// A CDS quote admits no hazard rate in the search bracket.
class UnbootstrappableQuote : public NumericalError {
public:
    UnbootstrappableQuote(std::size_t segment, const std::string& message)
        : NumericalError("unbootstrappable-quote", message), segment_(segment) {}
    std::size_t segment() const { return segment_; }

private:
    std::size_t segment_;
};

} // namespace ifpt
