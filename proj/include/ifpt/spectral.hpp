#pragma once

#include <complex>
#include <functional>
#include <memory>
#include <vector>

#include "ifpt/errors.hpp"

namespace ifpt {

/// Uniform periodic grid on [-L/2, L/2) with N nodes.
class SpectralGrid {
public:
    SpectralGrid(int n, double period);

    int size() const { return n_; }
    double period() const { return period_; }
    double spacing() const { return period_ / n_; }
    double node(int k) const { return nodes_[static_cast<std::size_t>(k)]; }
    const std::vector<double>& nodes() const { return nodes_; }

    /// Signed wavenumber 2*pi*k~/L of mode k in FFT ordering, k in [0, N).
    double wavenumber(int k) const;

private:
    int n_;
    double period_;
    std::vector<double> nodes_;
};

using GridPtr = std::shared_ptr<const SpectralGrid>;

GridPtr make_grid(int n, double period);

/// Real samples on a SpectralGrid.
class Field {
public:
    Field(GridPtr grid, std::vector<double> values);
    static Field zeros(const GridPtr& grid);

    const GridPtr& grid() const { return grid_; }
    int size() const { return static_cast<int>(values_.size()); }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }
    double operator[](int i) const { return values_[static_cast<std::size_t>(i)]; }
    double& operator[](int i) { return values_[static_cast<std::size_t>(i)]; }

private:
    GridPtr grid_;
    std::vector<double> values_;
};

/// dx * sum(values): the periodic trapezoid rule, spectrally accurate
/// for smooth periodic integrands.
double integrate(const Field& f);

/// dx * sum(a_i * b_i): discrete <a,b> inner product.
double inner_product(const Field& a, const Field& b);

void require_same_grid(const Field& a, const Field& b);

/// Additive Runge-Kutta tableau: implicit (stiff) and explicit (nonstiff)
/// coefficient matrices sharing abscissae and weights.
struct ImexTableau {
    int stages = 0;
    std::vector<std::vector<double>> a_implicit;
    std::vector<std::vector<double>> a_explicit;
    std::vector<double> weights;          // b
    std::vector<double> embedded_weights; // b^, may be empty
    std::vector<double> abscissae;        // c
    int order = 0;

    /// ARK4(3)6L[2]SA of Kennedy & Carpenter: 6 stages, order 4,
    /// L-stable stiffly accurate ESDIRK paired with an ERK.
    static ImexTableau ark436l2sa();

    /// Throws InvalidParameter if shapes or consistency conditions
    /// (row sums = c, sum of weights = 1, strictly lower explicit part) fail.
    void validate() const;
};

/// Nonstiff right-hand sides of the coupled (field, scalar) system.
/// The stiff part is always (1/2) d^2/dx^2 on the field and 0 on the scalar.
struct ImexSystem {
    /// Writes the nonstiff field RHS at state (u, b, t) into out.
    std::function<void(const Field& u, double b, double t, Field& out)> field_rhs;
    /// Nonstiff scalar RHS; null means the scalar is held constant.
    std::function<double(const Field& u, double b, double t)> scalar_rhs;
};

struct ImexState {
    Field u;
    double b = 0.0;
};

/// FFT workspace bound to one grid. Not thread-safe: create one engine
/// per concurrent solve.
class SpectralEngine {
public:
    explicit SpectralEngine(GridPtr grid);
    ~SpectralEngine();
    SpectralEngine(const SpectralEngine&) = delete;
    SpectralEngine& operator=(const SpectralEngine&) = delete;

    const GridPtr& grid() const { return grid_; }

    /// Fourier-multiplier derivative (i*kappa)^order, order in {1, 2}.
    Field differentiate(const Field& f, int order) const;

    /// Exact periodic solution operator of u_t = (1/2) u_xx over time dt.
    Field heat_propagate(const Field& f, double dt) const;

    /// One additive IMEX-RK step of the coupled system from time t.
    /// Diffusion is solved per stage as a diagonal division in Fourier
    /// space. If error_estimate is non-null and the tableau carries
    /// embedded weights, the max-norm of the embedded difference of the
    /// field update is written there.
    ImexState imex_step(const ImexState& state, double t, double dt,
                        const ImexTableau& tableau, const ImexSystem& system,
                        double* error_estimate = nullptr) const;

    /// Spectrum access used by tests: forward real-to-complex transform,
    /// modes 0..N/2, unnormalized as FFTW returns them divided by N.
    std::vector<std::complex<double>> spectrum(const Field& f) const;

private:
    struct Impl;
    GridPtr grid_;
    std::unique_ptr<Impl> impl_;

    void check_field(const Field& f) const;
};

} // namespace ifpt
