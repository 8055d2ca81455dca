#include "ifpt/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

namespace ifpt {

namespace {

// FFTW plan creation/destruction is not thread-safe; executions on
// distinct buffers are.
std::mutex& fftw_mutex() {
    static std::mutex m;
    return m;
}

} // namespace

SpectralGrid::SpectralGrid(int n, double period) : n_(n), period_(period) {
    if (n < 8 || n % 2 != 0)
        throw InvalidParameter("SpectralGrid: node count must be even and >= 8");
    if (!(period > 0.0))
        throw InvalidParameter("SpectralGrid: period must be positive");
    nodes_.resize(static_cast<std::size_t>(n));
    const double dx = period / n;
    for (int k = 0; k < n; ++k)
        nodes_[static_cast<std::size_t>(k)] = -0.5 * period + k * dx;
}

double SpectralGrid::wavenumber(int k) const {
    const int signed_index = (k <= n_ / 2) ? k : k - n_;
    return 2.0 * std::numbers::pi * signed_index / period_;
}

GridPtr make_grid(int n, double period) {
    return std::make_shared<const SpectralGrid>(n, period);
}

Field::Field(GridPtr grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
    if (!grid_)
        throw InvalidParameter("Field: null grid");
    if (static_cast<int>(values_.size()) != grid_->size())
        throw IncompatibleGrid("Field: value count does not match grid size");
}

Field Field::zeros(const GridPtr& grid) {
    return Field(grid, std::vector<double>(static_cast<std::size_t>(grid->size()), 0.0));
}

double integrate(const Field& f) {
    double s = 0.0;
    for (double v : f.values()) s += v;
    return s * f.grid()->spacing();
}

double inner_product(const Field& a, const Field& b) {
    require_same_grid(a, b);
    double s = 0.0;
    const auto& av = a.values();
    const auto& bv = b.values();
    for (std::size_t i = 0; i < av.size(); ++i) s += av[i] * bv[i];
    return s * a.grid()->spacing();
}

void require_same_grid(const Field& a, const Field& b) {
    const auto& ga = *a.grid();
    const auto& gb = *b.grid();
    if (ga.size() != gb.size() || ga.period() != gb.period())
        throw IncompatibleGrid("fields live on different grids");
}

ImexTableau ImexTableau::ark436l2sa() {
    ImexTableau t;
    t.stages = 6;
    t.order = 4;
    auto zeros = [] { return std::vector<std::vector<double>>(6, std::vector<double>(6, 0.0)); };
    t.a_implicit = zeros();
    t.a_explicit = zeros();

    auto& ai = t.a_implicit;
    ai[1][0] = 1.0 / 4.0;
    ai[1][1] = 1.0 / 4.0;
    ai[2][0] = 8611.0 / 62500.0;
    ai[2][1] = -1743.0 / 31250.0;
    ai[2][2] = 1.0 / 4.0;
    ai[3][0] = 5012029.0 / 34652500.0;
    ai[3][1] = -654441.0 / 2922500.0;
    ai[3][2] = 174375.0 / 388108.0;
    ai[3][3] = 1.0 / 4.0;
    ai[4][0] = 15267082809.0 / 155376265600.0;
    ai[4][1] = -71443401.0 / 120774400.0;
    ai[4][2] = 730878875.0 / 902184768.0;
    ai[4][3] = 2285395.0 / 8070912.0;
    ai[4][4] = 1.0 / 4.0;
    ai[5][0] = 82889.0 / 524892.0;
    ai[5][1] = 0.0;
    ai[5][2] = 15625.0 / 83664.0;
    ai[5][3] = 69875.0 / 102672.0;
    ai[5][4] = -2260.0 / 8211.0;
    ai[5][5] = 1.0 / 4.0;

    auto& ae = t.a_explicit;
    ae[1][0] = 1.0 / 2.0;
    ae[2][0] = 13861.0 / 62500.0;
    ae[2][1] = 6889.0 / 62500.0;
    ae[3][0] = -116923316275.0 / 2393684061468.0;
    ae[3][1] = -2731218467317.0 / 15368042101831.0;
    ae[3][2] = 9408046702089.0 / 11113171139209.0;
    ae[4][0] = -451086348788.0 / 2902428689909.0;
    ae[4][1] = -2682348792572.0 / 7519795681897.0;
    ae[4][2] = 12662868775082.0 / 11960479115383.0;
    ae[4][3] = 3355817975965.0 / 11060851509271.0;
    ae[5][0] = 647845179188.0 / 3216320057751.0;
    ae[5][1] = 73281519250.0 / 8382639484533.0;
    ae[5][2] = 552539513391.0 / 3454668386233.0;
    ae[5][3] = 3354512671639.0 / 8306763924573.0;
    ae[5][4] = 4040.0 / 17871.0;

    t.weights = {82889.0 / 524892.0, 0.0, 15625.0 / 83664.0,
                 69875.0 / 102672.0, -2260.0 / 8211.0, 1.0 / 4.0};
    t.embedded_weights = {4586570599.0 / 29645900160.0, 0.0,
                          178811875.0 / 945068544.0, 814220225.0 / 1159782912.0,
                          -3700637.0 / 11593932.0, 61727.0 / 225920.0};
    t.abscissae = {0.0, 1.0 / 2.0, 83.0 / 250.0, 31.0 / 50.0, 17.0 / 20.0, 1.0};
    t.validate();
    return t;
}

void ImexTableau::validate() const {
    if (stages < 1)
        throw InvalidParameter("ImexTableau: no stages");
    auto check_matrix = [&](const std::vector<std::vector<double>>& a, const char* name) {
        if (static_cast<int>(a.size()) != stages)
            throw InvalidParameter(std::string("ImexTableau: bad row count in ") + name);
        for (const auto& row : a)
            if (static_cast<int>(row.size()) != stages)
                throw InvalidParameter(std::string("ImexTableau: bad column count in ") + name);
    };
    check_matrix(a_implicit, "implicit part");
    check_matrix(a_explicit, "explicit part");
    if (static_cast<int>(weights.size()) != stages || static_cast<int>(abscissae.size()) != stages)
        throw InvalidParameter("ImexTableau: weights/abscissae size mismatch");
    if (!embedded_weights.empty() && static_cast<int>(embedded_weights.size()) != stages)
        throw InvalidParameter("ImexTableau: embedded weights size mismatch");

    const double tol = 1e-12;
    for (int i = 0; i < stages; ++i) {
        for (int j = i; j < stages; ++j)
            if (a_explicit[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] != 0.0)
                throw InvalidParameter("ImexTableau: explicit part must be strictly lower triangular");
        double ri = 0.0, re = 0.0;
        for (int j = 0; j < stages; ++j) {
            ri += a_implicit[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            re += a_explicit[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
        if (std::abs(ri - abscissae[static_cast<std::size_t>(i)]) > tol ||
            std::abs(re - abscissae[static_cast<std::size_t>(i)]) > tol)
            throw InvalidParameter("ImexTableau: row sums do not match abscissae");
    }
    double sw = 0.0;
    for (double w : weights) sw += w;
    if (std::abs(sw - 1.0) > tol)
        throw InvalidParameter("ImexTableau: weights do not sum to 1");
    if (!embedded_weights.empty()) {
        double se = 0.0;
        for (double w : embedded_weights) se += w;
        if (std::abs(se - 1.0) > tol)
            throw InvalidParameter("ImexTableau: embedded weights do not sum to 1");
    }
    if (order < 1)
        throw InvalidParameter("ImexTableau: declared order must be positive");
}

struct SpectralEngine::Impl {
    int n = 0;
    int nspec = 0;
    double* real_buf = nullptr;
    fftw_complex* spec_buf = nullptr;
    fftw_plan fwd = nullptr;
    fftw_plan inv = nullptr;
    std::vector<double> kappa2; // kappa_k^2 for modes 0..N/2

    explicit Impl(const SpectralGrid& grid) {
        n = grid.size();
        nspec = n / 2 + 1;
        std::lock_guard<std::mutex> lock(fftw_mutex());
        real_buf = fftw_alloc_real(static_cast<std::size_t>(n));
        spec_buf = fftw_alloc_complex(static_cast<std::size_t>(nspec));
        fwd = fftw_plan_dft_r2c_1d(n, real_buf, spec_buf, FFTW_ESTIMATE);
        inv = fftw_plan_dft_c2r_1d(n, spec_buf, real_buf, FFTW_ESTIMATE);
        kappa2.resize(static_cast<std::size_t>(nspec));
        for (int k = 0; k < nspec; ++k) {
            const double kap = grid.wavenumber(k);
            kappa2[static_cast<std::size_t>(k)] = kap * kap;
        }
    }

    ~Impl() {
        std::lock_guard<std::mutex> lock(fftw_mutex());
        fftw_destroy_plan(fwd);
        fftw_destroy_plan(inv);
        fftw_free(real_buf);
        fftw_free(spec_buf);
    }

    void forward(const std::vector<double>& in) {
        std::copy(in.begin(), in.end(), real_buf);
        fftw_execute(fwd);
    }

    void inverse(std::vector<double>& out) {
        fftw_execute(inv);
        const double scale = 1.0 / n;
        out.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = real_buf[i] * scale;
    }
};

SpectralEngine::SpectralEngine(GridPtr grid)
    : grid_(std::move(grid)), impl_(std::make_unique<Impl>(*grid_)) {}

SpectralEngine::~SpectralEngine() = default;

void SpectralEngine::check_field(const Field& f) const {
    if (f.grid()->size() != grid_->size() || f.grid()->period() != grid_->period())
        throw IncompatibleGrid("field does not match the engine's grid");
}

std::vector<std::complex<double>> SpectralEngine::spectrum(const Field& f) const {
    check_field(f);
    impl_->forward(f.values());
    std::vector<std::complex<double>> out(static_cast<std::size_t>(impl_->nspec));
    const double scale = 1.0 / impl_->n;
    for (int k = 0; k < impl_->nspec; ++k)
        out[static_cast<std::size_t>(k)] =
            std::complex<double>(impl_->spec_buf[k][0], impl_->spec_buf[k][1]) * scale;
    return out;
}

Field SpectralEngine::differentiate(const Field& f, int order) const {
    check_field(f);
    if (order != 1 && order != 2)
        throw InvalidParameter("differentiate: order must be 1 or 2");
    impl_->forward(f.values());
    const int nspec = impl_->nspec;
    if (order == 1) {
        // multiply by i*kappa; zero the Nyquist mode for odd derivatives
        for (int k = 0; k < nspec; ++k) {
            const double kap = grid_->wavenumber(k);
            const double re = impl_->spec_buf[k][0];
            const double im = impl_->spec_buf[k][1];
            impl_->spec_buf[k][0] = -kap * im;
            impl_->spec_buf[k][1] = kap * re;
        }
        impl_->spec_buf[nspec - 1][0] = 0.0;
        impl_->spec_buf[nspec - 1][1] = 0.0;
    } else {
        for (int k = 0; k < nspec; ++k) {
            const double m = -impl_->kappa2[static_cast<std::size_t>(k)];
            impl_->spec_buf[k][0] *= m;
            impl_->spec_buf[k][1] *= m;
        }
    }
    Field out = Field::zeros(grid_);
    impl_->inverse(out.values());
    return out;
}

Field SpectralEngine::heat_propagate(const Field& f, double dt) const {
    check_field(f);
    if (dt < 0.0)
        throw InvalidParameter("heat_propagate: dt must be nonnegative");
    impl_->forward(f.values());
    for (int k = 0; k < impl_->nspec; ++k) {
        const double m = std::exp(-0.5 * impl_->kappa2[static_cast<std::size_t>(k)] * dt);
        impl_->spec_buf[k][0] *= m;
        impl_->spec_buf[k][1] *= m;
    }
    Field out = Field::zeros(grid_);
    impl_->inverse(out.values());
    return out;
}

ImexState SpectralEngine::imex_step(const ImexState& state, double t, double dt,
                                    const ImexTableau& tableau, const ImexSystem& system,
                                    double* error_estimate) const {
    check_field(state.u);
    if (!(dt > 0.0))
        throw InvalidParameter("imex_step: dt must be positive");
    if (!system.field_rhs)
        throw InvalidParameter("imex_step: missing field RHS");

    const int s = tableau.stages;
    const int n = grid_->size();
    const int nspec = impl_->nspec;

    std::vector<Field> fe;       // nonstiff field RHS per stage
    std::vector<Field> fi;       // stiff field RHS (1/2 u_xx) per stage
    std::vector<double> kb(static_cast<std::size_t>(s), 0.0); // scalar RHS per stage
    fe.reserve(static_cast<std::size_t>(s));
    fi.reserve(static_cast<std::size_t>(s));

    // half_lap(u) = (1/2) u_xx computed spectrally
    auto half_lap = [&](const Field& u) {
        impl_->forward(u.values());
        for (int k = 0; k < nspec; ++k) {
            const double m = -0.5 * impl_->kappa2[static_cast<std::size_t>(k)];
            impl_->spec_buf[k][0] *= m;
            impl_->spec_buf[k][1] *= m;
        }
        Field out = Field::zeros(grid_);
        impl_->inverse(out.values());
        return out;
    };

    // stage 1 is explicit in both parts for an ESDIRK implicit table
    fe.push_back(Field::zeros(grid_));
    system.field_rhs(state.u, state.b, t, fe.back());
    fi.push_back(half_lap(state.u));
    if (system.scalar_rhs)
        kb[0] = system.scalar_rhs(state.u, state.b, t);

    Field stage_u = Field::zeros(grid_);
    for (int i = 1; i < s; ++i) {
        const auto si = static_cast<std::size_t>(i);
        // accumulate known contributions
        std::vector<double>& acc = stage_u.values();
        std::copy(state.u.values().begin(), state.u.values().end(), acc.begin());
        for (int j = 0; j < i; ++j) {
            const auto sj = static_cast<std::size_t>(j);
            const double ce = dt * tableau.a_explicit[si][sj];
            const double ci = dt * tableau.a_implicit[si][sj];
            const auto& fev = fe[sj].values();
            const auto& fiv = fi[sj].values();
            for (int m = 0; m < n; ++m)
                acc[static_cast<std::size_t>(m)] += ce * fev[static_cast<std::size_t>(m)] +
                                                    ci * fiv[static_cast<std::size_t>(m)];
        }
        // implicit diagonal solve (I - dt*a_ii*(1/2)dxx) U = acc,
        // then the stiff RHS at the stage from the same spectrum
        const double gamma = tableau.a_implicit[si][si];
        impl_->forward(acc);
        Field fi_stage = Field::zeros(grid_);
        {
            std::vector<std::complex<double>> stage_spec(static_cast<std::size_t>(nspec));
            for (int k = 0; k < nspec; ++k) {
                const double denom = 1.0 + 0.5 * dt * gamma * impl_->kappa2[static_cast<std::size_t>(k)];
                impl_->spec_buf[k][0] /= denom;
                impl_->spec_buf[k][1] /= denom;
                stage_spec[static_cast<std::size_t>(k)] =
                    std::complex<double>(impl_->spec_buf[k][0], impl_->spec_buf[k][1]);
            }
            impl_->inverse(stage_u.values());
            for (int k = 0; k < nspec; ++k) {
                const double m = -0.5 * impl_->kappa2[static_cast<std::size_t>(k)];
                impl_->spec_buf[k][0] = m * stage_spec[static_cast<std::size_t>(k)].real();
                impl_->spec_buf[k][1] = m * stage_spec[static_cast<std::size_t>(k)].imag();
            }
            impl_->inverse(fi_stage.values());
        }
        double stage_b = state.b;
        if (system.scalar_rhs) {
            for (int j = 0; j < i; ++j)
                stage_b += dt * tableau.a_explicit[si][static_cast<std::size_t>(j)] *
                           kb[static_cast<std::size_t>(j)];
        }
        const double stage_t = t + tableau.abscissae[si] * dt;
        fe.push_back(Field::zeros(grid_));
        system.field_rhs(stage_u, stage_b, stage_t, fe.back());
        fi.push_back(std::move(fi_stage));
        if (system.scalar_rhs)
            kb[si] = system.scalar_rhs(stage_u, stage_b, stage_t);
    }

    ImexState next{Field(grid_, state.u.values()), state.b};
    auto& uv = next.u.values();
    double err = 0.0;
    std::vector<double> err_field;
    const bool want_err = error_estimate != nullptr && !tableau.embedded_weights.empty();
    if (want_err) err_field.assign(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < s; ++i) {
        const auto si = static_cast<std::size_t>(i);
        const double w = dt * tableau.weights[si];
        const auto& fev = fe[si].values();
        const auto& fiv = fi[si].values();
        for (int m = 0; m < n; ++m) {
            const auto sm = static_cast<std::size_t>(m);
            uv[sm] += w * (fev[sm] + fiv[sm]);
        }
        if (want_err) {
            const double dw = dt * (tableau.weights[si] - tableau.embedded_weights[si]);
            for (int m = 0; m < n; ++m) {
                const auto sm = static_cast<std::size_t>(m);
                err_field[sm] += dw * (fev[sm] + fiv[sm]);
            }
        }
        if (system.scalar_rhs)
            next.b += w * kb[si];
    }
    if (want_err) {
        for (double v : err_field) err = std::max(err, std::abs(v));
        *error_estimate = err;
    } else if (error_estimate) {
        *error_estimate = 0.0;
    }
    return next;
}

} // namespace ifpt
