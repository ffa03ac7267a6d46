#include "qsplit/allencahn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <mutex>
#include <stdexcept>
#include <string>

namespace qsplit::allencahn {

namespace {

constexpr double kPi = 3.14159265358979323846;

// FFTW plan creation and destruction are not thread safe.
std::mutex& plan_mutex() {
    static std::mutex m;
    return m;
}

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

SpectralGrid::SpectralGrid(int n, double domain_length) : size(n), length(domain_length) {
    if (!is_power_of_two(n) || n < 4)
        throw std::invalid_argument("SpectralGrid: size must be a power of two >= 4");
    if (!(domain_length > 0.0))
        throw std::invalid_argument("SpectralGrid: length must be > 0");
}

double SpectralGrid::mode_scale() const { return 2.0 * kPi / length; }

Field::Field(int n, double fill)
    : size_(n), values_(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), fill) {}

Field Field::sampled(const SpectralGrid& grid,
                     const std::function<double(double, double)>& f) {
    Field out(grid.size);
    const double h = grid.spacing();
    for (int i = 0; i < grid.size; ++i)
        for (int j = 0; j < grid.size; ++j) out(i, j) = f(i * h, j * h);
    return out;
}

bool Field::finite() const {
    for (double v : values_)
        if (!std::isfinite(v)) return false;
    return true;
}

double Field::max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

double Field::mean() const {
    double s = 0.0;
    for (double v : values_) s += v;
    return s / static_cast<double>(values_.size());
}

namespace {
void check_same_size(const Field& a, const Field& b, const char* what) {
    if (a.size() != b.size())
        throw std::invalid_argument(std::string(what) + ": field size mismatch");
}
}  // namespace

Field& Field::operator+=(const Field& other) {
    check_same_size(*this, other, "Field::operator+=");
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += other.values_[k];
    return *this;
}

Field& Field::operator-=(const Field& other) {
    check_same_size(*this, other, "Field::operator-=");
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= other.values_[k];
    return *this;
}

Field& Field::operator*=(double s) {
    for (double& v : values_) v *= s;
    return *this;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(double s, Field a) { return a *= s; }

SpectralWorkspace::SpectralWorkspace(const SpectralGrid& grid) : grid_(grid) {
    const int n = grid_.size;
    real_buf_ = fftw_alloc_real(static_cast<std::size_t>(n) * n);
    complex_buf_ = fftw_alloc_complex(grid_.spectral_count());
    if (!real_buf_ || !complex_buf_) throw std::bad_alloc();
    std::lock_guard<std::mutex> lock(plan_mutex());
    forward_plan_ = fftw_plan_dft_r2c_2d(n, n, real_buf_, complex_buf_, FFTW_ESTIMATE);
    inverse_plan_ = fftw_plan_dft_c2r_2d(n, n, complex_buf_, real_buf_, FFTW_ESTIMATE);
    if (!forward_plan_ || !inverse_plan_)
        throw std::runtime_error("SpectralWorkspace: FFTW plan creation failed");
}

SpectralWorkspace::~SpectralWorkspace() {
    std::lock_guard<std::mutex> lock(plan_mutex());
    fftw_destroy_plan(forward_plan_);
    fftw_destroy_plan(inverse_plan_);
    fftw_free(real_buf_);
    fftw_free(complex_buf_);
}

void SpectralWorkspace::forward(const Field& field, Spectrum& spectrum) {
    if (field.size() != grid_.size)
        throw std::invalid_argument("forward: field does not match the grid");
    std::memcpy(real_buf_, field.data(), field.count() * sizeof(double));
    fftw_execute(forward_plan_);
    spectrum.resize(grid_.spectral_count());
    // std::complex<double> is layout-compatible with fftw_complex.
    std::memcpy(static_cast<void*>(spectrum.data()), complex_buf_,
                spectrum.size() * sizeof(fftw_complex));
}

void SpectralWorkspace::inverse(const Spectrum& spectrum, Field& field) {
    if (spectrum.size() != grid_.spectral_count())
        throw std::invalid_argument("inverse: spectrum does not match the grid");
    std::memcpy(complex_buf_, spectrum.data(), spectrum.size() * sizeof(fftw_complex));
    fftw_execute(inverse_plan_);
    if (field.size() != grid_.size) field = Field(grid_.size);
    const double scale = 1.0 / (static_cast<double>(grid_.size) * grid_.size);
    for (std::size_t k = 0; k < field.count(); ++k) field[k] = real_buf_[k] * scale;
}

Field SpectralWorkspace::laplacian(const Field& field) {
    forward(field, scratch_);
    const double k0 = grid_.mode_scale();
    const int cols = grid_.spectral_cols();
    for (int a = 0; a < grid_.size; ++a) {
        const double kx = k0 * wavenumber_x(a);
        for (int b = 0; b < cols; ++b) {
            const double ky = k0 * wavenumber_y(b);
            scratch_[static_cast<std::size_t>(a) * cols + b] *= -(kx * kx + ky * ky);
        }
    }
    Field out;
    inverse(scratch_, out);
    return out;
}

void SpectralWorkspace::gradient(const Field& field, Field& grad_x, Field& grad_y) {
    forward(field, scratch_);
    gradient_of_spectrum(scratch_, grad_x, grad_y);
}

void SpectralWorkspace::gradient_of_spectrum(const Spectrum& spectrum, Field& grad_x,
                                             Field& grad_y) {
    if (spectrum.size() != grid_.spectral_count())
        throw std::invalid_argument("gradient_of_spectrum: spectrum size mismatch");
    const double k0 = grid_.mode_scale();
    const int cols = grid_.spectral_cols();
    const int n = grid_.size;
    Spectrum d(spectrum.size());

    for (int a = 0; a < n; ++a) {
        const int kx = wavenumber_x(a);
        const double m = (a == n / 2) ? 0.0 : k0 * kx;  // zero the Nyquist row
        for (int b = 0; b < cols; ++b) {
            const std::size_t idx = static_cast<std::size_t>(a) * cols + b;
            d[idx] = std::complex<double>(0.0, m) * spectrum[idx];
        }
    }
    inverse(d, grad_x);

    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < cols; ++b) {
            const std::size_t idx = static_cast<std::size_t>(a) * cols + b;
            const double m = (b == n / 2) ? 0.0 : k0 * wavenumber_y(b);
            d[idx] = std::complex<double>(0.0, m) * spectrum[idx];
        }
    }
    inverse(d, grad_y);
}

Velocity Velocity::shear(const SpectralGrid& grid) {
    Velocity v;
    v.x = Field::sampled(grid, [](double, double y) { return -0.75 * std::sin(y); });
    v.y = Field(grid.size, 0.0);
    return v;
}

Field benchmark_initial_condition(const SpectralGrid& grid) {
    return Field::sampled(grid, [](double x, double y) {
        return 1.0 + 0.5 * std::sin(x) + std::exp(0.7 * std::sin(y));
    });
}

HeatOperator::HeatOperator(const SpectralGrid& grid, double nu, double tau) {
    if (nu < 0.0) throw std::invalid_argument("HeatOperator: nu must be >= 0");
    if (tau < 0.0) throw std::invalid_argument("HeatOperator: tau must be >= 0");
    const double k0 = grid.mode_scale();
    const int cols = grid.spectral_cols();
    multiplier_.resize(grid.spectral_count());
    for (int a = 0; a < grid.size; ++a) {
        const int kx = a < grid.size / 2 ? a : a - grid.size;
        for (int b = 0; b < cols; ++b) {
            const double k2 = k0 * k0 * (static_cast<double>(kx) * kx + static_cast<double>(b) * b);
            multiplier_[static_cast<std::size_t>(a) * cols + b] = std::exp(-nu * k2 * tau);
        }
    }
}

Field HeatOperator::apply(const Field& field, SpectralWorkspace& ws) const {
    if (multiplier_.size() != ws.grid().spectral_count())
        throw std::invalid_argument("HeatOperator: workspace grid mismatch");
    Spectrum spec;
    ws.forward(field, spec);
    for (std::size_t k = 0; k < spec.size(); ++k) spec[k] *= multiplier_[k];
    Field out;
    ws.inverse(spec, out);
    return out;
}

Field heat_flow(const Field& field, double nu, double tau, SpectralWorkspace& ws) {
    return HeatOperator(ws.grid(), nu, tau).apply(field, ws);
}

Field reaction_flow(const Field& field, double tau) {
    const double damp = std::exp(-2.0 * tau);
    Field out(field.size());
    const int n = field.size();
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double w = field(i, j);
            const double value = w / std::sqrt(w * w + (1.0 - w * w) * damp);
            if (!std::isfinite(value))
                throw std::runtime_error("reaction_flow: non-finite output at grid point (" +
                                         std::to_string(i) + "," + std::to_string(j) +
                                         "), input " + std::to_string(w));
            out(i, j) = value;
        }
    }
    return out;
}

Field advection_flow(const Field& field, const Velocity& velocity, double tau,
                     SpectralWorkspace& ws, int substeps) {
    if (substeps < 1) throw std::invalid_argument("advection_flow: substeps must be >= 1");
    check_same_size(field, velocity.x, "advection_flow");
    check_same_size(field, velocity.y, "advection_flow");

    Field gx, gy;
    auto rhs = [&](const Field& w) {
        ws.gradient(w, gx, gy);
        Field out(w.size());
        for (std::size_t k = 0; k < out.count(); ++k)
            out[k] = -(velocity.x[k] * gx[k] + velocity.y[k] * gy[k]);
        return out;
    };

    const double h = tau / substeps;
    Field w = field;
    for (int s = 0; s < substeps; ++s) {
        const Field k1 = rhs(w);
        const Field k2 = rhs(w + (h / 2) * k1);
        const Field k3 = rhs(w + (h / 2) * k2);
        const Field k4 = rhs(w + h * k3);
        Field incr = k1 + 2.0 * k2 + 2.0 * k3 + k4;
        incr *= h / 6.0;
        w += incr;
        if (!w.finite())
            throw std::runtime_error("advection_flow: non-finite state in RK4 substep " +
                                     std::to_string(s));
    }
    return w;
}

Field full_rhs(const Field& field, const ACProblem& problem, SpectralWorkspace& ws) {
    Field out = ws.laplacian(field);
    out *= problem.nu;
    if (problem.include_reaction) {
        for (std::size_t k = 0; k < out.count(); ++k) {
            const double u = field[k];
            out[k] += u - u * u * u;
        }
    }
    if (problem.velocity) {
        Field gx, gy;
        ws.gradient(field, gx, gy);
        for (std::size_t k = 0; k < out.count(); ++k)
            out[k] -= problem.velocity->x[k] * gx[k] + problem.velocity->y[k] * gy[k];
    }
    return out;
}

Field defect_coefficient(const Field& field, double nu, SpectralWorkspace& ws) {
    Field gx, gy;
    ws.gradient(field, gx, gy);
    Field out(field.size());
    for (std::size_t k = 0; k < out.count(); ++k)
        out[k] = 6.0 * nu * field[k] * (gx[k] * gx[k] + gy[k] * gy[k]);
    return out;
}

Field defect_coefficient_direct(const Field& field, double nu, SpectralWorkspace& ws) {
    const Field lap = ws.laplacian(field);
    Field cubic(field.size());
    for (std::size_t k = 0; k < cubic.count(); ++k)
        cubic[k] = field[k] - field[k] * field[k] * field[k];
    const Field lap_cubic = ws.laplacian(cubic);
    Field out(field.size());
    for (std::size_t k = 0; k < out.count(); ++k) {
        const double u = field[k];
        out[k] = (1.0 - 3.0 * u * u) * nu * lap[k] - nu * lap_cubic[k];
    }
    return out;
}

double discrete_norm(const Field& field, NormKind kind, SpectralWorkspace& ws) {
    const double cell = ws.grid().spacing() * ws.grid().spacing();
    double sum = 0.0;
    for (std::size_t k = 0; k < field.count(); ++k) sum += field[k] * field[k];
    if (kind == NormKind::W12) {
        Field gx, gy;
        ws.gradient(field, gx, gy);
        for (std::size_t k = 0; k < field.count(); ++k)
            sum += gx[k] * gx[k] + gy[k] * gy[k];
    }
    return std::sqrt(sum * cell);
}

// ---------------------------------------------------------------------------
// Fourth-order exponential reference integrator.
// ---------------------------------------------------------------------------

namespace {

// phi_j(z) = sum_{k>=0} z^k / (k+j)!, evaluated by series near zero where the
// closed forms cancel catastrophically.
double phi_series(double z, int j) {
    double factorial = 1.0;
    for (int k = 2; k <= j; ++k) factorial *= k;
    double term = 1.0 / factorial;
    double sum = term;
    for (int k = 1; k < 30; ++k) {
        term *= z / (k + j);
        sum += term;
        if (std::abs(term) < 1e-20 * std::abs(sum)) break;
    }
    return sum;
}

double phi1(double z) { return std::abs(z) < 0.5 ? phi_series(z, 1) : std::expm1(z) / z; }
double phi2(double z) {
    return std::abs(z) < 0.5 ? phi_series(z, 2) : (std::expm1(z) - z) / (z * z);
}
double phi3(double z) {
    return std::abs(z) < 0.5 ? phi_series(z, 3)
                             : (std::expm1(z) - z - z * z / 2.0) / (z * z * z);
}

class Etdrk4 {
public:
    Etdrk4(const ACProblem& problem, const SpectralGrid& grid, double step)
        : grid_(grid),
          step_(step),
          reaction_(problem.include_reaction),
          velocity_(problem.velocity),
          ws_(grid) {
        if (!(step > 0.0)) throw std::invalid_argument("Etdrk4: step must be > 0");
        if (problem.nu < 0.0) throw std::invalid_argument("Etdrk4: nu must be >= 0");
        if (problem.initial.size() != grid.size)
            throw std::invalid_argument("Etdrk4: initial field does not match the grid");

        const std::size_t modes = grid_.spectral_count();
        e_.resize(modes);
        e2_.resize(modes);
        q_.resize(modes);
        f1_.resize(modes);
        f2_.resize(modes);
        f3_.resize(modes);
        const double k0 = grid_.mode_scale();
        const int cols = grid_.spectral_cols();
        for (int a = 0; a < grid_.size; ++a) {
            const int kx = ws_.wavenumber_x(a);
            for (int b = 0; b < cols; ++b) {
                const double k2 =
                    k0 * k0 * (static_cast<double>(kx) * kx + static_cast<double>(b) * b);
                const double ell = -problem.nu * k2 + (reaction_ ? 1.0 : 0.0);
                const double z = step_ * ell;
                const std::size_t idx = static_cast<std::size_t>(a) * cols + b;
                e_[idx] = std::exp(z);
                e2_[idx] = std::exp(z / 2.0);
                q_[idx] = (step_ / 2.0) * phi1(z / 2.0);
                f1_[idx] = step_ * (phi1(z) - 3.0 * phi2(z) + 4.0 * phi3(z));
                f2_[idx] = step_ * (phi2(z) - 2.0 * phi3(z));
                f3_[idx] = step_ * (4.0 * phi3(z) - phi2(z));
            }
        }

        ws_.forward(problem.initial, state_);
        n_state_.resize(modes);
        n_a_.resize(modes);
        n_b_.resize(modes);
        n_c_.resize(modes);
        stage_a_.resize(modes);
        stage_b_.resize(modes);
        stage_c_.resize(modes);
    }

    void advance() {
        const std::size_t modes = state_.size();
        nonlinear(state_, n_state_);
        for (std::size_t k = 0; k < modes; ++k)
            stage_a_[k] = e2_[k] * state_[k] + q_[k] * n_state_[k];
        nonlinear(stage_a_, n_a_);
        for (std::size_t k = 0; k < modes; ++k)
            stage_b_[k] = e2_[k] * state_[k] + q_[k] * n_a_[k];
        nonlinear(stage_b_, n_b_);
        for (std::size_t k = 0; k < modes; ++k)
            stage_c_[k] = e2_[k] * stage_a_[k] + q_[k] * (2.0 * n_b_[k] - n_state_[k]);
        nonlinear(stage_c_, n_c_);
        for (std::size_t k = 0; k < modes; ++k)
            state_[k] = e_[k] * state_[k] + f1_[k] * n_state_[k] +
                        2.0 * f2_[k] * (n_a_[k] + n_b_[k]) + f3_[k] * n_c_[k];
        ++steps_;
    }

    std::int64_t steps_taken() const { return steps_; }
    double time() const { return static_cast<double>(steps_) * step_; }

    Field state() {
        Field out;
        ws_.inverse(state_, out);
        if (!out.finite())
            throw std::runtime_error("reference solver: non-finite state at t = " +
                                     std::to_string(time()));
        return out;
    }

private:
    void nonlinear(const Spectrum& u_hat, Spectrum& out) {
        ws_.inverse(u_hat, phys_);
        nl_ = Field(grid_.size, 0.0);
        if (reaction_) {
            for (std::size_t k = 0; k < nl_.count(); ++k) {
                const double u = phys_[k];
                nl_[k] = -u * u * u;
            }
        }
        if (velocity_) {
            ws_.gradient_of_spectrum(u_hat, gx_, gy_);
            for (std::size_t k = 0; k < nl_.count(); ++k)
                nl_[k] -= velocity_->x[k] * gx_[k] + velocity_->y[k] * gy_[k];
        }
        ws_.forward(nl_, out);
    }

    SpectralGrid grid_;
    double step_;
    bool reaction_;
    std::optional<Velocity> velocity_;
    SpectralWorkspace ws_;
    std::vector<double> e_, e2_, q_, f1_, f2_, f3_;
    Spectrum state_, n_state_, n_a_, n_b_, n_c_, stage_a_, stage_b_, stage_c_;
    Field phys_, nl_, gx_, gy_;
    std::int64_t steps_ = 0;
};

std::int64_t steps_for(double t, double tau_ref, const char* what) {
    const double ratio = t / tau_ref;
    const std::int64_t steps = static_cast<std::int64_t>(std::llround(ratio));
    if (steps < 0 || std::abs(ratio - static_cast<double>(steps)) > 1e-6)
        throw std::invalid_argument(std::string(what) +
                                    ": tau_ref must divide every sample time; offending t = " +
                                    std::to_string(t));
    return steps;
}

}  // namespace

ReferenceTrajectory::ReferenceTrajectory(const ACProblem& problem, double tau_ref,
                                         const SpectralGrid& grid,
                                         std::vector<double> sample_times)
    : tau_ref_(tau_ref), times_(std::move(sample_times)) {
    if (!(tau_ref > 0.0))
        throw std::invalid_argument("ReferenceTrajectory: tau_ref must be > 0");
    if (times_.empty())
        throw std::invalid_argument("ReferenceTrajectory: no sample times");
    for (std::size_t i = 1; i < times_.size(); ++i)
        if (!(times_[i] > times_[i - 1]))
            throw std::invalid_argument("ReferenceTrajectory: sample times must be ascending");

    snapshots_.reserve(times_.size());
    Etdrk4 integrator(problem, grid, tau_ref);
    for (double t : times_) {
        const std::int64_t target = steps_for(t, tau_ref, "ReferenceTrajectory");
        while (integrator.steps_taken() < target) integrator.advance();
        snapshots_.push_back(integrator.state());
    }
}

const Field& ReferenceTrajectory::state_at(double t) const {
    const auto it = std::lower_bound(times_.begin(), times_.end(), t - 0.25 * tau_ref_);
    if (it == times_.end() || std::abs(*it - t) > 0.5 * tau_ref_)
        throw std::out_of_range("ReferenceTrajectory: no snapshot at t = " + std::to_string(t));
    return snapshots_[static_cast<std::size_t>(it - times_.begin())];
}

double self_convergence_gap(const ACProblem& problem, double tau_ref,
                            const SpectralGrid& grid,
                            const std::vector<double>& probe_times) {
    ReferenceTrajectory coarse(problem, tau_ref, grid, probe_times);
    ReferenceTrajectory fine(problem, tau_ref / 2.0, grid, probe_times);
    SpectralWorkspace ws(grid);
    double gap = 0.0;
    for (double t : probe_times) {
        gap = std::max(gap,
                       discrete_norm(coarse.state_at(t) - fine.state_at(t), NormKind::L2, ws));
    }
    return gap;
}

}  // namespace qsplit::allencahn
