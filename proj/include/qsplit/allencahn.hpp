#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include <fftw3.h>

namespace qsplit::allencahn {

/// Uniform periodic grid on [0,L]^2 with n points per dimension (power of
/// two). Integer wavenumbers run over {-n/2, ..., n/2 - 1}.
struct SpectralGrid {
    int size = 0;
    double length = 0.0;

    SpectralGrid(int n, double domain_length);

    double spacing() const { return length / size; }
    /// Continuous wavenumber per integer mode, 2*pi/L.
    double mode_scale() const;
    int spectral_cols() const { return size / 2 + 1; }
    std::size_t spectral_count() const {
        return static_cast<std::size_t>(size) * static_cast<std::size_t>(spectral_cols());
    }
};

/// Real field on the grid, stored row-major with x as the first index:
/// value(i,j) lives at (x_i, y_j) = (i*h, j*h).
class Field {
public:
    Field() = default;
    explicit Field(int n, double fill = 0.0);

    static Field sampled(const SpectralGrid& grid,
                         const std::function<double(double, double)>& f);

    int size() const { return size_; }
    std::size_t count() const { return values_.size(); }
    double* data() { return values_.data(); }
    const double* data() const { return values_.data(); }
    double& operator()(int i, int j) { return values_[static_cast<std::size_t>(i) * size_ + j]; }
    double operator()(int i, int j) const {
        return values_[static_cast<std::size_t>(i) * size_ + j];
    }
    double& operator[](std::size_t k) { return values_[k]; }
    double operator[](std::size_t k) const { return values_[k]; }

    bool finite() const;
    double max_abs() const;
    double mean() const;

    Field& operator+=(const Field& other);
    Field& operator-=(const Field& other);
    Field& operator*=(double s);

private:
    int size_ = 0;
    std::vector<double> values_;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(double s, Field a);

using Spectrum = std::vector<std::complex<double>>;

/// FFTW plans and scratch buffers for one grid. Transforms follow the
/// convention: forward unnormalized, inverse divides by n^2. A workspace is
/// not re-entrant; concurrent runs each own one.
class SpectralWorkspace {
public:
    explicit SpectralWorkspace(const SpectralGrid& grid);
    ~SpectralWorkspace();
    SpectralWorkspace(const SpectralWorkspace&) = delete;
    SpectralWorkspace& operator=(const SpectralWorkspace&) = delete;

    const SpectralGrid& grid() const { return grid_; }

    void forward(const Field& field, Spectrum& spectrum);
    void inverse(const Spectrum& spectrum, Field& field);

    Field laplacian(const Field& field);
    /// Spectral first derivatives; the Nyquist mode of the differentiated
    /// direction is zeroed, as usual for odd-order spectral derivatives.
    void gradient(const Field& field, Field& grad_x, Field& grad_y);
    void gradient_of_spectrum(const Spectrum& spectrum, Field& grad_x, Field& grad_y);

    /// Integer wavenumber of spectral row a (x direction, full range).
    int wavenumber_x(int row) const { return row < grid_.size / 2 ? row : row - grid_.size; }
    /// Integer wavenumber of spectral column b (y direction, 0..n/2).
    int wavenumber_y(int col) const { return col; }

private:
    SpectralGrid grid_;
    double* real_buf_;
    fftw_complex* complex_buf_;
    fftw_plan forward_plan_;
    fftw_plan inverse_plan_;
    Spectrum scratch_;
};

/// Background flow sampled on the grid.
struct Velocity {
    Field x;
    Field y;

    /// The benchmark shear flow v(x,y) = (-0.75 sin y, 0).
    static Velocity shear(const SpectralGrid& grid);
};

/// Allen-Cahn problem on the torus: du/dt = nu Lap(u) + u - u^3, optionally
/// with an advecting background flow (du/dt + v.grad(u) = ...).
/// include_reaction exists so solver tests can run the pure heat limit.
struct ACProblem {
    double nu = 1.0;
    double horizon = 1.0;
    Field initial;
    std::optional<Velocity> velocity;
    bool include_reaction = true;
};

/// The benchmark initial value 1 + 0.5 sin x + exp(0.7 sin y).
Field benchmark_initial_condition(const SpectralGrid& grid);

/// Exact heat subflow in transform space: coefficient k is multiplied by
/// exp(-4 pi^2 nu |k|^2 tau / L^2).
class HeatOperator {
public:
    HeatOperator(const SpectralGrid& grid, double nu, double tau);
    Field apply(const Field& field, SpectralWorkspace& ws) const;

private:
    std::vector<double> multiplier_;
};

Field heat_flow(const Field& field, double nu, double tau, SpectralWorkspace& ws);

/// Closed-form reaction subflow for dw/dt = w - w^3:
/// S_R(tau)[w] = w / sqrt(w^2 + (1 - w^2) exp(-2 tau)).
Field reaction_flow(const Field& field, double tau);

/// Transport subflow for dw/dt = -v.grad(w), integrated by RK4 in physical
/// space with spectral gradients, using `substeps` internal steps.
Field advection_flow(const Field& field, const Velocity& velocity, double tau,
                     SpectralWorkspace& ws, int substeps = 1);

/// Full right-hand side nu Lap(u) + u - u^3 - v.grad(u) (advection only when
/// the problem carries a velocity).
Field full_rhs(const Field& field, const ACProblem& problem, SpectralWorkspace& ws);

/// Leading local splitting defect coefficient 6 nu a |grad a|^2.
Field defect_coefficient(const Field& field, double nu, SpectralWorkspace& ws);
/// The same quantity from its defining form (1 - 3a^2) nu Lap(a) - nu Lap(a - a^3),
/// kept as an independent cross-check of the closed form.
Field defect_coefficient_direct(const Field& field, double nu, SpectralWorkspace& ws);

enum class NormKind { L2, W12 };

/// Discrete L2 norm sqrt(sum e^2 dx dy); W12 adds the spectral first
/// derivative energy |grad e|^2 pointwise before summing.
double discrete_norm(const Field& field, NormKind kind, SpectralWorkspace& ws);

/// Reference trajectory integrated by a fourth-order exponential integrator
/// (exact linear propagation in Fourier space, RK4-type treatment of the
/// nonlinear and advective remainder) at step tau_ref, cached at the
/// requested sample times. tau_ref must divide every sample time.
class ReferenceTrajectory {
public:
    ReferenceTrajectory(const ACProblem& problem, double tau_ref, const SpectralGrid& grid,
                        std::vector<double> sample_times);

    const Field& state_at(double t) const;
    double tau_ref() const { return tau_ref_; }

private:
    double tau_ref_;
    std::vector<double> times_;
    std::vector<Field> snapshots_;
};

/// Max discrete-L2 gap over probe times between the reference integrated at
/// tau_ref and at tau_ref/2. Used to gate desk-scale reference choices.
double self_convergence_gap(const ACProblem& problem, double tau_ref,
                            const SpectralGrid& grid,
                            const std::vector<double>& probe_times);

}  // namespace qsplit::allencahn
