#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "qsplit/rng.hpp"

namespace qsplit::linear {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// e^{tA} by scaling-and-squaring with the degree-13 Pade approximant.
Matrix expm(const Matrix& a, double t = 1.0);

/// AB - BA.
Matrix commutator(const Matrix& a, const Matrix& b);

/// ||A||_2. Exact SVD for dimension <= 64, power iteration above.
double spectral_norm(const Matrix& a);

/// Defect of the composed exponentials against the exact flow, together with
/// the predicted expansion terms. The composition acts on states with A1
/// applied first, so the defect is e^{tau A2} e^{tau A1} - e^{tau(A1+A2)} and
/// the expansion is taken with B = A2, C = A1:
///   defect = (tau^2/2)[B,C]
///          + (tau^3/6)(2B^2C + 2BC^2 - BCB - CB^2 - CBC - C^2B) + O(tau^4).
/// The cubic term is the series coefficient of the exponential difference
/// itself; it exceeds the BCH-logarithm term by (1/4){B+C, [B,C]}.
struct BchDefect {
    Matrix defect;
    Matrix second_order;
    Matrix third_order;
};

BchDefect bch_defect(const Matrix& a1, const Matrix& a2, double tau);

/// Bounded linear test problem: matrices with ||A_j||_2 <= 1, a unit initial
/// vector, and a guaranteed noncommuting pair.
struct LinearProblem {
    std::vector<Matrix> operators;
    Vector initial;
    double horizon = 1.0;

    int dimension() const { return static_cast<int>(initial.size()); }
    int operator_count() const { return static_cast<int>(operators.size()); }
    Matrix operator_sum() const;
    double min_pairwise_commutator() const;  // min over i<j of ||[A_i,A_j]||_F
};

/// Draws one raw matrix; injectable so tests can force the rejection path.
using MatrixDrawer = std::function<Matrix(int dimension, rng::UniformStream&)>;

/// Seeded generator: Gaussian entries, spectral-norm rescale
/// A_j <- A_j / max(1, ||A_j||_2), redraw while the maximum pairwise
/// commutator Frobenius norm is below 1e-8 (at most 100 attempts), and a
/// normalized Gaussian initial vector.
LinearProblem generate_problem(int dimension, int operator_count, std::uint64_t seed,
                               double horizon = 1.0, const MatrixDrawer& drawer = {});

/// u(t) = exp(t sum_j A_j) u0.
Vector exact_flow(const LinearProblem& problem, double t, const Vector& u0);

/// Rejection threshold for the pairwise commutator check.
inline constexpr double kCommutatorFloor = 1e-8;

}  // namespace qsplit::linear
