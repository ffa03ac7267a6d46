#include "qsplit/linear.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <unsupported/Eigen/MatrixFunctions>

namespace qsplit::linear {

Matrix expm(const Matrix& a, double t) {
    if (a.rows() != a.cols()) throw std::invalid_argument("expm: matrix must be square");
    if (!a.allFinite() || !std::isfinite(t))
        throw std::invalid_argument("expm: non-finite input");
    return (t * a).exp();
}

Matrix commutator(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() != a.cols())
        throw std::invalid_argument("commutator: dimension mismatch");
    return a * b - b * a;
}

double spectral_norm(const Matrix& a) {
    if (a.rows() <= 64 && a.cols() <= 64) {
        return Eigen::JacobiSVD<Matrix>(a).singularValues()(0);
    }
    // Power iteration on A^T A.
    Vector v = Vector::Ones(a.cols());
    v.normalize();
    double sigma = 0.0;
    for (int it = 0; it < 500; ++it) {
        Vector w = a.transpose() * (a * v);
        const double norm = w.norm();
        if (norm == 0.0) return 0.0;
        w /= norm;
        const double next = std::sqrt(norm);
        if (std::abs(next - sigma) <= 1e-13 * next) return next;
        sigma = next;
        v = w;
    }
    return sigma;
}

BchDefect bch_defect(const Matrix& a1, const Matrix& a2, double tau) {
    if (a1.rows() != a2.rows() || a1.cols() != a2.cols())
        throw std::invalid_argument("bch_defect: dimension mismatch");
    if (!(tau > 0.0)) throw std::invalid_argument("bch_defect: tau must be > 0");
    BchDefect out;
    out.defect = expm(a2, tau) * expm(a1, tau) - expm(a1 + a2, tau);
    const Matrix bracket = commutator(a2, a1);
    out.second_order = (tau * tau / 2.0) * bracket;
    // Third-order coefficient of the exponential difference with B = A2,
    // C = A1, from the direct series expansion:
    //   (1/6)(2B^2C + 2BC^2 - BCB - CB^2 - CBC - C^2B).
    // This equals the BCH-logarithm term (1/12)([B,[B,C]] - [C,[B,C]]) plus
    // the anticommutator contribution (1/4){B+C, [B,C]} that appears when the
    // series is re-exponentiated.
    const Matrix& b = a2;
    const Matrix& c = a1;
    out.third_order = (tau * tau * tau / 6.0) *
                      (2.0 * b * b * c + 2.0 * b * c * c - b * c * b - c * b * b -
                       c * b * c - c * c * b);
    return out;
}

Matrix LinearProblem::operator_sum() const {
    Matrix sum = Matrix::Zero(dimension(), dimension());
    for (const Matrix& a : operators) sum += a;
    return sum;
}

double LinearProblem::min_pairwise_commutator() const {
    double best = -1.0;
    for (std::size_t i = 0; i < operators.size(); ++i)
        for (std::size_t j = i + 1; j < operators.size(); ++j) {
            const double norm = commutator(operators[i], operators[j]).norm();
            if (best < 0.0 || norm < best) best = norm;
        }
    return best;
}

namespace {

Matrix gaussian_matrix(int m, rng::UniformStream& stream) {
    Matrix g(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) g(i, j) = stream.next_gaussian();
    return g;
}

}  // namespace

LinearProblem generate_problem(int dimension, int operator_count, std::uint64_t seed,
                               double horizon, const MatrixDrawer& drawer) {
    if (dimension < 2) throw std::invalid_argument("generate_problem: dimension must be >= 2");
    if (operator_count < 2)
        throw std::invalid_argument("generate_problem: need at least two operators");

    const MatrixDrawer draw = drawer ? drawer : MatrixDrawer(gaussian_matrix);
    rng::UniformStream stream(
        rng::derive_seed(seed, rng::StreamLabel::problem));

    LinearProblem problem;
    problem.horizon = horizon;
    bool accepted = false;
    for (int attempt = 0; attempt < 100 && !accepted; ++attempt) {
        problem.operators.clear();
        for (int j = 0; j < operator_count; ++j) {
            Matrix a = draw(dimension, stream);
            a /= std::max(1.0, spectral_norm(a));
            problem.operators.push_back(std::move(a));
        }
        double max_comm = 0.0;
        for (int i = 0; i < operator_count; ++i)
            for (int j = i + 1; j < operator_count; ++j)
                max_comm = std::max(
                    max_comm, commutator(problem.operators[static_cast<std::size_t>(i)],
                                         problem.operators[static_cast<std::size_t>(j)])
                                  .norm());
        accepted = max_comm >= kCommutatorFloor;
    }
    if (!accepted)
        throw std::runtime_error("generate_problem: rejection loop exhausted 100 redraws");

    Vector u0(dimension);
    do {
        for (int i = 0; i < dimension; ++i) u0(i) = stream.next_gaussian();
    } while (u0.norm() == 0.0);
    problem.initial = u0 / u0.norm();
    return problem;
}

Vector exact_flow(const LinearProblem& problem, double t, const Vector& u0) {
    if (t < 0.0) throw std::invalid_argument("exact_flow: t must be >= 0");
    if (t == 0.0) return u0;
    return expm(problem.operator_sum(), t) * u0;
}

}  // namespace qsplit::linear
