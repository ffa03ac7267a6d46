#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

namespace qsplit::lowdisc {

/// Radical-inverse value phi_R(n): the base-R digits of n mirrored across the
/// radix point. Exact in binary floating point for R a power of two and
/// n < 2^53. Indexing starts at n = 1; n = 0 is rejected.
double radical_inverse(int base, std::int64_t n);

/// Deterministic stream of radical-inverse points z_n = phi_R(n).
/// The cursor starts at offset + 1 and each next() emits one point.
class RadicalInverseSequence {
public:
    explicit RadicalInverseSequence(int base, std::int64_t offset = 0);

    double next();

    int base() const { return base_; }
    /// Index of the next point to be emitted (>= 1).
    std::int64_t cursor() const { return cursor_; }

private:
    int base_;
    std::int64_t cursor_;
};

/// Sign sequence xi_n = +1 if z_n >= 1/2 else -1, with partial sums
/// S_0 = 0, S_n = S_{n-1} + xi_n.
struct SignSequence {
    std::vector<int> signs;                    // xi_1..xi_N
    std::vector<std::int64_t> partial_sums;    // S_0..S_N

    std::int64_t count() const { return static_cast<std::int64_t>(signs.size()); }
    std::int64_t final_sum() const { return partial_sums.back(); }
    std::int64_t max_abs_partial_sum() const;
};

SignSequence sign_sequence(RadicalInverseSequence seq, std::int64_t count);

/// Star discrepancy of a finite point set in [0,1), via the closed-form
/// sorted-point formula max_i max(|x_(i) - i/N|, |x_(i) - (i-1)/N|).
double star_discrepancy(std::span<const double> points);

/// D*_N for every prefix N = 1..count of the radical-inverse stream,
/// computed by incremental insertion into the sorted prefix. O(count^2).
std::vector<double> discrepancy_sweep(int base, std::int64_t offset,
                                      std::int64_t count);

/// Theorem bound (3R-2)/log R * log N / N, valid for N >= 2 and any offset.
double discrepancy_bound(int base, std::int64_t count);

/// Partial-sum bound 2(3R-2)/log R * log N, valid for N >= 2.
double partial_sum_bound(int base, std::int64_t count);

/// (1/N) sum_k f(t_k) xi_k.
double weighted_sign_sum(std::span<const double> f_values, const SignSequence& signs);

/// Companion bound C3 * tau * log N with
/// C3 = 2(3R-2)/log R * (Lip(f) + sup|f| / horizon).
/// Lip(f) and sup|f| are caller inputs; the library does not estimate them.
double weighted_sum_bound(int base, double lipschitz, double sup_norm,
                          double horizon, double tau, std::int64_t count);

/// Decomposition of the signed counting measure sum_n xi_n delta_{t_n} into
/// M(mu+ - mu-) plus an unpaired residual. The i-th positive index is paired
/// with the i-th negative index (both sorted ascending), so the pairing is
/// order-preserving and coincides with the sorted-support optimal transport
/// coupling for two empirical measures with M atoms each.
struct MeasureDecomposition {
    std::int64_t pair_count = 0;                  // M = min(N+, N-)
    std::vector<std::int64_t> plus_support;       // p_1 < ... < p_M
    std::vector<std::int64_t> minus_support;      // m_1 < ... < m_M
    std::vector<std::int64_t> residual_indices;   // unpaired surplus
    std::int64_t tv_residual = 0;                 // |N+ - N-| = |S_N|
    std::map<double, double> wasserstein;         // order p -> W_p(mu+, mu-); empty when M = 0
};

MeasureDecomposition measure_decomposition(const SignSequence& signs, double tau,
                                           std::span<const double> orders);

}  // namespace qsplit::lowdisc
