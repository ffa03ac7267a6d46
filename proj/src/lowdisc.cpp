#include "qsplit/lowdisc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace qsplit::lowdisc {

double radical_inverse(int base, std::int64_t n) {
    if (base < 2) throw std::domain_error("radical_inverse: base must be >= 2");
    if (n < 1) throw std::domain_error("radical_inverse: index must be >= 1");
    // Digits by repeated integer division; the value is then accumulated by
    // Horner from the most significant digit so that base-2 results are exact.
    int digits[64];
    int count = 0;
    std::int64_t m = n;
    while (m > 0) {
        digits[count++] = static_cast<int>(m % base);
        m /= base;
    }
    double acc = 0.0;
    for (int j = count - 1; j >= 0; --j) {
        acc = (acc + digits[j]) / base;
    }
    return acc;
}

RadicalInverseSequence::RadicalInverseSequence(int base, std::int64_t offset)
    : base_(base), cursor_(offset + 1) {
    if (base < 2) throw std::domain_error("RadicalInverseSequence: base must be >= 2");
    if (offset < 0) throw std::domain_error("RadicalInverseSequence: offset must be >= 0");
}

double RadicalInverseSequence::next() { return radical_inverse(base_, cursor_++); }

std::int64_t SignSequence::max_abs_partial_sum() const {
    std::int64_t m = 0;
    for (std::int64_t s : partial_sums) m = std::max(m, std::abs(s));
    return m;
}

SignSequence sign_sequence(RadicalInverseSequence seq, std::int64_t count) {
    if (count < 1) throw std::domain_error("sign_sequence: count must be >= 1");
    SignSequence out;
    out.signs.reserve(count);
    out.partial_sums.reserve(count + 1);
    out.partial_sums.push_back(0);
    std::int64_t running = 0;
    for (std::int64_t n = 0; n < count; ++n) {
        int xi = seq.next() >= 0.5 ? 1 : -1;  // the tie z = 1/2 maps to +1
        out.signs.push_back(xi);
        running += xi;
        out.partial_sums.push_back(running);
    }
    return out;
}

namespace {

void check_unit_interval(std::span<const double> points) {
    for (double x : points) {
        if (!(x >= 0.0 && x < 1.0))
            throw std::domain_error("star_discrepancy: point outside [0,1): " +
                                    std::to_string(x));
    }
}

double sorted_discrepancy(const std::vector<double>& sorted) {
    const std::int64_t n = static_cast<std::int64_t>(sorted.size());
    const double inv = 1.0 / static_cast<double>(n);
    double d = 0.0;
    double lower = 0.0;  // (i-1)/N
    for (std::int64_t i = 0; i < n; ++i) {
        const double x = sorted[static_cast<std::size_t>(i)];
        d = std::max(d, std::max(std::abs(x - lower - inv), std::abs(x - lower)));
        lower += inv;
    }
    return d;
}

}  // namespace

double star_discrepancy(std::span<const double> points) {
    if (points.empty()) throw std::domain_error("star_discrepancy: empty point set");
    check_unit_interval(points);
    std::vector<double> sorted(points.begin(), points.end());
    std::sort(sorted.begin(), sorted.end());
    return sorted_discrepancy(sorted);
}

std::vector<double> discrepancy_sweep(int base, std::int64_t offset, std::int64_t count) {
    if (count < 1) throw std::domain_error("discrepancy_sweep: count must be >= 1");
    RadicalInverseSequence seq(base, offset);
    std::vector<double> sorted;
    sorted.reserve(static_cast<std::size_t>(count));
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(count));
    for (std::int64_t n = 1; n <= count; ++n) {
        const double z = seq.next();
        sorted.insert(std::upper_bound(sorted.begin(), sorted.end(), z), z);
        out.push_back(sorted_discrepancy(sorted));
    }
    return out;
}

double discrepancy_bound(int base, std::int64_t count) {
    if (base < 2) throw std::domain_error("discrepancy_bound: base must be >= 2");
    if (count < 2) throw std::domain_error("discrepancy_bound: count must be >= 2");
    const double n = static_cast<double>(count);
    return (3.0 * base - 2.0) / std::log(static_cast<double>(base)) * std::log(n) / n;
}

double partial_sum_bound(int base, std::int64_t count) {
    if (base < 2) throw std::domain_error("partial_sum_bound: base must be >= 2");
    if (count < 2) throw std::domain_error("partial_sum_bound: count must be >= 2");
    return 2.0 * (3.0 * base - 2.0) / std::log(static_cast<double>(base)) *
           std::log(static_cast<double>(count));
}

double weighted_sign_sum(std::span<const double> f_values, const SignSequence& signs) {
    if (static_cast<std::int64_t>(f_values.size()) != signs.count())
        throw std::invalid_argument("weighted_sign_sum: length mismatch");
    double sum = 0.0;
    for (std::size_t k = 0; k < f_values.size(); ++k)
        sum += f_values[k] * signs.signs[k];
    return sum / static_cast<double>(f_values.size());
}

double weighted_sum_bound(int base, double lipschitz, double sup_norm,
                          double horizon, double tau, std::int64_t count) {
    if (base < 2) throw std::domain_error("weighted_sum_bound: base must be >= 2");
    if (horizon <= 0.0 || tau <= 0.0 || count < 2)
        throw std::domain_error("weighted_sum_bound: need horizon > 0, tau > 0, count >= 2");
    const double c3 = 2.0 * (3.0 * base - 2.0) / std::log(static_cast<double>(base)) *
                      (lipschitz + sup_norm / horizon);
    return c3 * tau * std::log(static_cast<double>(count));
}

MeasureDecomposition measure_decomposition(const SignSequence& signs, double tau,
                                           std::span<const double> orders) {
    if (signs.count() == 0)
        throw std::domain_error("measure_decomposition: empty sign sequence");
    if (!(tau > 0.0)) throw std::domain_error("measure_decomposition: tau must be > 0");
    for (double p : orders)
        if (!(p >= 1.0))
            throw std::domain_error("measure_decomposition: orders must be >= 1");

    std::vector<std::int64_t> plus, minus;
    for (std::int64_t n = 0; n < signs.count(); ++n) {
        (signs.signs[static_cast<std::size_t>(n)] > 0 ? plus : minus).push_back(n + 1);
    }

    MeasureDecomposition out;
    out.pair_count = static_cast<std::int64_t>(std::min(plus.size(), minus.size()));
    const std::size_t m = static_cast<std::size_t>(out.pair_count);
    out.plus_support.assign(plus.begin(), plus.begin() + m);
    out.minus_support.assign(minus.begin(), minus.begin() + m);
    const auto& surplus = plus.size() >= minus.size() ? plus : minus;
    out.residual_indices.assign(surplus.begin() + m, surplus.end());
    out.tv_residual = static_cast<std::int64_t>(surplus.size()) - out.pair_count;

    if (out.pair_count > 0) {
        for (double p : orders) {
            double acc = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                const double gap =
                    tau * static_cast<double>(std::abs(out.plus_support[i] - out.minus_support[i]));
                acc += std::pow(gap, p);
            }
            out.wasserstein[p] = std::pow(acc / static_cast<double>(m), 1.0 / p);
        }
    }
    return out;
}

}  // namespace qsplit::lowdisc
