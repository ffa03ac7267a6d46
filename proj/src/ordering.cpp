#include "qsplit/ordering.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace qsplit::ordering {

bool Permutation::is_valid() const {
    const int p = size();
    if (p == 0) return false;
    std::vector<bool> seen(static_cast<std::size_t>(p), false);
    for (int v : image) {
        if (v < 1 || v > p || seen[static_cast<std::size_t>(v - 1)]) return false;
        seen[static_cast<std::size_t>(v - 1)] = true;
    }
    return true;
}

Permutation Permutation::identity(int p) {
    Permutation out;
    out.image.resize(static_cast<std::size_t>(p));
    for (int i = 0; i < p; ++i) out.image[static_cast<std::size_t>(i)] = i + 1;
    return out;
}

Permutation fisher_yates(const Permutation& reference, std::span<const double> q_block) {
    const int p = reference.size();
    if (static_cast<int>(q_block.size()) != p - 1)
        throw std::invalid_argument("fisher_yates: q block must hold p-1 numbers");
    for (double q : q_block)
        if (!(q >= 0.0 && q < 1.0))
            throw std::invalid_argument("fisher_yates: driver number outside [0,1)");

    Permutation out = reference;
    std::size_t used = 0;
    for (int i = p; i >= 2; --i) {
        const double q = q_block[used++];
        const int j = std::min(static_cast<int>(std::floor(q * i)) + 1, i);
        std::swap(out.image[static_cast<std::size_t>(i - 1)],
                  out.image[static_cast<std::size_t>(j - 1)]);
    }
    return out;
}

int two_operator_sign(const Permutation& perm) {
    if (perm.size() != 2 || !perm.is_valid())
        throw std::invalid_argument("two_operator_sign: need a permutation of {1,2}");
    return perm.image[0] == 1 ? 1 : -1;
}

OrderingStream::OrderingStream(
    int operator_count,
    std::variant<lowdisc::RadicalInverseSequence, rng::UniformStream> driver)
    : operator_count_(operator_count), driver_(std::move(driver)) {
    if (operator_count < 2)
        throw std::invalid_argument("OrderingStream: need at least two operators");
}

OrderingStream OrderingStream::quasi_random(int operator_count, int base,
                                            std::int64_t offset) {
    return OrderingStream(operator_count, lowdisc::RadicalInverseSequence(base, offset));
}

OrderingStream OrderingStream::randomized(int operator_count, std::uint64_t seed) {
    return OrderingStream(operator_count, rng::UniformStream(seed));
}

Permutation OrderingStream::next() {
    std::vector<double> block(static_cast<std::size_t>(operator_count_ - 1));
    for (double& q : block) {
        q = std::visit([](auto& d) { return d.next(); }, driver_);
    }
    ++step_cursor_;
    return fisher_yates(Permutation::identity(operator_count_), block);
}

}  // namespace qsplit::ordering
