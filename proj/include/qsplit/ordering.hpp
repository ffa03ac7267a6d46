#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "qsplit/lowdisc.hpp"
#include "qsplit/rng.hpp"

namespace qsplit::ordering {

/// A permutation of {1..p}, stored as the image list (pi_1, ..., pi_p).
struct Permutation {
    std::vector<int> image;

    int size() const { return static_cast<int>(image.size()); }
    bool is_valid() const;
    bool operator==(const Permutation&) const = default;

    static Permutation identity(int p);
};

/// One Fisher-Yates shuffle of the reference ordering, consuming p-1 numbers.
///
/// Convention (descending-index Durstenfeld variant): for i = p down to 2,
/// take the next q and swap positions i and j = min(floor(q*i) + 1, i).
/// For p = 2 this makes q >= 1/2 keep the identity ordering, matching the
/// sign-sequence threshold at 1/2. The clamp guards q*i landing exactly on i
/// in floating point.
Permutation fisher_yates(const Permutation& reference, std::span<const double> q_block);

/// +1 for the identity ordering (1,2), -1 for (2,1). Defined only for p = 2.
int two_operator_sign(const Permutation& perm);

/// Stream of per-step permutations sigma^n, driven either by a radical-inverse
/// sequence or by a seeded uniform PRNG. Step n consumes driver numbers
/// n(p-1)+1 .. n(p-1)+p-1, so the stream is reproducible bit-for-bit from its
/// construction parameters.
class OrderingStream {
public:
    static OrderingStream quasi_random(int operator_count, int base,
                                       std::int64_t offset = 0);
    static OrderingStream randomized(int operator_count, std::uint64_t seed);

    Permutation next();

    int operator_count() const { return operator_count_; }
    std::int64_t step_cursor() const { return step_cursor_; }

private:
    OrderingStream(int operator_count,
                   std::variant<lowdisc::RadicalInverseSequence, rng::UniformStream> driver);

    int operator_count_;
    std::int64_t step_cursor_ = 0;
    std::variant<lowdisc::RadicalInverseSequence, rng::UniformStream> driver_;
};

}  // namespace qsplit::ordering
