#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "cbo/rng.hpp"

namespace cbo {

using Combination = std::vector<std::int32_t>;
using BooleanVector = std::vector<std::uint8_t>;

// k categorical variables with arities N_1..N_k. Combinations are ranked in
// mixed radix (first variable most significant) and encoded as the m-bit
// big-endian binary of the rank, where m is the smallest integer with 2^m >= N.
class CategoricalSpace {
public:
    explicit CategoricalSpace(std::vector<std::int32_t> arities) : arities_(std::move(arities)) {
        if (arities_.empty()) throw std::invalid_argument("CategoricalSpace: needs at least one variable");
        cardinality_ = 1;
        for (std::int32_t a : arities_) {
            if (a < 2) throw std::invalid_argument("CategoricalSpace: every arity must be >= 2");
            if (__builtin_mul_overflow(cardinality_, static_cast<std::uint64_t>(a), &cardinality_))
                throw std::overflow_error("CategoricalSpace: cardinality overflows 64 bits");
        }
        code_length_ = 0;
        while (code_length_ < 64 && (std::uint64_t{1} << code_length_) < cardinality_) ++code_length_;
        if ((code_length_ == 64) || (std::uint64_t{1} << code_length_) < cardinality_)
            throw std::overflow_error("CategoricalSpace: code length exceeds 63 bits");
    }

    static CategoricalSpace binary(int m) { return CategoricalSpace(std::vector<std::int32_t>(m, 2)); }

    std::size_t num_variables() const { return arities_.size(); }
    const std::vector<std::int32_t>& arities() const { return arities_; }
    std::uint64_t cardinality() const { return cardinality_; }
    int code_length() const { return code_length_; }

    bool contains(const Combination& c) const {
        if (c.size() != arities_.size()) return false;
        for (std::size_t i = 0; i < c.size(); ++i)
            if (c[i] < 0 || c[i] >= arities_[i]) return false;
        return true;
    }

    void validate(const Combination& c) const {
        if (!contains(c)) throw std::invalid_argument("combination does not belong to this space");
    }

    std::uint64_t rank_of(const Combination& c) const {
        validate(c);
        std::uint64_t rank = 0;
        for (std::size_t i = 0; i < c.size(); ++i)
            rank = rank * static_cast<std::uint64_t>(arities_[i]) + static_cast<std::uint64_t>(c[i]);
        return rank;
    }

    Combination unrank(std::uint64_t rank) const {
        if (rank >= cardinality_) throw std::out_of_range("rank outside the space");
        Combination c(arities_.size());
        for (std::size_t i = arities_.size(); i-- > 0;) {
            const auto a = static_cast<std::uint64_t>(arities_[i]);
            c[i] = static_cast<std::int32_t>(rank % a);
            rank /= a;
        }
        return c;
    }

    Combination sample(Rng& rng) const {
        Combination c(arities_.size());
        for (std::size_t i = 0; i < c.size(); ++i)
            c[i] = static_cast<std::int32_t>(rng.uniform_index(static_cast<std::uint64_t>(arities_[i])));
        return c;
    }

    bool operator==(const CategoricalSpace& other) const { return arities_ == other.arities_; }

private:
    std::vector<std::int32_t> arities_;
    std::uint64_t cardinality_ = 0;
    int code_length_ = 0;
};

inline BooleanVector rank_to_bits(std::uint64_t rank, int m) {
    BooleanVector bits(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) bits[static_cast<std::size_t>(i)] = (rank >> (m - 1 - i)) & 1ULL;
    return bits;
}

inline std::uint64_t bits_to_rank(const BooleanVector& bits) {
    std::uint64_t rank = 0;
    for (std::uint8_t bit : bits) rank = (rank << 1) | (bit ? 1ULL : 0ULL);
    return rank;
}

inline BooleanVector encode_boolean(const CategoricalSpace& space, const Combination& c) {
    return rank_to_bits(space.rank_of(c), space.code_length());
}

// Inverse of encode_boolean. Bit patterns whose rank falls outside [0, N) do
// not correspond to any combination (possible whenever 2^m > N).
inline Combination decode_boolean(const CategoricalSpace& space, const BooleanVector& bits) {
    if (static_cast<int>(bits.size()) != space.code_length())
        throw std::invalid_argument("decode_boolean: bit vector length != code length");
    const std::uint64_t rank = bits_to_rank(bits);
    if (rank >= space.cardinality())
        throw std::out_of_range("decode_boolean: bit pattern outside the image (rank " +
                                std::to_string(rank) + " >= " + std::to_string(space.cardinality()) + ")");
    return space.unrank(rank);
}

}  // namespace cbo
