#pragma once

#include <Eigen/Dense>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cbo/embedding.hpp"
#include "cbo/space.hpp"

namespace cbo {

inline constexpr std::uint64_t kDefaultTableCap = std::uint64_t{1} << 24;

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

class ByteReader {
public:
    explicit ByteReader(std::istream& in) : in_(in) {}
    std::uint32_t u32() { return static_cast<std::uint32_t>(raw(4)); }
    std::uint64_t u64() { return raw(8); }
    double f64() { return std::bit_cast<double>(raw(8)); }
    void bytes(char* dst, std::size_t n) {
        in_.read(dst, static_cast<std::streamsize>(n));
        if (!in_) throw std::runtime_error("lookup table file truncated");
    }

private:
    std::uint64_t raw(int n) {
        std::array<unsigned char, 8> buf{};
        bytes(reinterpret_cast<char*>(buf.data()), static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = n - 1; i >= 0; --i) v = (v << 8) | buf[static_cast<std::size_t>(i)];
        return v;
    }
    std::istream& in_;
};

}  // namespace detail

// Materializes the injective map rank -> R * encode(rank) for every combination
// of the space. Recovery from an embedded point is an exact linear scan for the
// closest stored row; ties break toward the smallest rank.
class LookupTable {
public:
    LookupTable(CategoricalSpace space, RandomEmbedding embedding, std::uint64_t cap = kDefaultTableCap)
        : space_(std::move(space)), embedding_(std::move(embedding)) {
        if (space_.code_length() != embedding_.code_length())
            throw std::invalid_argument("LookupTable: embedding built for a different code length");
        const std::uint64_t n = space_.cardinality();
        if (n > cap)
            throw std::invalid_argument("LookupTable: space cardinality " + std::to_string(n) +
                                        " exceeds the enumeration cap " + std::to_string(cap));
        entries_.resize(static_cast<Eigen::Index>(n), embedding_.target_dim());
        for (std::uint64_t rank = 0; rank < n; ++rank) {
            const BooleanVector bits = rank_to_bits(rank, space_.code_length());
            entries_.row(static_cast<Eigen::Index>(rank)) = embedding_.embed(bits).transpose();
        }
    }

    const CategoricalSpace& space() const { return space_; }
    const RandomEmbedding& embedding() const { return embedding_; }
    std::uint64_t size() const { return static_cast<std::uint64_t>(entries_.rows()); }
    int point_dim() const { return embedding_.target_dim(); }

    Eigen::VectorXd point_of(std::uint64_t rank) const {
        if (rank >= size()) throw std::out_of_range("LookupTable: rank out of range");
        return entries_.row(static_cast<Eigen::Index>(rank)).transpose();
    }

    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>& points() const {
        return entries_;
    }

    std::uint64_t nearest_rank(const Eigen::VectorXd& x) const {
        if (x.size() != entries_.cols()) throw std::invalid_argument("nearest_rank: point has wrong dimension");
        if (entries_.rows() == 0) throw std::logic_error("nearest_rank: empty table");
        std::uint64_t best_rank = 0;
        double best_dist = (entries_.row(0).transpose() - x).squaredNorm();
        for (Eigen::Index r = 1; r < entries_.rows(); ++r) {
            const double dist = (entries_.row(r).transpose() - x).squaredNorm();
            if (dist < best_dist) {
                best_dist = dist;
                best_rank = static_cast<std::uint64_t>(r);
            }
        }
        return best_rank;
    }

    Combination nearest(const Eigen::VectorXd& x) const { return space_.unrank(nearest_rank(x)); }

    // Flat binary layout: magic "CBOL1", then k, arities, m, d, seed, N
    // (little-endian integers), then N rows of d little-endian IEEE doubles.
    void save(const std::string& path) const {
        std::string header;
        header.append("CBOL1");
        detail::put_u32(header, static_cast<std::uint32_t>(space_.num_variables()));
        for (std::int32_t a : space_.arities()) detail::put_u32(header, static_cast<std::uint32_t>(a));
        detail::put_u32(header, static_cast<std::uint32_t>(space_.code_length()));
        detail::put_u32(header, static_cast<std::uint32_t>(embedding_.target_dim()));
        detail::put_u64(header, embedding_.seed());
        detail::put_u64(header, size());

        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + path + " for writing");
        out.write(header.data(), static_cast<std::streamsize>(header.size()));
        std::string row;
        for (Eigen::Index r = 0; r < entries_.rows(); ++r) {
            row.clear();
            for (Eigen::Index c = 0; c < entries_.cols(); ++c) detail::put_f64(row, entries_(r, c));
            out.write(row.data(), static_cast<std::streamsize>(row.size()));
        }
        if (!out) throw std::runtime_error("short write to " + path);
    }

    static LookupTable load(const std::string& path, std::uint64_t cap = kDefaultTableCap) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw std::runtime_error("cannot open " + path);
        detail::ByteReader reader(in);

        std::array<char, 5> magic{};
        reader.bytes(magic.data(), magic.size());
        if (std::string_view(magic.data(), magic.size()) != "CBOL1")
            throw std::runtime_error(path + ": not a CBOL1 lookup table");

        const std::uint32_t k = reader.u32();
        std::vector<std::int32_t> arities(k);
        for (auto& a : arities) a = static_cast<std::int32_t>(reader.u32());
        const std::uint32_t m = reader.u32();
        const std::uint32_t d = reader.u32();
        const std::uint64_t seed = reader.u64();
        const std::uint64_t n = reader.u64();

        CategoricalSpace space(arities);
        if (static_cast<std::uint32_t>(space.code_length()) != m)
            throw std::runtime_error(path + ": stored code length disagrees with arities");
        if (n != space.cardinality()) throw std::runtime_error(path + ": stored row count disagrees with arities");

        LookupTable table(space, RandomEmbedding(static_cast<int>(m), static_cast<int>(d), seed), cap);
        for (Eigen::Index r = 0; r < table.entries_.rows(); ++r)
            for (Eigen::Index c = 0; c < table.entries_.cols(); ++c)
                if (reader.f64() != table.entries_(r, c))
                    throw std::runtime_error(path + ": stored rows disagree with the recomputed embedding");
        return table;
    }

private:
    CategoricalSpace space_;
    RandomEmbedding embedding_;
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> entries_;
};

}  // namespace cbo
