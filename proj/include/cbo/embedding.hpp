#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>

#include "cbo/rng.hpp"
#include "cbo/space.hpp"

namespace cbo {

inline Eigen::VectorXd bits_to_vector(const BooleanVector& bits) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(bits.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = bits[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
    return v;
}

// Linear map x = R b with R in R^{d x m}, entries i.i.d. U(-1,1) scaled by
// sqrt(3/d). The bounded support keeps the image polytope compact and the
// scaling makes E||R u||^2 = ||u||^2 for any fixed u, so squared distances in
// the embedded space track Hamming distances between Boolean vectors.
class RandomEmbedding {
public:
    RandomEmbedding(int code_length, int target_dim, std::uint64_t seed)
        : code_length_(code_length), target_dim_(target_dim), seed_(seed) {
        if (target_dim < 1) throw std::invalid_argument("RandomEmbedding: target_dim must be >= 1");
        if (code_length < 1) throw std::invalid_argument("RandomEmbedding: code_length must be >= 1");
        std::uint64_t draw_seed = seed;
        for (int attempt = 0; attempt < 8; ++attempt) {
            matrix_ = draw_matrix(target_dim, code_length, draw_seed);
            Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(matrix_);
            if (cod.rank() == std::min<Eigen::Index>(target_dim, code_length)) {
                pseudo_inverse_ = cod.pseudoInverse();
                return;
            }
            // Rank deficiency has probability zero for continuous draws but can
            // be forced by adversarial seeds; redraw with seed+1.
            draw_seed += 1;
            ++regenerations_;
        }
        throw std::runtime_error("RandomEmbedding: could not draw a full-rank matrix");
    }

    static RandomEmbedding for_space(const CategoricalSpace& space, int target_dim, std::uint64_t seed) {
        return RandomEmbedding(space.code_length(), target_dim, seed);
    }

    const Eigen::MatrixXd& matrix() const { return matrix_; }
    const Eigen::MatrixXd& pseudo_inverse() const { return pseudo_inverse_; }
    int code_length() const { return code_length_; }
    int target_dim() const { return target_dim_; }
    std::uint64_t seed() const { return seed_; }
    int regenerations() const { return regenerations_; }

    Eigen::VectorXd embed(const BooleanVector& bits) const {
        if (static_cast<int>(bits.size()) != code_length_)
            throw std::invalid_argument("embed: bit vector length != code length");
        return matrix_ * bits_to_vector(bits);
    }

    // Per-dimension bounds of {R b : b in {0,1}^m}: each coordinate is minimized
    // (maximized) by switching on exactly the negative (positive) entries.
    std::pair<Eigen::VectorXd, Eigen::VectorXd> image_bounding_box() const {
        Eigen::VectorXd lo = matrix_.cwiseMin(0.0).rowwise().sum();
        Eigen::VectorXd hi = matrix_.cwiseMax(0.0).rowwise().sum();
        return {std::move(lo), std::move(hi)};
    }

private:
    static Eigen::MatrixXd draw_matrix(int rows, int cols, std::uint64_t seed) {
        Rng rng(seed_mix(seed, "embedding-matrix"));
        const double scale = std::sqrt(3.0 / static_cast<double>(rows));
        Eigen::MatrixXd r(rows, cols);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) r(i, j) = scale * rng.uniform(-1.0, 1.0);
        return r;
    }

    int code_length_;
    int target_dim_;
    std::uint64_t seed_;
    int regenerations_ = 0;
    Eigen::MatrixXd matrix_;
    Eigen::MatrixXd pseudo_inverse_;
};

// Min-max scale to [0,1] then threshold. A constant vector carries no ordering
// information, so it maps to the all-zero pattern.
inline BooleanVector threshold_scaled(const Eigen::VectorXd& u, double threshold) {
    if (threshold <= 0.0 || threshold >= 1.0) throw std::invalid_argument("threshold must lie in (0,1)");
    BooleanVector bits(static_cast<std::size_t>(u.size()), 0);
    const double lo = u.minCoeff();
    const double hi = u.maxCoeff();
    if (hi == lo) return bits;
    for (Eigen::Index i = 0; i < u.size(); ++i)
        bits[static_cast<std::size_t>(i)] = ((u[i] - lo) / (hi - lo) >= threshold) ? 1 : 0;
    return bits;
}

// Moore-Penrose reconstruction: u = R^+ x, scaled and rounded to {0,1}^m.
inline BooleanVector recon_recover(const RandomEmbedding& e, const Eigen::VectorXd& x, double threshold) {
    if (x.size() != e.target_dim()) throw std::invalid_argument("recon_recover: point has wrong dimension");
    return threshold_scaled(e.pseudo_inverse() * x, threshold);
}

// REMBO-style generative map: an independent Gaussian matrix G in R^{m x d}
// turns a low-dimensional query into Boolean variables via scaling + rounding.
struct RemboMap {
    Eigen::MatrixXd generative;      // m x d
    Eigen::MatrixXd pseudo_inverse;  // d x m, used to place known combinations in the box
};

inline RemboMap make_rembo_map(int code_length, int target_dim, std::uint64_t seed) {
    Rng rng(seed_mix(seed, "rembo-matrix"));
    Eigen::MatrixXd g(code_length, target_dim);
    for (int i = 0; i < code_length; ++i)
        for (int j = 0; j < target_dim; ++j) g(i, j) = rng.normal();
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(g);
    return RemboMap{g, cod.pseudoInverse()};
}

inline BooleanVector rembo_recover(const Eigen::MatrixXd& generative, const Eigen::VectorXd& x, double threshold) {
    if (x.size() != generative.cols()) throw std::invalid_argument("rembo_recover: point has wrong dimension");
    return threshold_scaled(generative * x, threshold);
}

}  // namespace cbo
