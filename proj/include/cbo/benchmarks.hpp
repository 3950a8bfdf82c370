#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cbo/rng.hpp"
#include "cbo/space.hpp"

namespace cbo {

enum class BenchmarkKind { thumbs_up, seesaw, bqp, ising, sparse_regression };

inline std::string to_string(BenchmarkKind kind) {
    switch (kind) {
        case BenchmarkKind::thumbs_up: return "thumbs_up";
        case BenchmarkKind::seesaw: return "seesaw";
        case BenchmarkKind::bqp: return "bqp";
        case BenchmarkKind::ising: return "ising";
        case BenchmarkKind::sparse_regression: return "sparse_regression";
    }
    throw std::logic_error("unknown benchmark kind");
}

inline BenchmarkKind benchmark_kind_from_string(const std::string& name) {
    if (name == "thumbs_up") return BenchmarkKind::thumbs_up;
    if (name == "seesaw") return BenchmarkKind::seesaw;
    if (name == "bqp") return BenchmarkKind::bqp;
    if (name == "ising") return BenchmarkKind::ising;
    if (name == "sparse_regression") return BenchmarkKind::sparse_regression;
    throw std::invalid_argument("unknown benchmark kind: " + name);
}

struct ProblemSpec {
    BenchmarkKind kind = BenchmarkKind::thumbs_up;
    int m = 20;                 // thumbs_up / seesaw dimension
    double lambda = 0.0;        // L1 weight (bqp, ising, sparse_regression)
    bool forbid_empty = true;   // seesaw: penalize the all-zero selection
    double bqp_alpha = 10.0;    // correlation length of the BQP generator
    int grid_rows = 3, grid_cols = 3;
    int reg_n = 200, reg_p = 20, reg_s = 5;
    double reg_rho = 0.01, reg_nu = 1.0;
};

struct Optimum {
    Combination combination;
    double value = 0.0;
};

// One concrete objective over Boolean vectors, fixed at construction. All five
// families are deterministic functions of the bits; randomness lives only in
// the seeded instance generator.
class BenchmarkInstance {
public:
    static BenchmarkInstance make(const ProblemSpec& spec, std::uint64_t seed) {
        switch (spec.kind) {
            case BenchmarkKind::thumbs_up: return make_thumbs_up(spec.m);
            case BenchmarkKind::seesaw: return make_seesaw(spec.m, seed, spec.forbid_empty);
            case BenchmarkKind::bqp: return make_bqp(spec.m, spec.lambda, spec.bqp_alpha, seed);
            case BenchmarkKind::ising: return make_ising(spec.grid_rows, spec.grid_cols, spec.lambda, seed);
            case BenchmarkKind::sparse_regression:
                return make_sparse_regression(spec.reg_n, spec.reg_p, spec.reg_s, spec.reg_rho, spec.reg_nu,
                                              spec.lambda, seed);
        }
        throw std::logic_error("unknown benchmark kind");
    }

    static BenchmarkInstance make_thumbs_up(int m) {
        BenchmarkInstance inst(BenchmarkKind::thumbs_up, m, 0);
        return inst;
    }

    static BenchmarkInstance make_seesaw(int m, std::uint64_t seed, bool forbid_empty = true) {
        if (m % 2 != 0) throw std::invalid_argument("seesaw: dimension must be even");
        BenchmarkInstance inst(BenchmarkKind::seesaw, m, seed);
        inst.forbid_empty_ = forbid_empty;
        Rng rng(seed_mix(seed, "seesaw-weights"));
        inst.weights_.resize(m);
        inst.positions_.resize(m);
        for (int i = 0; i < m; ++i) {
            inst.weights_[i] = rng.uniform(0.5, 2.5);
            inst.positions_[i] = (i < m / 2) ? static_cast<double>(i - m / 2) : static_cast<double>(i - m / 2 + 1);
        }
        return inst;
    }

    static BenchmarkInstance make_bqp(int m, double lambda, double alpha, std::uint64_t seed) {
        BenchmarkInstance inst(BenchmarkKind::bqp, m, seed);
        inst.lambda_ = lambda;
        inst.bqp_alpha_ = alpha;
        Rng rng(seed_mix(seed, "bqp-matrix"));
        Eigen::MatrixXd q(m, m);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                const double decay = std::exp(-static_cast<double>((i - j) * (i - j)) / (alpha * alpha));
                q(i, j) = rng.normal() * decay;
            }
        inst.q_ = 0.5 * (q + q.transpose());
        return inst;
    }

    static BenchmarkInstance make_ising(int grid_rows, int grid_cols, double lambda, std::uint64_t seed,
                                        int node_cap = 16) {
        const int nodes = grid_rows * grid_cols;
        if (nodes > node_cap)
            throw std::invalid_argument("ising: " + std::to_string(nodes) + " nodes exceed the enumeration cap " +
                                        std::to_string(node_cap));
        std::vector<std::pair<int, int>> edges;
        for (int r = 0; r < grid_rows; ++r)
            for (int c = 0; c < grid_cols; ++c) {
                const int idx = r * grid_cols + c;
                if (c + 1 < grid_cols) edges.emplace_back(idx, idx + 1);
                if (r + 1 < grid_rows) edges.emplace_back(idx, idx + grid_cols);
            }
        BenchmarkInstance inst(BenchmarkKind::ising, static_cast<int>(edges.size()), seed);
        inst.lambda_ = lambda;
        inst.grid_rows_ = grid_rows;
        inst.grid_cols_ = grid_cols;
        inst.edges_ = std::move(edges);
        Rng rng(seed_mix(seed, "ising-couplings"));
        inst.couplings_.resize(static_cast<Eigen::Index>(inst.edges_.size()));
        for (Eigen::Index e = 0; e < inst.couplings_.size(); ++e) {
            double j = rng.uniform(0.05, 5.0);
            if (rng.uniform() < 0.5) j = -j;
            inst.couplings_[e] = j;
        }
        inst.prepare_ising_cache();
        return inst;
    }

    static BenchmarkInstance make_sparse_regression(int n, int p, int s, double rho, double nu, double lambda,
                                                    std::uint64_t seed) {
        if (s > p) throw std::invalid_argument("sparse_regression: sparsity level exceeds dimension");
        BenchmarkInstance inst(BenchmarkKind::sparse_regression, p, seed);
        inst.lambda_ = lambda;
        inst.reg_n_ = n;
        inst.reg_s_ = s;
        inst.reg_rho_ = rho;
        inst.reg_nu_ = nu;

        // beta-type 2: the first s coefficients are one, the rest zero.
        Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
        beta.head(s).setOnes();

        Eigen::MatrixXd sigma(p, p);
        for (int i = 0; i < p; ++i)
            for (int j = 0; j < p; ++j) sigma(i, j) = std::pow(rho, std::abs(i - j));
        const Eigen::MatrixXd chol = Eigen::LLT<Eigen::MatrixXd>(sigma).matrixL();

        Rng rng(seed_mix(seed, "sparse-regression-data"));
        inst.reg_x_.resize(n, p);
        Eigen::VectorXd z(p);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < p; ++j) z[j] = rng.normal();
            inst.reg_x_.row(i) = (chol * z).transpose();
        }
        const double noise_var = beta.dot(sigma * beta) / nu;
        const double noise_std = std::sqrt(noise_var);
        inst.reg_y_.resize(n);
        for (int i = 0; i < n; ++i) inst.reg_y_[i] = inst.reg_x_.row(i).dot(beta) + noise_std * rng.normal();
        inst.reg_beta_ = beta;
        return inst;
    }

    BenchmarkKind kind() const { return kind_; }
    int dimension() const { return m_; }
    std::uint64_t seed() const { return seed_; }
    double lambda() const { return lambda_; }
    const CategoricalSpace& space() const { return space_; }

    double evaluate(const Combination& c) const {
        space_.validate(c);
        BooleanVector bits(c.size());
        for (std::size_t i = 0; i < c.size(); ++i) bits[i] = static_cast<std::uint8_t>(c[i]);
        return evaluate_bits(bits);
    }

    double evaluate_bits(const BooleanVector& bits) const {
        if (static_cast<int>(bits.size()) != m_) throw std::invalid_argument("evaluate: wrong number of bits");
        switch (kind_) {
            case BenchmarkKind::thumbs_up: {
                int ones = 0;
                for (auto b : bits) ones += b ? 1 : 0;
                return -static_cast<double>(ones);
            }
            case BenchmarkKind::seesaw: {
                double torque = 0.0;
                bool any = false;
                for (int i = 0; i < m_; ++i)
                    if (bits[static_cast<std::size_t>(i)]) {
                        torque += positions_[i] * weights_[i];
                        any = true;
                    }
                if (!any && forbid_empty_) {
                    const double max_torque = positions_.cwiseAbs().dot(weights_);
                    return 10.0 * max_torque;
                }
                return std::abs(torque);
            }
            case BenchmarkKind::bqp: {
                Eigen::VectorXd b(m_);
                double ones = 0.0;
                for (int i = 0; i < m_; ++i) {
                    b[i] = bits[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
                    ones += b[i];
                }
                return b.dot(q_ * b) + lambda_ * ones;
            }
            case BenchmarkKind::ising: return ising_kl(bits) + lambda_ * std::count(bits.begin(), bits.end(), 1);
            case BenchmarkKind::sparse_regression: return regression_validation_mse(bits) + lambda_ * std::count(bits.begin(), bits.end(), 1);
        }
        throw std::logic_error("unknown benchmark kind");
    }

    // Accessors used by tests and serialization.
    const Eigen::VectorXd& seesaw_weights() const { return weights_; }
    const Eigen::VectorXd& seesaw_positions() const { return positions_; }
    const Eigen::MatrixXd& bqp_matrix() const { return q_; }
    const std::vector<std::pair<int, int>>& ising_edges() const { return edges_; }
    const Eigen::VectorXd& ising_couplings() const { return couplings_; }
    const Eigen::MatrixXd& regression_x() const { return reg_x_; }
    const Eigen::VectorXd& regression_y() const { return reg_y_; }
    const Eigen::VectorXd& regression_beta() const { return reg_beta_; }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["kind"] = to_string(kind_);
        j["seed"] = seed_;
        j["m"] = m_;
        j["lambda"] = lambda_;
        switch (kind_) {
            case BenchmarkKind::thumbs_up: break;
            case BenchmarkKind::seesaw:
                j["forbid_empty"] = forbid_empty_;
                j["weights"] = vector_to_json(weights_);
                j["positions"] = vector_to_json(positions_);
                break;
            case BenchmarkKind::bqp:
                j["alpha"] = bqp_alpha_;
                j["q_row_major"] = matrix_to_json(q_);
                break;
            case BenchmarkKind::ising: {
                j["grid_rows"] = grid_rows_;
                j["grid_cols"] = grid_cols_;
                nlohmann::json edges = nlohmann::json::array();
                for (const auto& [a, b] : edges_) edges.push_back({a, b});
                j["edges"] = std::move(edges);
                j["couplings"] = vector_to_json(couplings_);
                break;
            }
            case BenchmarkKind::sparse_regression:
                j["n"] = reg_n_;
                j["s"] = reg_s_;
                j["rho"] = reg_rho_;
                j["nu"] = reg_nu_;
                j["x_row_major"] = matrix_to_json(reg_x_);
                j["y"] = vector_to_json(reg_y_);
                j["beta"] = vector_to_json(reg_beta_);
                break;
        }
        return j;
    }

    static BenchmarkInstance from_json(const nlohmann::json& j) {
        const BenchmarkKind kind = benchmark_kind_from_string(j.at("kind").get<std::string>());
        BenchmarkInstance inst(kind, j.at("m").get<int>(), j.at("seed").get<std::uint64_t>());
        inst.lambda_ = j.at("lambda").get<double>();
        switch (kind) {
            case BenchmarkKind::thumbs_up: break;
            case BenchmarkKind::seesaw:
                inst.forbid_empty_ = j.at("forbid_empty").get<bool>();
                inst.weights_ = vector_from_json(j.at("weights"));
                inst.positions_ = vector_from_json(j.at("positions"));
                if (inst.weights_.size() != inst.m_ || inst.positions_.size() != inst.m_)
                    throw std::runtime_error("seesaw payload disagrees with the stated dimension");
                break;
            case BenchmarkKind::bqp:
                inst.bqp_alpha_ = j.at("alpha").get<double>();
                inst.q_ = matrix_from_json(j.at("q_row_major"), inst.m_, inst.m_);
                break;
            case BenchmarkKind::ising: {
                inst.grid_rows_ = j.at("grid_rows").get<int>();
                inst.grid_cols_ = j.at("grid_cols").get<int>();
                for (const auto& e : j.at("edges")) inst.edges_.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
                inst.couplings_ = vector_from_json(j.at("couplings"));
                const int nodes = inst.grid_rows_ * inst.grid_cols_;
                if (static_cast<int>(inst.edges_.size()) != inst.m_ || inst.couplings_.size() != inst.m_)
                    throw std::runtime_error("ising payload disagrees with the stated dimension");
                for (const auto& [a, b] : inst.edges_)
                    if (a < 0 || b < 0 || a >= nodes || b >= nodes)
                        throw std::runtime_error("ising edge references a node outside the grid");
                inst.prepare_ising_cache();
                break;
            }
            case BenchmarkKind::sparse_regression:
                inst.reg_n_ = j.at("n").get<int>();
                inst.reg_s_ = j.at("s").get<int>();
                inst.reg_rho_ = j.at("rho").get<double>();
                inst.reg_nu_ = j.at("nu").get<double>();
                inst.reg_x_ = matrix_from_json(j.at("x_row_major"), inst.reg_n_, inst.m_);
                inst.reg_y_ = vector_from_json(j.at("y"));
                inst.reg_beta_ = vector_from_json(j.at("beta"));
                break;
        }
        return inst;
    }

    void save(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot open " + path + " for writing");
        out << to_json().dump(2) << '\n';
    }

    static BenchmarkInstance load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open " + path);
        nlohmann::json j;
        in >> j;
        return from_json(j);
    }

private:
    BenchmarkInstance(BenchmarkKind kind, int m, std::uint64_t seed)
        : kind_(kind), m_(m), seed_(seed), space_(CategoricalSpace::binary(m)) {
        if (m < 1) throw std::invalid_argument("benchmark dimension must be >= 1");
    }

    // Energies for p and q are accumulated over edges in the same order, so
    // keeping every edge reproduces p bit-for-bit and the KL term vanishes.
    void prepare_ising_cache() {
        const int nodes = grid_rows_ * grid_cols_;
        const auto n_states = std::size_t{1} << nodes;
        const auto n_edges = edges_.size();
        ising_edge_products_.resize(n_edges);
        for (std::size_t e = 0; e < n_edges; ++e) {
            auto& col = ising_edge_products_[e];
            col.resize(static_cast<Eigen::Index>(n_states));
            const auto [a, b] = edges_[e];
            for (std::size_t state = 0; state < n_states; ++state) {
                const double sa = (state >> a) & 1 ? 1.0 : -1.0;
                const double sb = (state >> b) & 1 ? 1.0 : -1.0;
                col[static_cast<Eigen::Index>(state)] = sa * sb;
            }
        }
        BooleanVector all_ones(n_edges, 1);
        ising_energy_p_ = ising_energy(all_ones);
        ising_log_z_p_ = log_sum_exp(ising_energy_p_);
        ising_prob_p_ = (ising_energy_p_.array() - ising_log_z_p_).exp();
    }

    Eigen::VectorXd ising_energy(const BooleanVector& bits) const {
        Eigen::VectorXd h = Eigen::VectorXd::Zero(ising_edge_products_[0].size());
        for (std::size_t e = 0; e < ising_edge_products_.size(); ++e)
            if (bits[e]) h += couplings_[static_cast<Eigen::Index>(e)] * ising_edge_products_[e];
        return h;
    }

    static double log_sum_exp(const Eigen::VectorXd& v) {
        const double peak = v.maxCoeff();
        return peak + std::log((v.array() - peak).exp().sum());
    }

    double ising_kl(const BooleanVector& bits) const {
        const Eigen::VectorXd energy_q = ising_energy(bits);
        const double log_z_q = log_sum_exp(energy_q);
        const double cross = ising_prob_p_.dot(ising_energy_p_ - energy_q);
        return cross + log_z_q - ising_log_z_p_;
    }

    double regression_validation_mse(const BooleanVector& bits) const {
        const int n = reg_n_;
        const int train_end = n / 2;
        const int val_end = train_end + (n - train_end) / 2;
        std::vector<int> cols;
        for (int j = 0; j < m_; ++j)
            if (bits[static_cast<std::size_t>(j)]) cols.push_back(j);

        const auto y_train = reg_y_.head(train_end);
        const auto y_val = reg_y_.segment(train_end, val_end - train_end);
        if (cols.empty()) return (y_val.array() - y_train.mean()).square().mean();

        // OLS with an intercept; tiny ridge keeps singular selections solvable.
        const auto n_cols = static_cast<int>(cols.size()) + 1;
        Eigen::MatrixXd a_train(train_end, n_cols);
        Eigen::MatrixXd a_val(val_end - train_end, n_cols);
        a_train.col(0).setOnes();
        a_val.col(0).setOnes();
        for (int j = 0; j < static_cast<int>(cols.size()); ++j) {
            a_train.col(j + 1) = reg_x_.col(cols[static_cast<std::size_t>(j)]).head(train_end);
            a_val.col(j + 1) = reg_x_.col(cols[static_cast<std::size_t>(j)]).segment(train_end, val_end - train_end);
        }
        Eigen::MatrixXd normal = a_train.transpose() * a_train;
        normal.diagonal().array() += 1e-8;
        const Eigen::VectorXd w = Eigen::LDLT<Eigen::MatrixXd>(normal).solve(a_train.transpose() * y_train);
        return (a_val * w - y_val).array().square().mean();
    }

    static nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
        nlohmann::json out = nlohmann::json::array();
        for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
        return out;
    }
    static Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
        Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
        for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = j.at(static_cast<std::size_t>(i)).get<double>();
        return v;
    }
    static nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
        nlohmann::json out = nlohmann::json::array();
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
        return out;
    }
    static Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, int rows, int cols) {
        if (static_cast<int>(j.size()) != rows * cols) throw std::runtime_error("matrix payload has wrong size");
        Eigen::MatrixXd m(rows, cols);
        std::size_t idx = 0;
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) m(r, c) = j.at(idx++).get<double>();
        return m;
    }

    BenchmarkKind kind_;
    int m_;
    std::uint64_t seed_;
    CategoricalSpace space_;
    double lambda_ = 0.0;

    bool forbid_empty_ = true;
    Eigen::VectorXd weights_, positions_;

    double bqp_alpha_ = 10.0;
    Eigen::MatrixXd q_;

    int grid_rows_ = 0, grid_cols_ = 0;
    std::vector<std::pair<int, int>> edges_;
    Eigen::VectorXd couplings_;
    std::vector<Eigen::VectorXd> ising_edge_products_;
    Eigen::VectorXd ising_energy_p_, ising_prob_p_;
    double ising_log_z_p_ = 0.0;

    int reg_n_ = 0, reg_s_ = 0;
    double reg_rho_ = 0.0, reg_nu_ = 1.0;
    Eigen::MatrixXd reg_x_;
    Eigen::VectorXd reg_y_, reg_beta_;
};

// Exact enumerated minimum; ties resolve to the smallest rank. Refuses spaces
// beyond the cap so regret bookkeeping is either exact or absent.
inline std::optional<Optimum> brute_force_optimum(const BenchmarkInstance& inst,
                                                  std::uint64_t cap = std::uint64_t{1} << 16) {
    const std::uint64_t n = inst.space().cardinality();
    if (n > cap) return std::nullopt;
    Optimum best;
    best.value = std::numeric_limits<double>::infinity();
    for (std::uint64_t rank = 0; rank < n; ++rank) {
        const Combination c = inst.space().unrank(rank);
        const double value = inst.evaluate(c);
        if (value < best.value) {
            best.value = value;
            best.combination = c;
        }
    }
    return best;
}

}  // namespace cbo
