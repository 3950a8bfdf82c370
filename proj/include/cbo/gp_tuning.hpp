#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <tuple>
#include <utility>
#include <vector>

#include "cbo/gp.hpp"
#include "cbo/rng.hpp"

namespace cbo {

struct HyperparameterBounds {
    double lengthscale_lo = 1e-2, lengthscale_hi = 1e3;
    double signal_lo = 1e-3, signal_hi = 1e3;
    double noise_lo = 1e-6, noise_hi = 1.0;
    double aa_lambda_lo = 0.5 + 1e-6, aa_lambda_hi = 1.0;
};

struct TunedHyperparameters {
    KernelSpec spec;
    double noise_variance = 1e-2;
    double log_marginal = -std::numeric_limits<double>::infinity();
    bool fallback_used = false;
};

namespace detail {

// Pairwise geometry is independent of the hyperparameters, so it is computed
// once per dataset and every likelihood evaluation reduces to an elementwise
// Gram build plus one Cholesky.
class MarginalLikelihoodObjective {
public:
    MarginalLikelihoodObjective(KernelKind kind, const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets)
        : kind_(kind), dims_(static_cast<int>(inputs.cols())), centered_(targets.array() - targets.mean()) {
        const Eigen::Index t = inputs.rows();
        pairwise_.resize(t, t);
        for (Eigen::Index i = 0; i < t; ++i) {
            for (Eigen::Index j = 0; j <= i; ++j) {
                double v;
                if (kind_ == KernelKind::matern52) {
                    v = (inputs.row(i) - inputs.row(j)).norm();
                } else {
                    int agree = 0;
                    for (Eigen::Index c = 0; c < inputs.cols(); ++c)
                        if (inputs(i, c) == inputs(j, c)) ++agree;
                    v = static_cast<double>(agree);
                }
                pairwise_(i, j) = v;
                pairwise_(j, i) = v;
            }
        }
    }

    double operator()(const KernelSpec& spec, double noise_variance) const {
        Eigen::MatrixXd gram;
        if (kind_ == KernelKind::matern52) {
            const Eigen::ArrayXXd s = std::sqrt(5.0) / spec.lengthscale * pairwise_.array();
            gram = (spec.signal_variance *
                    (1.0 + s + 5.0 / (3.0 * spec.lengthscale * spec.lengthscale) * pairwise_.array().square()) *
                    (-s).exp())
                       .matrix();
        } else {
            const Eigen::ArrayXXd agree = pairwise_.array();
            gram = (spec.signal_variance * agree.unaryExpr([&](double a) {
                        return std::pow(spec.aa_lambda, a) *
                               std::pow(1.0 - spec.aa_lambda, static_cast<double>(dims_) - a);
                    })).matrix();
        }
        gram.diagonal().array() += noise_variance + 1e-6;
        Eigen::LLT<Eigen::MatrixXd> llt(gram);
        if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
        const Eigen::MatrixXd chol = llt.matrixL();
        Eigen::VectorXd alpha = chol.triangularView<Eigen::Lower>().solve(centered_);
        const double quad = alpha.squaredNorm();
        const double logdet = chol.diagonal().array().log().sum();
        return -0.5 * quad - logdet - 0.5 * static_cast<double>(centered_.size()) * std::log(2.0 * M_PI);
    }

private:
    KernelKind kind_;
    int dims_;
    Eigen::MatrixXd pairwise_;
    Eigen::VectorXd centered_;
};

// Box-projected Nelder-Mead, minimizing.
inline Eigen::VectorXd nelder_mead(const std::function<double(const Eigen::VectorXd&)>& objective,
                                   const Eigen::VectorXd& start, const Eigen::VectorXd& step,
                                   const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, int max_iter) {
    const auto n = static_cast<int>(start.size());
    const auto clamp = [&](Eigen::VectorXd v) {
        for (int i = 0; i < n; ++i) v[i] = std::clamp(v[i], lo[i], hi[i]);
        return v;
    };

    std::vector<Eigen::VectorXd> simplex;
    std::vector<double> values;
    simplex.push_back(clamp(start));
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd v = start;
        v[i] += step[i];
        simplex.push_back(clamp(v));
    }
    for (const auto& v : simplex) values.push_back(objective(v));

    std::vector<int> order(simplex.size());
    for (int it = 0; it < max_iter; ++it) {
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
        std::sort(order.begin(), order.end(), [&](int a, int b) { return values[a] < values[b]; });
        const int best = order.front(), worst = order.back(), second_worst = order[order.size() - 2];
        if (std::abs(values[worst] - values[best]) <= 1e-9 * (1.0 + std::abs(values[best]))) break;

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
        for (int idx : order)
            if (idx != worst) centroid += simplex[static_cast<std::size_t>(idx)];
        centroid /= static_cast<double>(simplex.size() - 1);

        const auto try_point = [&](double coeff) {
            Eigen::VectorXd p = clamp(centroid + coeff * (centroid - simplex[static_cast<std::size_t>(worst)]));
            return std::make_pair(p, objective(p));
        };

        auto [refl, f_refl] = try_point(1.0);
        if (f_refl < values[static_cast<std::size_t>(best)]) {
            auto [expa, f_expa] = try_point(2.0);
            if (f_expa < f_refl) {
                simplex[static_cast<std::size_t>(worst)] = expa;
                values[static_cast<std::size_t>(worst)] = f_expa;
            } else {
                simplex[static_cast<std::size_t>(worst)] = refl;
                values[static_cast<std::size_t>(worst)] = f_refl;
            }
        } else if (f_refl < values[static_cast<std::size_t>(second_worst)]) {
            simplex[static_cast<std::size_t>(worst)] = refl;
            values[static_cast<std::size_t>(worst)] = f_refl;
        } else {
            auto [contr, f_contr] = try_point(-0.5);
            if (f_contr < values[static_cast<std::size_t>(worst)]) {
                simplex[static_cast<std::size_t>(worst)] = contr;
                values[static_cast<std::size_t>(worst)] = f_contr;
            } else {
                for (std::size_t i = 0; i < simplex.size(); ++i) {
                    if (static_cast<int>(i) == best) continue;
                    simplex[i] = clamp(simplex[static_cast<std::size_t>(best)] +
                                       0.5 * (simplex[i] - simplex[static_cast<std::size_t>(best)]));
                    values[i] = objective(simplex[i]);
                }
            }
        }
    }
    const auto best_it = std::min_element(values.begin(), values.end());
    return simplex[static_cast<std::size_t>(best_it - values.begin())];
}

}  // namespace detail

inline KernelSpec default_kernel_spec(KernelKind kind) {
    KernelSpec spec;
    spec.kind = kind;
    spec.lengthscale = 1.0;
    spec.signal_variance = 1.0;
    spec.aa_lambda = 0.9;
    return spec;
}

// Derivative-free marginal-likelihood maximization over log-parameters
// (lambda stays on its natural scale), 5 seeded restarts, deterministic given
// the seed. Falls back to the defaults, flagged, when no restart improves on
// them.
inline TunedHyperparameters optimize_hyperparameters(KernelKind kind, const Eigen::MatrixXd& inputs,
                                                     const Eigen::VectorXd& targets, std::uint64_t seed,
                                                     const HyperparameterBounds& bounds = {}, int restarts = 5,
                                                     int max_iter = 120) {
    if (inputs.rows() < 2) throw std::invalid_argument("optimize_hyperparameters: needs at least 2 observations");
    const detail::MarginalLikelihoodObjective lml(kind, inputs, targets);

    const bool discrete = (kind == KernelKind::aitchison_aitken);
    const int n = 3;
    Eigen::VectorXd lo(n), hi(n), step(n);
    if (discrete) {
        lo << bounds.aa_lambda_lo, std::log(bounds.signal_lo), std::log(bounds.noise_lo);
        hi << bounds.aa_lambda_hi, std::log(bounds.signal_hi), std::log(bounds.noise_hi);
        step << 0.08, 0.7, 0.7;
    } else {
        lo << std::log(bounds.lengthscale_lo), std::log(bounds.signal_lo), std::log(bounds.noise_lo);
        hi << std::log(bounds.lengthscale_hi), std::log(bounds.signal_hi), std::log(bounds.noise_hi);
        step << 0.7, 0.7, 0.7;
    }

    const auto unpack = [&](const Eigen::VectorXd& theta) {
        KernelSpec spec = default_kernel_spec(kind);
        double noise;
        if (discrete) {
            spec.aa_lambda = theta[0];
            spec.signal_variance = std::exp(theta[1]);
            noise = std::exp(theta[2]);
        } else {
            spec.lengthscale = std::exp(theta[0]);
            spec.signal_variance = std::exp(theta[1]);
            noise = std::exp(theta[2]);
        }
        return std::make_pair(spec, noise);
    };
    const auto objective = [&](const Eigen::VectorXd& theta) {
        const auto [spec, noise] = unpack(theta);
        return -lml(spec, noise);
    };

    const KernelSpec default_spec = default_kernel_spec(kind);
    const double default_noise = 1e-2;
    const double initial_lml = lml(default_spec, default_noise);

    Eigen::VectorXd theta0(n);
    if (discrete)
        theta0 << default_spec.aa_lambda, 0.0, std::log(default_noise);
    else
        theta0 << 0.0, 0.0, std::log(default_noise);

    Rng rng(seed_mix(seed, "hyperparameter-restarts"));
    Eigen::VectorXd best_theta = theta0;
    double best_value = std::numeric_limits<double>::infinity();
    for (int r = 0; r < restarts; ++r) {
        Eigen::VectorXd start(n);
        if (r == 0) {
            start = theta0;
        } else {
            for (int i = 0; i < n; ++i) start[i] = rng.uniform(lo[i], hi[i]);
        }
        const Eigen::VectorXd theta = detail::nelder_mead(objective, start, step, lo, hi, max_iter);
        const double value = objective(theta);
        if (value < best_value) {
            best_value = value;
            best_theta = theta;
        }
    }

    TunedHyperparameters result;
    if (!(-best_value > initial_lml)) {
        result.spec = default_spec;
        result.noise_variance = default_noise;
        result.log_marginal = initial_lml;
        result.fallback_used = true;
        return result;
    }
    std::tie(result.spec, result.noise_variance) = unpack(best_theta);
    result.log_marginal = -best_value;
    return result;
}

}  // namespace cbo
