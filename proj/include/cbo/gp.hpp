#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>

namespace cbo {

enum class KernelKind { matern52, aitchison_aitken };

inline std::string to_string(KernelKind kind) {
    return kind == KernelKind::matern52 ? "matern52" : "aitchison_aitken";
}

// Shared amplitude sigma_f^2 for both kernels; the AA kernel is the standard
// per-dimension product form for discrete vectors, lambda on agreement and
// (1 - lambda) on disagreement, lambda in (0.5, 1].
struct KernelSpec {
    KernelKind kind = KernelKind::matern52;
    double lengthscale = 1.0;
    double signal_variance = 1.0;
    double aa_lambda = 0.9;

    void validate() const {
        if (signal_variance <= 0.0) throw std::invalid_argument("KernelSpec: signal_variance must be > 0");
        if (kind == KernelKind::matern52 && lengthscale <= 0.0)
            throw std::invalid_argument("KernelSpec: lengthscale must be > 0");
        if (kind == KernelKind::aitchison_aitken && (aa_lambda <= 0.5 || aa_lambda > 1.0))
            throw std::invalid_argument("KernelSpec: aa_lambda must lie in (0.5, 1]");
    }
};

inline double kernel_eval(const KernelSpec& spec, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) throw std::invalid_argument("kernel_eval: dimension mismatch");
    if (spec.kind == KernelKind::matern52) {
        const double r = (a - b).norm();
        const double s = std::sqrt(5.0) * r / spec.lengthscale;
        return spec.signal_variance * (1.0 + s + 5.0 * r * r / (3.0 * spec.lengthscale * spec.lengthscale)) *
               std::exp(-s);
    }
    double prod = spec.signal_variance;
    for (Eigen::Index i = 0; i < a.size(); ++i) prod *= (a[i] == b[i]) ? spec.aa_lambda : (1.0 - spec.aa_lambda);
    return prod;
}

inline Eigen::MatrixXd kernel_gram(const KernelSpec& spec, const Eigen::MatrixXd& points) {
    const Eigen::Index t = points.rows();
    Eigen::MatrixXd gram(t, t);
    for (Eigen::Index i = 0; i < t; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double v = kernel_eval(spec, points.row(i).transpose(), points.row(j).transpose());
            gram(i, j) = v;
            gram(j, i) = v;
        }
    }
    return gram;
}

struct Prediction {
    double mean = 0.0;
    double std = 0.0;
};

// Exact GP regression with a Cholesky factor of K + sigma_n^2 I + jitter I.
// Targets are centered by their mean; the offset is restored in predict().
class GpModel {
public:
    GpModel(KernelSpec spec, double noise_variance, Eigen::MatrixXd inputs, Eigen::VectorXd targets)
        : spec_(spec), noise_variance_(noise_variance), inputs_(std::move(inputs)), targets_(std::move(targets)) {
        spec_.validate();
        if (noise_variance_ <= 0.0) throw std::invalid_argument("GpModel: noise variance must be > 0");
        if (inputs_.rows() != targets_.size() || targets_.size() < 1)
            throw std::invalid_argument("GpModel: inputs and targets disagree");

        target_mean_ = targets_.mean();
        centered_ = targets_.array() - target_mean_;

        const Eigen::MatrixXd gram = kernel_gram(spec_, inputs_);
        const Eigen::Index t = inputs_.rows();
        jitter_ = 1e-6;
        while (true) {
            Eigen::MatrixXd reg = gram;
            reg.diagonal().array() += noise_variance_ + jitter_;
            Eigen::LLT<Eigen::MatrixXd> llt(reg);
            if (llt.info() == Eigen::Success) {
                chol_ = llt.matrixL();
                break;
            }
            jitter_ *= 10.0;
            if (jitter_ > 1e-2)
                throw std::runtime_error("GpModel: covariance not positive definite even with jitter 1e-2 (t = " +
                                         std::to_string(t) + ")");
        }
        alpha_ = chol_.triangularView<Eigen::Lower>().solve(centered_);
        chol_.triangularView<Eigen::Lower>().transpose().solveInPlace(alpha_);
    }

    const KernelSpec& kernel() const { return spec_; }
    double noise_variance() const { return noise_variance_; }
    double jitter() const { return jitter_; }
    const Eigen::MatrixXd& train_inputs() const { return inputs_; }
    const Eigen::VectorXd& train_targets() const { return targets_; }
    double target_mean() const { return target_mean_; }
    const Eigen::MatrixXd& cholesky_factor() const { return chol_; }
    const Eigen::VectorXd& alpha() const { return alpha_; }
    Eigen::Index size() const { return inputs_.rows(); }
    Eigen::Index input_dim() const { return inputs_.cols(); }

    Prediction predict(const Eigen::VectorXd& x) const {
        if (x.size() != inputs_.cols()) throw std::invalid_argument("predict: point has wrong dimension");
        Eigen::VectorXd kvec(inputs_.rows());
        for (Eigen::Index i = 0; i < inputs_.rows(); ++i)
            kvec[i] = kernel_eval(spec_, inputs_.row(i).transpose(), x);
        const Eigen::VectorXd v = chol_.triangularView<Eigen::Lower>().solve(kvec);
        const double mean = kvec.dot(alpha_) + target_mean_;
        const double var = kernel_eval(spec_, x, x) - v.squaredNorm();
        return Prediction{mean, std::sqrt(std::max(var, 0.0))};
    }

    double log_marginal_likelihood() const {
        const double quad = centered_.dot(alpha_);
        const double logdet = chol_.diagonal().array().log().sum();
        return -0.5 * quad - logdet - 0.5 * static_cast<double>(inputs_.rows()) * std::log(2.0 * M_PI);
    }

private:
    KernelSpec spec_;
    double noise_variance_;
    Eigen::MatrixXd inputs_;
    Eigen::VectorXd targets_;
    Eigen::VectorXd centered_;
    double target_mean_ = 0.0;
    double jitter_ = 1e-6;
    Eigen::MatrixXd chol_;
    Eigen::VectorXd alpha_;
};

}  // namespace cbo
