#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "cbo/gp.hpp"
#include "cbo/rng.hpp"

namespace cbo {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }
inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }

// Exploration weight of order sqrt(log(N t / delta)).
struct BetaSchedule {
    double delta = 0.1;
    double kappa = 1.0;
    double cardinality = 2.0;

    double beta(int t) const {
        if (t < 1) throw std::invalid_argument("beta: iteration must be >= 1");
        return kappa * std::sqrt(std::log(cardinality * static_cast<double>(t) / delta));
    }
};

enum class AcquisitionKind { gp_ucb, expected_improvement };

struct AcquisitionSpec {
    AcquisitionKind kind = AcquisitionKind::gp_ucb;
    BetaSchedule schedule;
    double ei_jitter = 0.01;
};

// Minimization form: lower is better.
inline double ucb_score(double mean, double std, double beta) { return mean - beta * std; }

// Expected improvement for minimization; higher is better.
inline double ei_score(double mean, double std, double y_best, double jitter) {
    const double gap = y_best - jitter - mean;
    if (std <= 0.0) return std::max(0.0, gap);
    const double z = gap / std;
    return gap * normal_cdf(z) + std * normal_pdf(z);
}

// Uniform internal convention: an acquisition loss where lower is better.
inline double acquisition_loss(const AcquisitionSpec& spec, const Prediction& p, int t, double y_best) {
    if (spec.kind == AcquisitionKind::gp_ucb) return ucb_score(p.mean, p.std, spec.schedule.beta(t));
    return -ei_score(p.mean, p.std, y_best, spec.ei_jitter);
}

struct SelectOptions {
    std::uint64_t enumeration_cap = std::uint64_t{1} << 16;
    std::uint64_t subsample_size = std::uint64_t{1} << 14;
    int refine_starts = 5;
    int refine_steps = 100;
    std::uint64_t seed = 0;
};

struct SelectionOutcome {
    std::uint64_t rank = 0;
    Eigen::VectorXd point;
    double loss = std::numeric_limits<double>::infinity();
    bool exclusion_lifted = false;
    bool used_subsample = false;
};

// Continuous fallback pieces for candidate sets too large to enumerate: a
// bounding box to search in and a snap back to the nearest candidate.
struct ContinuousRefiner {
    Eigen::VectorXd box_lo;
    Eigen::VectorXd box_hi;
    std::function<std::uint64_t(const Eigen::VectorXd&)> snap;
};

// Deterministic cyclic coordinate descent inside a box; minimizes.
inline Eigen::VectorXd coordinate_descent_box(const std::function<double(const Eigen::VectorXd&)>& loss,
                                              const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                                              Eigen::VectorXd x, int steps) {
    const auto dim = static_cast<int>(x.size());
    Eigen::VectorXd delta = (hi - lo) / 4.0;
    double current = loss(x);
    for (int step = 0; step < steps; ++step) {
        const int i = step % dim;
        bool improved = false;
        for (double sign : {+1.0, -1.0}) {
            Eigen::VectorXd trial = x;
            trial[i] = std::clamp(trial[i] + sign * delta[i], lo[i], hi[i]);
            const double value = loss(trial);
            if (value < current) {
                current = value;
                x = trial;
                improved = true;
                break;
            }
        }
        if (!improved) delta[i] *= 0.6;
    }
    return x;
}

inline Eigen::VectorXd multistart_minimize_box(const std::function<double(const Eigen::VectorXd&)>& loss,
                                               const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, Rng& rng,
                                               int restarts, int steps,
                                               const std::vector<Eigen::VectorXd>& warm_starts = {}) {
    Eigen::VectorXd best;
    double best_value = std::numeric_limits<double>::infinity();
    for (int r = 0; r < restarts; ++r) {
        Eigen::VectorXd start(lo.size());
        if (r < static_cast<int>(warm_starts.size())) {
            start = warm_starts[static_cast<std::size_t>(r)];
        } else {
            for (Eigen::Index i = 0; i < start.size(); ++i) start[i] = rng.uniform(lo[i], hi[i]);
        }
        const Eigen::VectorXd x = coordinate_descent_box(loss, lo, hi, start, steps);
        const double value = loss(x);
        if (value < best_value) {
            best_value = value;
            best = x;
        }
    }
    return best;
}

// Picks the acquisition optimum over a finite candidate set indexed by rank.
// Exact enumeration under the cap; above it, a seeded subsample is scored and
// optionally refined by continuous search + snap. Ties break toward the
// smallest rank; excluded ranks are skipped unless nothing else remains.
template <class PointAt>
SelectionOutcome select_candidate(const GpModel& model, const AcquisitionSpec& spec, std::uint64_t n_candidates,
                                  PointAt&& point_at, const std::unordered_set<std::uint64_t>& exclude, int t,
                                  double y_best, const SelectOptions& opts = {},
                                  const ContinuousRefiner* refiner = nullptr) {
    if (n_candidates == 0) throw std::invalid_argument("select_candidate: empty candidate set");

    SelectionOutcome outcome;
    const auto loss_of_rank = [&](std::uint64_t rank) {
        const Eigen::VectorXd point = point_at(rank);
        return std::make_pair(acquisition_loss(spec, model.predict(point), t, y_best), point);
    };
    const auto consider = [&](std::uint64_t rank, double loss, const Eigen::VectorXd& point) {
        if (loss < outcome.loss || (loss == outcome.loss && rank < outcome.rank && outcome.point.size() > 0)) {
            outcome.rank = rank;
            outcome.loss = loss;
            outcome.point = point;
        }
    };

    if (n_candidates <= opts.enumeration_cap) {
        for (int pass = 0; pass < 2 && outcome.point.size() == 0; ++pass) {
            const bool lifted = (pass == 1);
            if (lifted) outcome.exclusion_lifted = true;
            for (std::uint64_t rank = 0; rank < n_candidates; ++rank) {
                if (!lifted && exclude.contains(rank)) continue;
                const auto [loss, point] = loss_of_rank(rank);
                consider(rank, loss, point);
            }
        }
        if (outcome.point.size() == 0) throw std::runtime_error("select_candidate: no finite acquisition value");
        return outcome;
    }

    outcome.used_subsample = true;
    Rng rng(seed_mix(opts.seed, "candidate-subsample"));
    std::unordered_set<std::uint64_t> drawn;
    const std::uint64_t want = std::min<std::uint64_t>(opts.subsample_size, n_candidates);
    while (drawn.size() < want) drawn.insert(rng.uniform_index(n_candidates));
    std::vector<std::uint64_t> ranks(drawn.begin(), drawn.end());
    std::sort(ranks.begin(), ranks.end());

    struct Scored {
        double loss;
        std::uint64_t rank;
        Eigen::VectorXd point;
    };
    std::vector<Scored> scored;
    scored.reserve(ranks.size());
    bool lifted = false;
    for (int pass = 0; pass < 2 && scored.empty(); ++pass) {
        lifted = (pass == 1);
        if (lifted) outcome.exclusion_lifted = true;
        for (std::uint64_t rank : ranks) {
            if (!lifted && exclude.contains(rank)) continue;
            const auto [loss, point] = loss_of_rank(rank);
            scored.push_back({loss, rank, point});
        }
    }
    if (scored.empty()) throw std::runtime_error("select_candidate: no candidates to score");
    std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
        return a.loss != b.loss ? a.loss < b.loss : a.rank < b.rank;
    });
    for (const auto& s : scored) consider(s.rank, s.loss, s.point);

    if (refiner != nullptr) {
        const auto continuous_loss = [&](const Eigen::VectorXd& x) {
            return acquisition_loss(spec, model.predict(x), t, y_best);
        };
        const int starts = std::min<int>(opts.refine_starts, static_cast<int>(scored.size()));
        for (int s = 0; s < starts; ++s) {
            const Eigen::VectorXd refined = coordinate_descent_box(
                continuous_loss, refiner->box_lo, refiner->box_hi, scored[static_cast<std::size_t>(s)].point,
                opts.refine_steps);
            const std::uint64_t snapped = refiner->snap(refined);
            if (!lifted && exclude.contains(snapped)) continue;
            const auto [loss, point] = loss_of_rank(snapped);
            consider(snapped, loss, point);
        }
    }
    return outcome;
}

}  // namespace cbo
