#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "cbo/acquisition.hpp"
#include "cbo/benchmarks.hpp"
#include "cbo/embedding.hpp"
#include "cbo/gp.hpp"
#include "cbo/gp_tuning.hpp"
#include "cbo/lookup_table.hpp"
#include "cbo/rng.hpp"
#include "cbo/space.hpp"

namespace cbo {

enum class StrategyKind { random, bin_aa, bin_round, dec_round, rembo, cbo_recon, cbo_lookup };

inline std::string to_string(StrategyKind kind) {
    switch (kind) {
        case StrategyKind::random: return "random";
        case StrategyKind::bin_aa: return "bin_aa";
        case StrategyKind::bin_round: return "bin_round";
        case StrategyKind::dec_round: return "dec_round";
        case StrategyKind::rembo: return "rembo";
        case StrategyKind::cbo_recon: return "cbo_recon";
        case StrategyKind::cbo_lookup: return "cbo_lookup";
    }
    throw std::logic_error("unknown strategy kind");
}

inline StrategyKind strategy_kind_from_string(const std::string& name) {
    if (name == "random") return StrategyKind::random;
    if (name == "bin_aa") return StrategyKind::bin_aa;
    if (name == "bin_round") return StrategyKind::bin_round;
    if (name == "dec_round") return StrategyKind::dec_round;
    if (name == "rembo") return StrategyKind::rembo;
    if (name == "cbo_recon") return StrategyKind::cbo_recon;
    if (name == "cbo_lookup") return StrategyKind::cbo_lookup;
    throw std::invalid_argument("unknown strategy kind: " + name);
}

inline double default_threshold(StrategyKind kind) {
    switch (kind) {
        case StrategyKind::bin_round: return 0.5;
        case StrategyKind::rembo: return 0.25;
        case StrategyKind::cbo_recon: return 0.02;
        default: return 0.0;
    }
}

struct StrategyConfig {
    StrategyKind kind = StrategyKind::cbo_lookup;
    int embedding_dim = 20;
    double threshold = 0.0;  // 0 means: use the per-kind default
    AcquisitionSpec acquisition;
    bool exclude_observed = true;
    int refit_every = 1;
    std::uint64_t enumeration_cap = std::uint64_t{1} << 16;
    std::uint64_t subsample_size = std::uint64_t{1} << 14;
    int search_restarts = 10;
    int search_steps = 100;
    std::uint64_t table_cap = kDefaultTableCap;

    double rounding_threshold() const { return threshold > 0.0 ? threshold : default_threshold(kind); }
};

inline StrategyConfig make_strategy_config(StrategyKind kind) {
    StrategyConfig config;
    config.kind = kind;
    config.acquisition.kind = (kind == StrategyKind::bin_round || kind == StrategyKind::dec_round)
                                  ? AcquisitionKind::expected_improvement
                                  : AcquisitionKind::gp_ucb;
    return config;
}

struct ObservationHistory {
    std::vector<Combination> combinations;
    std::vector<double> targets;

    std::size_t size() const { return targets.size(); }
    bool empty() const { return targets.empty(); }

    void append(Combination c, double y) {
        if (targets.empty() || y < best_value_) {
            best_value_ = y;
            best_index_ = targets.size();
        }
        combinations.push_back(std::move(c));
        targets.push_back(y);
    }

    double best_value() const {
        if (targets.empty()) throw std::logic_error("history is empty");
        return best_value_;
    }
    const Combination& best_combination() const {
        if (targets.empty()) throw std::logic_error("history is empty");
        return combinations[best_index_];
    }

private:
    double best_value_ = std::numeric_limits<double>::infinity();
    std::size_t best_index_ = 0;
};

// One suggest/observe interface for all seven methods. A strategy owns the
// per-run state the history cannot carry: its random matrices, lookup table,
// GP training representation and tuned hyperparameters.
class Strategy {
public:
    Strategy(CategoricalSpace space, StrategyConfig config, std::uint64_t seed)
        : space_(std::move(space)), config_(config), seed_(seed), rng_(seed_mix(seed, "strategy")) {
        config_.acquisition.schedule.cardinality = static_cast<double>(space_.cardinality());
    }
    virtual ~Strategy() = default;

    virtual std::string name() const = 0;
    virtual Combination suggest(const ObservationHistory& history) = 0;

    virtual void observe(const Combination& c, double y) {
        space_.validate(c);
        const std::uint64_t rank = space_.rank_of(c);
        observed_ranks_.insert(rank);
        inputs_.push_back(representation(c));
        targets_.push_back(y);
    }

    const CategoricalSpace& space() const { return space_; }
    const StrategyConfig& config() const { return config_; }
    const std::vector<std::string>& flags() const { return flags_; }

protected:
    // GP training input standing in for an observed combination.
    virtual Eigen::VectorXd representation(const Combination& c) {
        return bits_to_vector(encode_boolean(space_, c));
    }

    KernelKind kernel_kind() const {
        return config_.kind == StrategyKind::bin_aa ? KernelKind::aitchison_aitken : KernelKind::matern52;
    }

    GpModel fitted_model(int t) {
        if (inputs_.empty()) throw std::logic_error("suggest before any observation");
        const auto rows = static_cast<Eigen::Index>(inputs_.size());
        Eigen::MatrixXd x(rows, inputs_.front().size());
        Eigen::VectorXd y(rows);
        for (Eigen::Index i = 0; i < rows; ++i) {
            x.row(i) = inputs_[static_cast<std::size_t>(i)].transpose();
            y[i] = targets_[static_cast<std::size_t>(i)];
        }
        if (rows >= 2 && (!tuned_.has_value() || (t - 1) % std::max(1, config_.refit_every) == 0)) {
            tuned_ = optimize_hyperparameters(kernel_kind(), x, y, seed_mix(seed_, "hyperparameters", t));
            if (tuned_->fallback_used) flag("hp-fallback", t);
        }
        if (!tuned_.has_value()) {
            TunedHyperparameters defaults;
            defaults.spec = default_kernel_spec(kernel_kind());
            tuned_ = defaults;
        }
        return GpModel(tuned_->spec, tuned_->noise_variance, std::move(x), std::move(y));
    }

    Combination decode_clamped(const BooleanVector& bits, int t) {
        std::uint64_t rank = bits_to_rank(bits);
        if (rank >= space_.cardinality()) {
            rank %= space_.cardinality();
            flag("rank-clamped", t);
        }
        return space_.unrank(rank);
    }

    SelectOptions select_options(int t) const {
        SelectOptions opts;
        opts.enumeration_cap = config_.enumeration_cap;
        opts.subsample_size = config_.subsample_size;
        opts.seed = seed_mix(seed_, "subsample", t);
        return opts;
    }

    const std::unordered_set<std::uint64_t>& exclusions() const {
        static const std::unordered_set<std::uint64_t> kEmpty;
        return config_.exclude_observed ? observed_ranks_ : kEmpty;
    }

    void flag(const std::string& what, int t) { flags_.push_back(what + "@t=" + std::to_string(t)); }

    CategoricalSpace space_;
    StrategyConfig config_;
    std::uint64_t seed_;
    Rng rng_;
    std::vector<Eigen::VectorXd> inputs_;
    std::vector<double> targets_;
    std::unordered_set<std::uint64_t> observed_ranks_;
    std::optional<TunedHyperparameters> tuned_;
    std::vector<std::string> flags_;
};

class RandomStrategy final : public Strategy {
public:
    using Strategy::Strategy;
    std::string name() const override { return "random"; }
    Combination suggest(const ObservationHistory&) override { return space_.sample(rng_); }
};

// AA-kernel GP directly on Boolean vectors; GP-UCB over the enumerated
// candidate ranks (seeded subsample above the cap).
class BinAaStrategy final : public Strategy {
public:
    using Strategy::Strategy;
    std::string name() const override { return "bin_aa"; }

    Combination suggest(const ObservationHistory& history) override {
        const int t = static_cast<int>(history.size());
        const GpModel model = fitted_model(t);
        const int m = space_.code_length();
        const auto point_at = [&](std::uint64_t rank) { return bits_to_vector(rank_to_bits(rank, m)); };
        const SelectionOutcome pick = select_candidate(model, config_.acquisition, space_.cardinality(), point_at,
                                                       exclusions(), t, history.best_value(), select_options(t));
        if (pick.exclusion_lifted) flag("exclusion-lifted", t);
        if (pick.used_subsample) flag("subsample", t);
        return space_.unrank(pick.rank);
    }
};

// Matern GP on the unit cube; EI by seeded multi-start coordinate descent,
// then rounding at the configured threshold.
class BinRoundStrategy final : public Strategy {
public:
    using Strategy::Strategy;
    std::string name() const override { return "bin_round"; }

    Combination suggest(const ObservationHistory& history) override {
        const int t = static_cast<int>(history.size());
        const GpModel model = fitted_model(t);
        const double y_best = history.best_value();
        const auto loss = [&](const Eigen::VectorXd& x) {
            return acquisition_loss(config_.acquisition, model.predict(x), t, y_best);
        };
        const int m = space_.code_length();
        const Eigen::VectorXd lo = Eigen::VectorXd::Zero(m);
        const Eigen::VectorXd hi = Eigen::VectorXd::Ones(m);
        const Eigen::VectorXd x =
            multistart_minimize_box(loss, lo, hi, rng_, config_.search_restarts, config_.search_steps);
        BooleanVector bits(static_cast<std::size_t>(m), 0);
        for (int i = 0; i < m; ++i) bits[static_cast<std::size_t>(i)] = x[i] >= config_.rounding_threshold() ? 1 : 0;
        return decode_clamped(bits, t);
    }
};

// GP over decimal codes of the combinations; EI on a seeded grid plus points
// around the observed codes, then round-and-clamp.
class DecRoundStrategy final : public Strategy {
public:
    using Strategy::Strategy;
    std::string name() const override { return "dec_round"; }

    Combination suggest(const ObservationHistory& history) override {
        const int t = static_cast<int>(history.size());
        const GpModel model = fitted_model(t);
        const double y_best = history.best_value();
        const double hi = std::pow(2.0, space_.code_length()) - 1.0;

        std::vector<double> candidates;
        candidates.reserve(4096 + 5 * history.size());
        for (int i = 0; i < 4096; ++i) candidates.push_back(rng_.uniform(0.0, hi));
        for (const Combination& c : history.combinations) {
            const auto code = static_cast<double>(space_.rank_of(c));
            for (int off = -2; off <= 2; ++off)
                candidates.push_back(std::clamp(code + static_cast<double>(off), 0.0, hi));
        }

        double best_loss = std::numeric_limits<double>::infinity();
        double best_code = 0.0;
        Eigen::VectorXd point(1);
        for (double code : candidates) {
            point[0] = code;
            const double loss = acquisition_loss(config_.acquisition, model.predict(point), t, y_best);
            if (loss < best_loss) {
                best_loss = loss;
                best_code = code;
            }
        }
        const auto rounded = static_cast<std::uint64_t>(
            std::clamp<double>(std::llround(best_code), 0.0, static_cast<double>(space_.cardinality() - 1)));
        return space_.unrank(rounded);
    }

protected:
    Eigen::VectorXd representation(const Combination& c) override {
        Eigen::VectorXd v(1);
        v[0] = static_cast<double>(space_.rank_of(c));
        return v;
    }
};

// Generative random-matrix baseline: GP-UCB over the box [-1,1]^d, recovery by
// scaling + rounding through an independent Gaussian matrix. The GP trains on
// the continuous queries; observations without one (the shared initialization)
// enter at the least-squares preimage of their Boolean vector.
class RemboStrategy final : public Strategy {
public:
    RemboStrategy(CategoricalSpace space, StrategyConfig config, std::uint64_t seed)
        : Strategy(std::move(space), config, seed),
          map_(make_rembo_map(space_.code_length(), config_.embedding_dim, seed_mix(seed, "rembo"))) {}

    std::string name() const override { return "rembo"; }

    Combination suggest(const ObservationHistory& history) override {
        const int t = static_cast<int>(history.size());
        const GpModel model = fitted_model(t);
        const double y_best = history.best_value();
        const auto loss = [&](const Eigen::VectorXd& x) {
            return acquisition_loss(config_.acquisition, model.predict(x), t, y_best);
        };
        const int d = config_.embedding_dim;
        const Eigen::VectorXd lo = Eigen::VectorXd::Constant(d, -1.0);
        const Eigen::VectorXd hi = Eigen::VectorXd::Constant(d, 1.0);
        const Eigen::VectorXd x =
            multistart_minimize_box(loss, lo, hi, rng_, config_.search_restarts, config_.search_steps);
        pending_query_ = x;
        return decode_clamped(rembo_recover(map_.generative, x, config_.rounding_threshold()), t);
    }

    void observe(const Combination& c, double y) override {
        space_.validate(c);
        observed_ranks_.insert(space_.rank_of(c));
        if (pending_query_.has_value()) {
            inputs_.push_back(*pending_query_);
            pending_query_.reset();
        } else {
            Eigen::VectorXd x = map_.pseudo_inverse * bits_to_vector(encode_boolean(space_, c));
            inputs_.push_back(x.cwiseMax(-1.0).cwiseMin(1.0));
        }
        targets_.push_back(y);
    }

private:
    RemboMap map_;
    std::optional<Eigen::VectorXd> pending_query_;
};

// GP over the embedded observations; GP-UCB on the bounding box of the image
// polytope, recovery by Moore-Penrose reconstruction.
class CboReconStrategy final : public Strategy {
public:
    CboReconStrategy(CategoricalSpace space, StrategyConfig config, std::uint64_t seed)
        : Strategy(std::move(space), config, seed),
          embedding_(RandomEmbedding::for_space(space_, config_.embedding_dim, seed_mix(seed, "embedding"))) {
        if (embedding_.regenerations() > 0)
            flags_.push_back("embedding-regenerated x" + std::to_string(embedding_.regenerations()));
    }

    std::string name() const override { return "cbo_recon"; }

    Combination suggest(const ObservationHistory& history) override {
        const int t = static_cast<int>(history.size());
        const GpModel model = fitted_model(t);
        const double y_best = history.best_value();
        const auto loss = [&](const Eigen::VectorXd& x) {
            return acquisition_loss(config_.acquisition, model.predict(x), t, y_best);
        };
        const auto [lo, hi] = embedding_.image_bounding_box();
        const Eigen::VectorXd x =
            multistart_minimize_box(loss, lo, hi, rng_, config_.search_restarts, config_.search_steps);
        return decode_clamped(recon_recover(embedding_, x, config_.rounding_threshold()), t);
    }

protected:
    Eigen::VectorXd representation(const Combination& c) override {
        return embedding_.embed(encode_boolean(space_, c));
    }

private:
    RandomEmbedding embedding_;
};

// The table-backed method: acquisition restricted to embedded candidates,
// recovery is exact by construction.
class CboLookupStrategy final : public Strategy {
public:
    CboLookupStrategy(CategoricalSpace space, StrategyConfig config, std::uint64_t seed)
        : Strategy(std::move(space), config, seed),
          table_(space_, RandomEmbedding::for_space(space_, config_.embedding_dim, seed_mix(seed, "embedding")),
                 config_.table_cap) {
        if (table_.embedding().regenerations() > 0)
            flags_.push_back("embedding-regenerated x" + std::to_string(table_.embedding().regenerations()));
    }

    std::string name() const override { return "cbo_lookup"; }

    const LookupTable& table() const { return table_; }

    Combination suggest(const ObservationHistory& history) override {
        const int t = static_cast<int>(history.size());
        const GpModel model = fitted_model(t);
        const auto point_at = [&](std::uint64_t rank) { return table_.point_of(rank); };
        const auto [lo, hi] = table_.embedding().image_bounding_box();
        ContinuousRefiner refiner{lo, hi, [&](const Eigen::VectorXd& x) { return table_.nearest_rank(x); }};
        const SelectionOutcome pick =
            select_candidate(model, config_.acquisition, table_.size(), point_at, exclusions(), t,
                             history.best_value(), select_options(t), &refiner);
        if (pick.exclusion_lifted) flag("exclusion-lifted", t);
        if (pick.used_subsample) flag("subsample", t);
        return space_.unrank(pick.rank);
    }

protected:
    Eigen::VectorXd representation(const Combination& c) override { return table_.point_of(space_.rank_of(c)); }

private:
    LookupTable table_;
};

inline std::unique_ptr<Strategy> make_strategy(const CategoricalSpace& space, const StrategyConfig& config,
                                               std::uint64_t seed) {
    switch (config.kind) {
        case StrategyKind::random: return std::make_unique<RandomStrategy>(space, config, seed);
        case StrategyKind::bin_aa: return std::make_unique<BinAaStrategy>(space, config, seed);
        case StrategyKind::bin_round: return std::make_unique<BinRoundStrategy>(space, config, seed);
        case StrategyKind::dec_round: return std::make_unique<DecRoundStrategy>(space, config, seed);
        case StrategyKind::rembo: return std::make_unique<RemboStrategy>(space, config, seed);
        case StrategyKind::cbo_recon: return std::make_unique<CboReconStrategy>(space, config, seed);
        case StrategyKind::cbo_lookup: return std::make_unique<CboLookupStrategy>(space, config, seed);
    }
    throw std::logic_error("unknown strategy kind");
}

struct RunRecord {
    int iteration = 0;  // 0 is the shared initialization
    Combination combination;
    double objective = 0.0;
    double best_so_far = 0.0;
    std::optional<double> instant_regret;
    std::optional<double> cumulative_regret;
};

struct RunTrace {
    std::string method;
    int repeat = 0;
    std::uint64_t seed = 0;
    std::vector<RunRecord> records;
    Combination best_combination;
    double best_value = 0.0;
    double wall_time_seconds = 0.0;
    std::vector<std::string> flags;
    bool aborted = false;
};

inline double instantaneous_regret(double objective, double optimum_value) { return objective - optimum_value; }

// R_t over the query iterations; the shared initialization is reported with
// r_0 but does not count toward the cumulative sum.
inline void attach_regrets(RunTrace& trace, const Optimum& optimum) {
    double running = 0.0;
    for (RunRecord& rec : trace.records) {
        const double r = instantaneous_regret(rec.objective, optimum.value);
        rec.instant_regret = r;
        if (rec.iteration > 0) running += r;
        rec.cumulative_regret = running;
    }
}

inline std::vector<double> cumulative_regret(const RunTrace& trace) {
    std::vector<double> out;
    out.reserve(trace.records.size());
    for (const RunRecord& rec : trace.records)
        if (rec.cumulative_regret.has_value()) out.push_back(*rec.cumulative_regret);
    return out;
}

// Algorithm loop: one seeded initialization, then suggest -> observe for the
// whole budget. The trace carries the running best and, when the exact optimum
// is known, the regret bookkeeping.
inline RunTrace run_bo(const BenchmarkInstance& problem, const StrategyConfig& config, int budget,
                       std::uint64_t seed, std::optional<Combination> initial = std::nullopt,
                       const std::optional<Optimum>& optimum = std::nullopt) {
    if (budget < 1) throw std::invalid_argument("run_bo: budget must be >= 1");
    const auto started = std::chrono::steady_clock::now();

    RunTrace trace;
    trace.method = to_string(config.kind);
    trace.seed = seed;

    ObservationHistory history;
    Combination init;
    if (initial.has_value()) {
        problem.space().validate(*initial);
        init = *initial;
    } else {
        Rng init_rng(seed_mix(seed, "init"));
        init = problem.space().sample(init_rng);
    }

    std::unique_ptr<Strategy> strategy;
    const auto record_observation = [&](int iteration, const Combination& c) {
        const double y = problem.evaluate(c);
        history.append(c, y);
        strategy->observe(c, y);
        trace.records.push_back(RunRecord{iteration, c, y, history.best_value(), std::nullopt, std::nullopt});
    };

    try {
        strategy = make_strategy(problem.space(), config, seed);
        record_observation(0, init);
        for (int t = 1; t <= budget; ++t) {
            const Combination proposal = strategy->suggest(history);
            record_observation(t, proposal);
        }
    } catch (const std::exception& err) {
        trace.aborted = true;
        trace.flags.push_back(std::string("aborted: ") + err.what());
    }

    if (!history.empty()) {
        trace.best_combination = history.best_combination();
        trace.best_value = history.best_value();
    }
    if (strategy != nullptr)
        for (const std::string& f : strategy->flags()) trace.flags.push_back(f);
    if (optimum.has_value()) attach_regrets(trace, *optimum);
    trace.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return trace;
}

}  // namespace cbo
