#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "cbo/strategies.hpp"

using cbo::BenchmarkInstance;
using cbo::CategoricalSpace;
using cbo::Combination;
using cbo::ObservationHistory;
using cbo::RunTrace;
using cbo::StrategyConfig;
using cbo::StrategyKind;
using Catch::Approx;

namespace {

constexpr StrategyKind kAllKinds[] = {StrategyKind::random,    StrategyKind::bin_aa, StrategyKind::bin_round,
                                      StrategyKind::dec_round, StrategyKind::rembo,  StrategyKind::cbo_recon,
                                      StrategyKind::cbo_lookup};

StrategyConfig quick_config(StrategyKind kind) {
    StrategyConfig config = cbo::make_strategy_config(kind);
    config.embedding_dim = 8;
    config.search_restarts = 3;
    config.search_steps = 30;
    return config;
}

}  // namespace

TEST_CASE("default thresholds follow the per-kind convention") {
    CHECK(cbo::make_strategy_config(StrategyKind::bin_round).rounding_threshold() == 0.5);
    CHECK(cbo::make_strategy_config(StrategyKind::rembo).rounding_threshold() == 0.25);
    CHECK(cbo::make_strategy_config(StrategyKind::cbo_recon).rounding_threshold() == 0.02);
    StrategyConfig custom = cbo::make_strategy_config(StrategyKind::cbo_recon);
    custom.threshold = 0.3;
    CHECK(custom.rounding_threshold() == 0.3);
}

TEST_CASE("observation history tracks the earliest best") {
    ObservationHistory history;
    CHECK_THROWS_AS(history.best_value(), std::logic_error);
    history.append({0, 1}, 3.0);
    history.append({1, 0}, -1.0);
    history.append({1, 1}, -1.0);  // same value, later: must not replace
    history.append({0, 0}, 2.0);
    CHECK(history.best_value() == -1.0);
    CHECK(history.best_combination() == Combination{1, 0});
}

TEST_CASE("every strategy proposes valid combinations of its space") {
    const auto problem = BenchmarkInstance::make_thumbs_up(6);
    for (StrategyKind kind : kAllKinds) {
        const RunTrace trace = cbo::run_bo(problem, quick_config(kind), 3, 11);
        INFO("strategy " << cbo::to_string(kind));
        REQUIRE(trace.records.size() == 4);  // init + 3 queries
        CHECK_FALSE(trace.aborted);
        for (const auto& rec : trace.records) CHECK(problem.space().contains(rec.combination));
    }
}

TEST_CASE("identical config and seed reproduce the trace bit for bit") {
    const auto problem = BenchmarkInstance::make_seesaw(6, 3, true);
    for (StrategyKind kind : kAllKinds) {
        const RunTrace a = cbo::run_bo(problem, quick_config(kind), 4, 29);
        const RunTrace b = cbo::run_bo(problem, quick_config(kind), 4, 29);
        INFO("strategy " << cbo::to_string(kind));
        REQUIRE(a.records.size() == b.records.size());
        for (std::size_t i = 0; i < a.records.size(); ++i) {
            CHECK(a.records[i].combination == b.records[i].combination);
            CHECK(a.records[i].objective == b.records[i].objective);
            CHECK(a.records[i].best_so_far == b.records[i].best_so_far);
        }
    }
}

TEST_CASE("random search with a fixed seed replays its sequence") {
    const CategoricalSpace space({3, 4, 5});
    auto a = cbo::make_strategy(space, quick_config(StrategyKind::random), 5);
    auto b = cbo::make_strategy(space, quick_config(StrategyKind::random), 5);
    ObservationHistory history;
    history.append({0, 0, 0}, 0.0);
    for (int i = 0; i < 20; ++i) CHECK(a->suggest(history) == b->suggest(history));
}

TEST_CASE("cbo_lookup never revisits a combination while candidates remain") {
    const auto problem = BenchmarkInstance::make_thumbs_up(4);  // 16 combinations
    const RunTrace trace = cbo::run_bo(problem, quick_config(StrategyKind::cbo_lookup), 10, 17);
    std::set<Combination> seen;
    for (const auto& rec : trace.records) {
        CHECK_FALSE(seen.contains(rec.combination));
        seen.insert(rec.combination);
    }
    CHECK(seen.size() == 11);
}

TEST_CASE("exhausting the space lifts the exclusion instead of failing") {
    const auto problem = BenchmarkInstance::make_thumbs_up(3);  // 8 combinations
    const RunTrace trace = cbo::run_bo(problem, quick_config(StrategyKind::cbo_lookup), 10, 17);
    CHECK_FALSE(trace.aborted);
    CHECK(trace.records.size() == 11);
    bool lifted = false;
    for (const auto& f : trace.flags) lifted |= f.find("exclusion-lifted") != std::string::npos;
    CHECK(lifted);
    CHECK(trace.best_value == -3.0);  // the whole space was enumerated on the way
}

TEST_CASE("rounding strategies clamp out-of-image patterns to valid ranks") {
    // N = 6 < 2^3: rounding can produce ranks 6 and 7, which must be clamped
    const CategoricalSpace space({3, 2});
    for (StrategyKind kind : {StrategyKind::bin_round, StrategyKind::rembo, StrategyKind::cbo_recon}) {
        auto strategy = cbo::make_strategy(space, quick_config(kind), 23);
        ObservationHistory history;
        cbo::Rng rng(1);
        for (int i = 0; i < 3; ++i) {
            const Combination c = space.sample(rng);
            const double y = static_cast<double>(i) - 1.0;
            history.append(c, y);
            strategy->observe(c, y);
        }
        for (int round = 0; round < 5; ++round) {
            const Combination proposal = strategy->suggest(history);
            INFO("strategy " << cbo::to_string(kind));
            CHECK(space.contains(proposal));
            history.append(proposal, 0.5 * round);
            strategy->observe(proposal, 0.5 * round);
        }
    }
}

TEST_CASE("run_bo bookkeeping: counts, running best, regrets") {
    const auto problem = BenchmarkInstance::make_thumbs_up(6);
    const auto optimum = cbo::brute_force_optimum(problem);
    REQUIRE(optimum.has_value());

    const RunTrace one = cbo::run_bo(problem, quick_config(StrategyKind::random), 1, 3, std::nullopt, optimum);
    CHECK(one.records.size() == 2);

    const RunTrace trace =
        cbo::run_bo(problem, quick_config(StrategyKind::cbo_lookup), 12, 3, std::nullopt, optimum);
    for (std::size_t i = 1; i < trace.records.size(); ++i)
        CHECK(trace.records[i].best_so_far <= trace.records[i - 1].best_so_far);

    double previous_cumulative = 0.0;
    for (const auto& rec : trace.records) {
        REQUIRE(rec.instant_regret.has_value());
        REQUIRE(rec.cumulative_regret.has_value());
        CHECK(*rec.instant_regret >= 0.0);
        CHECK(*rec.cumulative_regret >= previous_cumulative);
        previous_cumulative = *rec.cumulative_regret;
        if (rec.combination == optimum->combination) CHECK(*rec.instant_regret == 0.0);
    }
    CHECK(cbo::cumulative_regret(trace).size() == trace.records.size());

    // no optimum given: regret fields are absent, never zero-filled
    const RunTrace plain = cbo::run_bo(problem, quick_config(StrategyKind::random), 2, 3);
    for (const auto& rec : plain.records) {
        CHECK_FALSE(rec.instant_regret.has_value());
        CHECK_FALSE(rec.cumulative_regret.has_value());
    }
}

TEST_CASE("shared initialization is honored") {
    const auto problem = BenchmarkInstance::make_thumbs_up(5);
    const Combination init{1, 0, 1, 1, 0};
    for (StrategyKind kind : kAllKinds) {
        const RunTrace trace = cbo::run_bo(problem, quick_config(kind), 1, 7, init);
        CHECK(trace.records.front().combination == init);
    }
    CHECK_THROWS_AS(cbo::run_bo(problem, quick_config(StrategyKind::random), 1, 7, Combination{9, 9, 9, 9, 9}),
                    std::invalid_argument);
}

TEST_CASE("a kappa of zero reduces lookup selection to posterior-mean minimization") {
    const auto problem = BenchmarkInstance::make_thumbs_up(5);
    StrategyConfig config = quick_config(StrategyKind::cbo_lookup);
    config.acquisition.schedule.kappa = 0.0;
    config.exclude_observed = false;

    const CategoricalSpace space = problem.space();
    auto strategy = cbo::make_strategy(space, config, 41);
    auto* lookup = dynamic_cast<cbo::CboLookupStrategy*>(strategy.get());
    REQUIRE(lookup != nullptr);

    ObservationHistory history;
    cbo::Rng rng(2);
    for (int i = 0; i < 6; ++i) {
        const Combination c = space.sample(rng);
        const double y = problem.evaluate(c);
        history.append(c, y);
        strategy->observe(c, y);
    }
    const Combination proposal = strategy->suggest(history);

    // independently rebuild the model the strategy just fitted and re-score
    Eigen::MatrixXd x(6, lookup->table().point_dim());
    Eigen::VectorXd y(6);
    for (int i = 0; i < 6; ++i) {
        x.row(i) = lookup->table().point_of(space.rank_of(history.combinations[i])).transpose();
        y[i] = history.targets[i];
    }
    const auto tuned =
        cbo::optimize_hyperparameters(cbo::KernelKind::matern52, x, y, cbo::seed_mix(41, "hyperparameters", 6));
    const cbo::GpModel model(tuned.spec, tuned.noise_variance, x, y);
    double best_mean = std::numeric_limits<double>::infinity();
    std::uint64_t best_rank = 0;
    for (std::uint64_t rank = 0; rank < lookup->table().size(); ++rank) {
        const double mean = model.predict(lookup->table().point_of(rank)).mean;
        if (mean < best_mean) {
            best_mean = mean;
            best_rank = rank;
        }
    }
    CHECK(space.rank_of(proposal) == best_rank);
}

TEST_CASE("run failures are flagged instead of propagating") {
    const auto problem = BenchmarkInstance::make_thumbs_up(4);
    StrategyConfig config = quick_config(StrategyKind::cbo_lookup);
    config.table_cap = 4;  // table build refuses 16 > 4
    const RunTrace trace = cbo::run_bo(problem, config, 2, 9);
    CHECK(trace.aborted);
    CHECK_FALSE(trace.flags.empty());
    CHECK(trace.records.empty());
}
