#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <limits>

#include "cbo/benchmarks.hpp"

using cbo::BenchmarkInstance;
using cbo::BenchmarkKind;
using cbo::BooleanVector;
using cbo::ProblemSpec;
using Catch::Approx;

TEST_CASE("thumbs-up counts ones") {
    const auto inst = BenchmarkInstance::make_thumbs_up(20);
    CHECK(inst.evaluate_bits(BooleanVector(20, 1)) == -20.0);
    CHECK(inst.evaluate_bits(BooleanVector(20, 0)) == 0.0);

    const auto small = BenchmarkInstance::make_thumbs_up(10);
    const auto optimum = cbo::brute_force_optimum(small);
    REQUIRE(optimum.has_value());
    CHECK(optimum->value == -10.0);
    CHECK(optimum->combination == cbo::Combination(10, 1));
}

TEST_CASE("seesaw torque balance") {
    auto inst = BenchmarkInstance::make_seesaw(6, 11, /*forbid_empty=*/false);
    CHECK(inst.evaluate_bits(BooleanVector(6, 0)) == 0.0);

    // positions are fixed by the dimension
    Eigen::VectorXd expected(6);
    expected << -3, -2, -1, 1, 2, 3;
    CHECK(inst.seesaw_positions() == expected);
    for (int i = 0; i < 6; ++i) {
        CHECK(inst.seesaw_weights()[i] >= 0.5);
        CHECK(inst.seesaw_weights()[i] <= 2.5);
    }

    // unit weights cancel symmetric picks; injected through the instance format
    nlohmann::json j = BenchmarkInstance::make_seesaw(4, 0, false).to_json();
    j["weights"] = {1.0, 1.0, 1.0, 1.0};
    const auto unit = BenchmarkInstance::from_json(j);
    CHECK(unit.seesaw_positions() == Eigen::Vector4d(-2, -1, 1, 2));
    CHECK(unit.evaluate_bits({1, 0, 0, 1}) == 0.0);
    CHECK(unit.evaluate_bits({1, 0, 0, 0}) == 2.0);

    // brute force agrees with an independent scan
    const auto optimum = cbo::brute_force_optimum(inst);
    REQUIRE(optimum.has_value());
    double best = std::numeric_limits<double>::infinity();
    for (std::uint64_t rank = 0; rank < 64; ++rank) {
        BooleanVector bits(6);
        for (int i = 0; i < 6; ++i) bits[static_cast<std::size_t>(i)] = (rank >> (5 - i)) & 1;
        best = std::min(best, inst.evaluate_bits(bits));
    }
    CHECK(optimum->value == best);

    CHECK_THROWS_AS(BenchmarkInstance::make_seesaw(5, 1), std::invalid_argument);
}

TEST_CASE("seesaw empty-selection penalty") {
    const auto inst = BenchmarkInstance::make_seesaw(6, 11, /*forbid_empty=*/true);
    const double max_torque = inst.seesaw_positions().cwiseAbs().dot(inst.seesaw_weights());
    CHECK(inst.evaluate_bits(BooleanVector(6, 0)) == Approx(10.0 * max_torque));
    const auto optimum = cbo::brute_force_optimum(inst);
    REQUIRE(optimum.has_value());
    CHECK(optimum->combination != cbo::Combination(6, 0));
}

TEST_CASE("bqp quadratic form with L1 weight") {
    ProblemSpec spec;
    spec.kind = BenchmarkKind::bqp;
    spec.m = 10;
    spec.lambda = 1.0;
    const auto inst = BenchmarkInstance::make(spec, 3);
    CHECK(inst.evaluate_bits(BooleanVector(10, 0)) == 0.0);
    CHECK(inst.bqp_matrix() == inst.bqp_matrix().transpose());

    // hand case via the instance format
    nlohmann::json j;
    j["kind"] = "bqp";
    j["seed"] = 0;
    j["m"] = 2;
    j["lambda"] = 1.0;
    j["alpha"] = 10.0;
    j["q_row_major"] = {2.0, -1.0, -1.0, 2.0};
    const auto hand = BenchmarkInstance::from_json(j);
    CHECK(hand.evaluate_bits({1, 0}) == Approx(3.0));
    CHECK(hand.evaluate_bits({1, 1}) == Approx(2.0 - 1.0 - 1.0 + 2.0 + 2.0));

    // symmetrizing the matrix leaves the bilinear form unchanged
    nlohmann::json asym = j;
    asym["q_row_major"] = {2.0, -1.5, -0.5, 2.0};
    nlohmann::json sym = j;
    sym["q_row_major"] = {2.0, -1.0, -1.0, 2.0};
    const auto a = BenchmarkInstance::from_json(asym);
    const auto s = BenchmarkInstance::from_json(sym);
    for (std::uint64_t rank = 0; rank < 4; ++rank) {
        const auto c = a.space().unrank(rank);
        CHECK(a.evaluate(c) == Approx(s.evaluate(c)).margin(1e-12));
    }

    // seeded 10D optimum equals an independent exhaustive minimum
    const auto optimum = cbo::brute_force_optimum(inst);
    REQUIRE(optimum.has_value());
    double best = std::numeric_limits<double>::infinity();
    for (std::uint64_t rank = 0; rank < 1024; ++rank)
        best = std::min(best, inst.evaluate(inst.space().unrank(rank)));
    CHECK(optimum->value == best);
    for (std::uint64_t rank = 0; rank < 1024; ++rank)
        CHECK(inst.evaluate(inst.space().unrank(rank)) >= optimum->value);
}

TEST_CASE("ising sparsification KL by exact enumeration") {
    const auto inst = BenchmarkInstance::make_ising(3, 3, 1.0, 5);
    CHECK(inst.dimension() == 12);
    CHECK(inst.ising_edges().size() == 12);

    // keeping every edge reproduces p: objective is exactly lambda * E
    CHECK(inst.evaluate_bits(BooleanVector(12, 1)) == 12.0);
    const auto free_inst = BenchmarkInstance::make_ising(3, 3, 0.0, 5);
    CHECK(free_inst.evaluate_bits(BooleanVector(12, 1)) == 0.0);

    // KL is nonnegative for random subsets
    cbo::Rng rng(9);
    for (int trial = 0; trial < 100; ++trial) {
        BooleanVector bits(12);
        for (auto& b : bits) b = rng.uniform() < 0.5 ? 1 : 0;
        CHECK(free_inst.evaluate_bits(bits) >= 0.0);
    }

    // two-node model against a four-state hand enumeration
    nlohmann::json j;
    j["kind"] = "ising";
    j["seed"] = 0;
    j["m"] = 1;
    j["lambda"] = 0.0;
    j["grid_rows"] = 1;
    j["grid_cols"] = 2;
    j["edges"] = {{0, 1}};
    j["couplings"] = {0.5};
    const auto two_node = BenchmarkInstance::from_json(j);
    const double z_p = 2.0 * std::exp(0.5) + 2.0 * std::exp(-0.5);
    // q has no edges: uniform over 4 states
    double expected = 0.0;
    for (double h : {0.5, -0.5, -0.5, 0.5}) {
        const double p = std::exp(h) / z_p;
        expected += p * (std::log(p) - std::log(0.25));
    }
    CHECK(two_node.evaluate_bits({0}) == Approx(expected).margin(1e-12));

    CHECK_THROWS_AS(BenchmarkInstance::make_ising(5, 4, 0.0, 1), std::invalid_argument);
}

TEST_CASE("sparse regression subset objective") {
    const auto inst = BenchmarkInstance::make_sparse_regression(200, 10, 5, 0.01, 1.0, 0.0, 17);
    Eigen::VectorXd expected_beta(10);
    expected_beta << 1, 1, 1, 1, 1, 0, 0, 0, 0, 0;
    CHECK(inst.regression_beta() == expected_beta);

    // empty selection: variance of validation targets around the train mean
    const auto& y = inst.regression_y();
    const double train_mean = y.head(100).mean();
    const double expected_mse0 = (y.segment(100, 50).array() - train_mean).square().mean();
    CHECK(inst.evaluate_bits(BooleanVector(10, 0)) == Approx(expected_mse0).margin(1e-12));

    // noiseless limit: the true support fits the validation data
    const auto clean = BenchmarkInstance::make_sparse_regression(200, 10, 5, 0.01, 1e12, 0.0, 17);
    BooleanVector support(10, 0);
    for (int i = 0; i < 5; ++i) support[static_cast<std::size_t>(i)] = 1;
    CHECK(clean.evaluate_bits(support) <= 1e-6);

    // the L1 term counts selected columns
    const auto penalized = BenchmarkInstance::make_sparse_regression(200, 10, 5, 0.01, 1.0, 2.0, 17);
    CHECK(penalized.evaluate_bits(support) == Approx(inst.evaluate_bits(support) + 10.0).margin(1e-12));
}

TEST_CASE("objectives are pure and replayable through serialization") {
    ProblemSpec spec;
    spec.kind = BenchmarkKind::bqp;
    spec.m = 8;
    spec.lambda = 0.5;
    const auto inst = BenchmarkInstance::make(spec, 23);
    const BooleanVector probe{1, 0, 1, 1, 0, 1, 0, 0};
    CHECK(inst.evaluate_bits(probe) == inst.evaluate_bits(probe));

    const auto path = (std::filesystem::temp_directory_path() / "cbo_instance_test.json").string();
    inst.save(path);
    const auto replayed = BenchmarkInstance::load(path);
    for (std::uint64_t rank = 0; rank < inst.space().cardinality(); ++rank) {
        const auto c = inst.space().unrank(rank);
        CHECK(replayed.evaluate(c) == inst.evaluate(c));  // bit-for-bit
    }
    std::filesystem::remove(path);

    const auto ising = BenchmarkInstance::make_ising(2, 3, 1.0, 31);
    const auto ising_path = (std::filesystem::temp_directory_path() / "cbo_ising_test.json").string();
    ising.save(ising_path);
    const auto ising_replayed = BenchmarkInstance::load(ising_path);
    CHECK(ising_replayed.evaluate_bits(BooleanVector(7, 1)) == ising.evaluate_bits(BooleanVector(7, 1)));
    CHECK(ising_replayed.evaluate_bits({1, 0, 1, 0, 1, 0, 1}) == ising.evaluate_bits({1, 0, 1, 0, 1, 0, 1}));
    std::filesystem::remove(ising_path);
}

TEST_CASE("malformed instance payloads are rejected") {
    nlohmann::json seesaw = BenchmarkInstance::make_seesaw(4, 0).to_json();
    seesaw["weights"] = {1.0, 2.0};
    CHECK_THROWS_AS(BenchmarkInstance::from_json(seesaw), std::runtime_error);

    nlohmann::json ising = BenchmarkInstance::make_ising(2, 2, 0.0, 1).to_json();
    ising["couplings"] = {0.5};
    CHECK_THROWS_AS(BenchmarkInstance::from_json(ising), std::runtime_error);
    ising = BenchmarkInstance::make_ising(2, 2, 0.0, 1).to_json();
    ising["edges"][0] = {0, 9};
    CHECK_THROWS_AS(BenchmarkInstance::from_json(ising), std::runtime_error);

    nlohmann::json bqp = BenchmarkInstance::make_bqp(3, 0.0, 10.0, 1).to_json();
    bqp["q_row_major"] = {1.0, 2.0};
    CHECK_THROWS_AS(BenchmarkInstance::from_json(bqp), std::runtime_error);
}

TEST_CASE("oracle refuses spaces beyond the cap") {
    const auto inst = BenchmarkInstance::make_thumbs_up(20);
    CHECK_FALSE(cbo::brute_force_optimum(inst, std::uint64_t{1} << 16).has_value());
}
