#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cbo/harness.hpp"

using cbo::ExperimentConfig;
using cbo::RunTrace;
using cbo::StrategyKind;
using Catch::Approx;

namespace {

ExperimentConfig tiny_experiment() {
    ExperimentConfig config;
    config.problem.kind = cbo::BenchmarkKind::bqp;
    config.problem.m = 5;
    config.problem.lambda = 1.0;
    config.methods = {cbo::make_strategy_config(StrategyKind::random),
                      cbo::make_strategy_config(StrategyKind::cbo_lookup)};
    for (auto& method : config.methods) {
        method.embedding_dim = 6;
        method.search_restarts = 2;
        method.search_steps = 20;
    }
    config.budget = 3;
    config.repeats = 3;
    config.base_seed = 77;
    return config;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::string temp_file(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("run_experiment produces one trace per (method, repeat)") {
    const auto traces = cbo::run_experiment(tiny_experiment());
    REQUIRE(traces.size() == 6);
    for (const RunTrace& trace : traces) {
        CHECK_FALSE(trace.aborted);
        CHECK(trace.records.size() == 4);
    }
    // canonical ordering: method, then repeat
    CHECK(traces[0].method == "cbo_lookup");
    CHECK(traces[3].method == "random");
    for (int j = 0; j < 3; ++j) {
        CHECK(traces[static_cast<std::size_t>(j)].repeat == j);
        CHECK(traces[static_cast<std::size_t>(3 + j)].repeat == j);
    }
}

TEST_CASE("all methods share the per-repeat initialization") {
    const auto traces = cbo::run_experiment(tiny_experiment());
    for (int j = 0; j < 3; ++j)
        CHECK(traces[static_cast<std::size_t>(j)].records[0].combination ==
              traces[static_cast<std::size_t>(3 + j)].records[0].combination);
}

TEST_CASE("per-repeat instances are regenerated unless pinned") {
    ExperimentConfig config = tiny_experiment();
    const auto inst0 = cbo::BenchmarkInstance::make(config.problem, cbo::seed_mix(config.base_seed, "instance", 0));
    const auto inst1 = cbo::BenchmarkInstance::make(config.problem, cbo::seed_mix(config.base_seed, "instance", 1));
    CHECK(inst0.bqp_matrix() != inst1.bqp_matrix());

    const auto varied = cbo::run_experiment(config);
    CHECK(varied[0].records[0].objective == inst0.evaluate(varied[0].records[0].combination));
    CHECK(varied[1].records[0].objective == inst1.evaluate(varied[1].records[0].combination));

    config.fix_instance = true;
    const auto pinned = cbo::run_experiment(config);
    CHECK(pinned[0].records[0].objective == inst0.evaluate(pinned[0].records[0].combination));
    CHECK(pinned[1].records[0].objective == inst0.evaluate(pinned[1].records[0].combination));
}

TEST_CASE("experiment runs are deterministic down to the CSV bytes") {
    const std::string path_a = temp_file("cbo_traces_a.csv");
    const std::string path_b = temp_file("cbo_traces_b.csv");
    cbo::write_traces_csv(cbo::run_experiment(tiny_experiment()), path_a);
    cbo::write_traces_csv(cbo::run_experiment(tiny_experiment()), path_b);
    CHECK(slurp(path_a) == slurp(path_b));

    // a worker pool must not change the bytes either
    ExperimentConfig parallel = tiny_experiment();
    parallel.workers = 3;
    const std::string path_c = temp_file("cbo_traces_c.csv");
    cbo::write_traces_csv(cbo::run_experiment(parallel), path_c);
    CHECK(slurp(path_a) == slurp(path_c));
    std::filesystem::remove(path_a);
    std::filesystem::remove(path_b);
    std::filesystem::remove(path_c);
}

TEST_CASE("trace CSV format and exact round-trip") {
    const auto problem = cbo::BenchmarkInstance::make_thumbs_up(3);
    RunTrace trace = cbo::run_bo(problem, cbo::make_strategy_config(StrategyKind::random), 1, 5,
                                 cbo::Combination{1, 0, 1}, cbo::brute_force_optimum(problem));
    trace.repeat = 2;

    const std::string path = temp_file("cbo_trace_roundtrip.csv");
    cbo::write_traces_csv({trace}, path);

    const std::string text = slurp(path);
    std::stringstream lines(text);
    std::string line;
    std::getline(lines, line);
    CHECK(line == std::string(cbo::kTraceCsvHeader));
    int data_rows = 0;
    bool saw_init_combination = false;
    while (std::getline(lines, line)) {
        if (line.empty()) continue;
        ++data_rows;
        if (line.find(",1;0;1,") != std::string::npos) saw_init_combination = true;
    }
    CHECK(data_rows == 2);  // init + one query
    CHECK(saw_init_combination);

    const auto parsed = cbo::read_traces_csv(path);
    REQUIRE(parsed.size() == 1);
    REQUIRE(parsed[0].records.size() == trace.records.size());
    CHECK(parsed[0].method == trace.method);
    CHECK(parsed[0].repeat == trace.repeat);
    CHECK(parsed[0].seed == trace.seed);
    for (std::size_t i = 0; i < trace.records.size(); ++i) {
        CHECK(parsed[0].records[i].combination == trace.records[i].combination);
        CHECK(parsed[0].records[i].objective == trace.records[i].objective);
        CHECK(parsed[0].records[i].best_so_far == trace.records[i].best_so_far);
        CHECK(parsed[0].records[i].instant_regret == trace.records[i].instant_regret);
        CHECK(parsed[0].records[i].cumulative_regret == trace.records[i].cumulative_regret);
    }
    std::filesystem::remove(path);
}

TEST_CASE("regret columns appear exactly when the oracle ran") {
    ExperimentConfig config = tiny_experiment();
    config.compute_oracle = false;
    const std::string path = temp_file("cbo_no_oracle.csv");
    cbo::write_traces_csv(cbo::run_experiment(config), path);
    std::stringstream lines(slurp(path));
    std::string line;
    std::getline(lines, line);
    while (std::getline(lines, line))
        if (!line.empty()) CHECK(line.substr(line.size() - 2) == ",,");

    config.compute_oracle = true;
    cbo::write_traces_csv(cbo::run_experiment(config), path);
    std::stringstream lines2(slurp(path));
    std::getline(lines2, line);
    while (std::getline(lines2, line))
        if (!line.empty()) CHECK(line.substr(line.size() - 2) != ",,");
    std::filesystem::remove(path);
}

TEST_CASE("summaries aggregate best-so-far across repeats") {
    RunTrace a, b;
    a.method = b.method = "demo";
    a.repeat = 0;
    b.repeat = 1;
    a.records = {{0, {0}, 1.0, 1.0, {}, {}}, {1, {1}, 1.0, 1.0, {}, {}}};
    b.records = {{0, {0}, 3.0, 3.0, {}, {}}, {1, {1}, 3.0, 3.0, {}, {}}};

    const auto table = cbo::summarize({a, b});
    REQUIRE(table.rows.size() == 2);
    for (const auto& row : table.rows) {
        CHECK(row.mean_best == Approx(2.0));
        CHECK(row.std_best == Approx(std::sqrt(2.0)));
    }
    REQUIRE(table.finals.size() == 1);
    CHECK(table.finals[0].mean_final == Approx(2.0));
    CHECK(table.finals[0].repeats == 2);

    // a single repeat reports zero deviation
    const auto lone = cbo::summarize({a});
    for (const auto& row : lone.rows) CHECK(row.std_best == 0.0);

    // constant traces keep the constant
    const auto constant = cbo::summarize({a, a});
    for (const auto& row : constant.rows) {
        CHECK(row.mean_best == 1.0);
        CHECK(row.std_best == 0.0);
    }
}

TEST_CASE("summary CSV round-trips") {
    const auto traces = cbo::run_experiment(tiny_experiment());
    const auto table = cbo::summarize(traces);
    const std::string path = temp_file("cbo_summary.csv");
    cbo::write_summary_csv(table, path);
    const auto parsed = cbo::read_summary_csv(path);
    REQUIRE(parsed.rows.size() == table.rows.size());
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        CHECK(parsed.rows[i].method == table.rows[i].method);
        CHECK(parsed.rows[i].iteration == table.rows[i].iteration);
        CHECK(parsed.rows[i].mean_best == table.rows[i].mean_best);
        CHECK(parsed.rows[i].std_best == table.rows[i].std_best);
    }
    std::filesystem::remove(path);
}

TEST_CASE("svg plot structure") {
    const auto traces = cbo::run_experiment(tiny_experiment());
    const auto table = cbo::summarize(traces);
    const std::string path = temp_file("cbo_plot.svg");
    cbo::plot_svg(table, path);
    const std::string svg = slurp(path);
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(svg.find("iteration") != std::string::npos);

    // one mean polyline per method
    std::size_t polylines = 0;
    for (std::size_t pos = svg.find("<polyline"); pos != std::string::npos; pos = svg.find("<polyline", pos + 1))
        ++polylines;
    CHECK(polylines == 2);
    std::size_t bands = 0;
    for (std::size_t pos = svg.find("<polygon"); pos != std::string::npos; pos = svg.find("<polygon", pos + 1))
        ++bands;
    CHECK(bands == 2);
    std::filesystem::remove(path);

    const std::string refused = temp_file("cbo_plot_refused.svg");
    CHECK_THROWS_AS(cbo::plot_svg(cbo::SummaryTable{}, refused), std::invalid_argument);
    CHECK_FALSE(std::filesystem::exists(refused));
}

TEST_CASE("experiment config parsing with overrides and defaults") {
    const nlohmann::json j = {
        {"problem", {{"kind", "bqp"}, {"m", 10}, {"lambda", 1.0}}},
        {"methods", {"random", {{"kind", "cbo_lookup"}, {"d", 12}, {"refit_every", 2}}}},
        {"repeats", 4},
        {"base_seed", 9},
    };
    const ExperimentConfig config = cbo::parse_experiment_config(j);
    CHECK(config.problem.kind == cbo::BenchmarkKind::bqp);
    CHECK(config.repeats == 4);
    CHECK(config.base_seed == 9);
    REQUIRE(config.methods.size() == 2);
    CHECK(config.methods[0].kind == StrategyKind::random);
    CHECK(config.methods[1].kind == StrategyKind::cbo_lookup);
    CHECK(config.methods[1].embedding_dim == 12);
    CHECK(config.methods[1].refit_every == 2);

    // unspecified budget resolves by dimension
    CHECK(config.budget == -1);
    CHECK(config.resolved_budget(10) == 100);
    CHECK(config.resolved_budget(24) == 250);

    nlohmann::json no_methods = j;
    no_methods.erase("methods");
    CHECK_THROWS_AS(cbo::parse_experiment_config(no_methods), std::invalid_argument);

    // acquisition kinds follow the per-strategy convention
    CHECK(cbo::make_strategy_config(StrategyKind::bin_round).acquisition.kind ==
          cbo::AcquisitionKind::expected_improvement);
    CHECK(cbo::make_strategy_config(StrategyKind::cbo_lookup).acquisition.kind == cbo::AcquisitionKind::gp_ucb);
}

TEST_CASE("failed methods abort the experiment only when nothing succeeds") {
    ExperimentConfig config = tiny_experiment();
    config.methods[1].table_cap = 2;  // cbo_lookup cannot build its table
    CHECK_THROWS_WITH(cbo::run_experiment(config), Catch::Matchers::ContainsSubstring("cbo_lookup"));
}
