#include <CLI11.hpp>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "cbo/cbo.hpp"

namespace {

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> out;
    std::string current;
    for (char ch : csv) {
        if (ch == ',') {
            if (!current.empty()) out.push_back(current);
            current.clear();
        } else {
            current.push_back(ch);
        }
    }
    if (!current.empty()) out.push_back(current);
    return out;
}

void print_optimum(const cbo::BenchmarkInstance& instance, const cbo::Optimum& optimum) {
    std::cout << "problem: " << cbo::to_string(instance.kind()) << " (" << instance.dimension() << "D)\n";
    std::cout << "optimum value: " << optimum.value << "\n";
    std::cout << "optimum combination: " << cbo::detail::format_combination(optimum.combination) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Combinatorial Bayesian optimization benchmark harness"};
    app.require_subcommand(1);

    // ---- run ----------------------------------------------------------
    std::string config_path;
    std::string out_dir;
    std::optional<int> workers_flag;
    std::optional<std::uint64_t> seed_flag;
    std::optional<int> budget_flag;
    std::string methods_flag;
    bool fix_instance_flag = false;

    auto* run_cmd = app.add_subcommand("run", "run an experiment config and write the trace CSV");
    run_cmd->add_option("--config", config_path, "experiment config (JSON)")->required();
    run_cmd->add_option("--out", out_dir, "output directory (overrides config)");
    run_cmd->add_option("--workers", workers_flag, "worker threads");
    run_cmd->add_option("--seed", seed_flag, "base seed");
    run_cmd->add_option("--budget", budget_flag, "iteration budget T");
    run_cmd->add_option("--methods", methods_flag, "comma-separated method list (overrides config)");
    run_cmd->add_flag("--fix-instance", fix_instance_flag, "pin one problem instance across repeats");

    // ---- summarize / plot ----------------------------------------------
    std::string in_path, out_path;
    auto* summarize_cmd = app.add_subcommand("summarize", "aggregate a trace CSV into per-iteration statistics");
    summarize_cmd->add_option("--in", in_path, "trace CSV")->required();
    summarize_cmd->add_option("--out", out_path, "summary CSV")->required();

    std::string plot_in, plot_out;
    auto* plot_cmd = app.add_subcommand("plot", "render a summary CSV as an SVG chart");
    plot_cmd->add_option("--in", plot_in, "summary CSV")->required();
    plot_cmd->add_option("--out", plot_out, "output SVG")->required();

    // ---- oracle ---------------------------------------------------------
    std::string oracle_problem = "thumbs_up";
    int oracle_m = 10;
    double oracle_lambda = 0.0;
    std::uint64_t oracle_seed = 0;
    int oracle_grid_rows = 3, oracle_grid_cols = 3;
    int oracle_n = 200, oracle_p = 20, oracle_s = 5;
    double oracle_rho = 0.01, oracle_nu = 1.0;
    std::uint64_t oracle_cap = std::uint64_t{1} << 16;
    std::string oracle_save, oracle_load;
    auto* oracle_cmd = app.add_subcommand("oracle", "brute-force optimum of a benchmark instance");
    oracle_cmd->add_option("--problem", oracle_problem, "thumbs_up|seesaw|bqp|ising|sparse_regression");
    oracle_cmd->add_option("--m", oracle_m, "problem dimension");
    oracle_cmd->add_option("--lambda", oracle_lambda, "L1 weight");
    oracle_cmd->add_option("--seed", oracle_seed, "instance seed");
    oracle_cmd->add_option("--grid-rows", oracle_grid_rows, "Ising grid rows");
    oracle_cmd->add_option("--grid-cols", oracle_grid_cols, "Ising grid cols");
    oracle_cmd->add_option("--n", oracle_n, "regression sample count");
    oracle_cmd->add_option("--p", oracle_p, "regression dimension");
    oracle_cmd->add_option("--s", oracle_s, "regression sparsity");
    oracle_cmd->add_option("--rho", oracle_rho, "regression correlation");
    oracle_cmd->add_option("--nu", oracle_nu, "regression signal-to-noise");
    oracle_cmd->add_option("--cap", oracle_cap, "enumeration cap");
    oracle_cmd->add_option("--save-instance", oracle_save, "write the instance JSON here");
    oracle_cmd->add_option("--instance", oracle_load, "load a serialized instance instead of generating");

    // ---- table ----------------------------------------------------------
    auto* table_cmd = app.add_subcommand("table", "build or inspect lookup tables");
    table_cmd->require_subcommand(1);
    std::string table_arities = "";
    int table_m = 0, table_d = 20;
    std::uint64_t table_seed = 0;
    std::string table_out;
    auto* table_build = table_cmd->add_subcommand("build", "build a table and write the CBOL1 file");
    table_build->add_option("--arities", table_arities, "comma-separated arities (e.g. 3,4,5,2)");
    table_build->add_option("--m", table_m, "binary dimension shortcut (all arities 2)");
    table_build->add_option("--d", table_d, "embedding dimension");
    table_build->add_option("--seed", table_seed, "embedding seed");
    table_build->add_option("--out", table_out, "output file")->required();
    std::string table_in;
    auto* table_inspect = table_cmd->add_subcommand("inspect", "validate a CBOL1 file and print its header");
    table_inspect->add_option("--in", table_in, "table file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) {
            cbo::ExperimentConfig config = cbo::load_experiment_config(config_path);
            if (!out_dir.empty()) config.out_dir = out_dir;
            if (workers_flag) config.workers = *workers_flag;
            if (seed_flag) config.base_seed = *seed_flag;
            if (budget_flag) config.budget = *budget_flag;
            if (fix_instance_flag) config.fix_instance = true;
            if (!methods_flag.empty()) {
                config.methods.clear();
                for (const std::string& name : split_list(methods_flag))
                    config.methods.push_back(cbo::make_strategy_config(cbo::strategy_kind_from_string(name)));
            }
            std::filesystem::create_directories(config.out_dir);
            cbo::log_line(cbo::LogLevel::info, "running " + std::to_string(config.methods.size()) + " method(s) x " +
                                                   std::to_string(config.repeats) + " repeat(s)");
            const std::vector<cbo::RunTrace> traces = cbo::run_experiment(config);
            const std::string trace_path = config.out_dir + "/traces.csv";
            cbo::write_traces_csv(traces, trace_path);
            cbo::log_line(cbo::LogLevel::info, "wrote " + trace_path);
            return 0;
        }
        if (*summarize_cmd) {
            const auto traces = cbo::read_traces_csv(in_path);
            const cbo::SummaryTable table = cbo::summarize(traces);
            cbo::write_summary_csv(table, out_path);
            for (const cbo::MethodFinal& final : table.finals)
                std::cout << final.method << ": final best " << final.mean_final << " +/- " << final.std_final
                          << " over " << final.repeats << " repeat(s)\n";
            return 0;
        }
        if (*plot_cmd) {
            cbo::plot_svg(cbo::read_summary_csv(plot_in), plot_out);
            cbo::log_line(cbo::LogLevel::info, "wrote " + plot_out);
            return 0;
        }
        if (*oracle_cmd) {
            std::optional<cbo::BenchmarkInstance> instance;
            if (!oracle_load.empty()) {
                instance = cbo::BenchmarkInstance::load(oracle_load);
            } else {
                cbo::ProblemSpec spec;
                spec.kind = cbo::benchmark_kind_from_string(oracle_problem);
                spec.m = oracle_m;
                spec.lambda = oracle_lambda;
                spec.grid_rows = oracle_grid_rows;
                spec.grid_cols = oracle_grid_cols;
                spec.reg_n = oracle_n;
                spec.reg_p = oracle_p;
                spec.reg_s = oracle_s;
                spec.reg_rho = oracle_rho;
                spec.reg_nu = oracle_nu;
                instance = cbo::BenchmarkInstance::make(spec, oracle_seed);
            }
            if (!oracle_save.empty()) {
                instance->save(oracle_save);
                cbo::log_line(cbo::LogLevel::info, "wrote " + oracle_save);
            }
            const auto optimum = cbo::brute_force_optimum(*instance, oracle_cap);
            if (!optimum.has_value()) {
                std::cerr << "space cardinality exceeds the enumeration cap " << oracle_cap << "\n";
                return 1;
            }
            print_optimum(*instance, *optimum);
            return 0;
        }
        if (*table_build) {
            std::vector<std::int32_t> arities;
            if (!table_arities.empty())
                for (const std::string& token : split_list(table_arities)) arities.push_back(std::stoi(token));
            else if (table_m > 0)
                arities.assign(static_cast<std::size_t>(table_m), 2);
            else
                throw std::invalid_argument("table build: give --arities or --m");
            cbo::CategoricalSpace space(arities);
            cbo::LookupTable table(space, cbo::RandomEmbedding::for_space(space, table_d, table_seed));
            table.save(table_out);
            std::cout << "wrote " << table_out << ": " << table.size() << " rows of " << table.point_dim()
                      << " doubles (m=" << space.code_length() << ")\n";
            return 0;
        }
        if (*table_inspect) {
            const cbo::LookupTable table = cbo::LookupTable::load(table_in);
            std::cout << "valid CBOL1 table\n";
            std::cout << "variables: " << table.space().num_variables() << ", cardinality: " << table.size()
                      << ", m: " << table.space().code_length() << ", d: " << table.point_dim()
                      << ", seed: " << table.embedding().seed() << "\n";
            return 0;
        }
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
    return 0;
}
