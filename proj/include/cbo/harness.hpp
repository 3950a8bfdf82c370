#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "cbo/benchmarks.hpp"
#include "cbo/strategies.hpp"

namespace cbo {

enum class LogLevel { quiet = 0, info = 1, debug = 2 };

inline LogLevel log_level() {
    static const LogLevel level = [] {
        const char* env = std::getenv("CBO_LOG");
        if (env == nullptr) return LogLevel::info;
        const std::string v(env);
        if (v == "quiet" || v == "0") return LogLevel::quiet;
        if (v == "debug" || v == "2") return LogLevel::debug;
        return LogLevel::info;
    }();
    return level;
}

inline void log_line(LogLevel level, const std::string& message) {
    if (log_level() >= level) std::fputs((message + "\n").c_str(), stderr);
}

struct ExperimentConfig {
    ProblemSpec problem;
    std::optional<std::string> instance_file;  // pin one serialized instance
    std::vector<StrategyConfig> methods;
    int budget = -1;  // -1: resolved from the problem dimension (100 up to 16D, 250 beyond)
    int repeats = 10;
    std::uint64_t base_seed = 0;
    bool fix_instance = false;
    bool compute_oracle = true;
    std::uint64_t oracle_cap = std::uint64_t{1} << 16;
    int workers = 1;
    std::string out_dir = "out";

    int resolved_budget(int dimension) const {
        if (budget > 0) return budget;
        return dimension <= 16 ? 100 : 250;
    }
};

// Instances depending on a seed are regenerated per repeat unless pinned.
inline bool problem_is_randomized(BenchmarkKind kind) { return kind != BenchmarkKind::thumbs_up; }

// All repeats share the per-repeat initialization across methods: it depends
// on (base_seed, repeat) only.
inline Combination shared_initialization(const CategoricalSpace& space, std::uint64_t base_seed, int repeat) {
    Rng rng(seed_mix(base_seed, "init", static_cast<std::uint64_t>(repeat)));
    return space.sample(rng);
}

inline std::vector<RunTrace> run_experiment(const ExperimentConfig& config) {
    if (config.repeats < 1) throw std::invalid_argument("run_experiment: repeats must be >= 1");
    if (config.methods.empty()) throw std::invalid_argument("run_experiment: no methods configured");

    struct RepeatSetup {
        BenchmarkInstance instance;
        std::optional<Optimum> optimum;
        Combination init;
    };
    std::vector<RepeatSetup> setups;
    setups.reserve(static_cast<std::size_t>(config.repeats));
    for (int j = 0; j < config.repeats; ++j) {
        const std::uint64_t instance_index =
            (config.fix_instance || !problem_is_randomized(config.problem.kind)) ? 0 : static_cast<std::uint64_t>(j);
        BenchmarkInstance instance =
            config.instance_file.has_value()
                ? BenchmarkInstance::load(*config.instance_file)
                : BenchmarkInstance::make(config.problem, seed_mix(config.base_seed, "instance", instance_index));
        std::optional<Optimum> optimum;
        if (config.compute_oracle) optimum = brute_force_optimum(instance, config.oracle_cap);
        Combination init = shared_initialization(instance.space(), config.base_seed, j);
        setups.push_back(RepeatSetup{std::move(instance), std::move(optimum), std::move(init)});
    }

    struct Task {
        int method_index;
        int repeat;
    };
    std::vector<Task> tasks;
    for (int mi = 0; mi < static_cast<int>(config.methods.size()); ++mi)
        for (int j = 0; j < config.repeats; ++j) tasks.push_back(Task{mi, j});

    std::vector<RunTrace> traces(tasks.size());
    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;
    const auto worker = [&] {
        while (true) {
            const std::size_t index = next.fetch_add(1);
            if (index >= tasks.size()) return;
            const Task task = tasks[index];
            const StrategyConfig& method = config.methods[static_cast<std::size_t>(task.method_index)];
            const RepeatSetup& setup = setups[static_cast<std::size_t>(task.repeat)];
            const std::string method_name = to_string(method.kind);
            const std::uint64_t run_seed =
                seed_mix(config.base_seed, method_name, static_cast<std::uint64_t>(task.repeat));
            const int budget = config.resolved_budget(setup.instance.dimension());
            RunTrace trace;
            try {
                trace = run_bo(setup.instance, method, budget, run_seed, setup.init, setup.optimum);
            } catch (const std::exception& err) {
                trace.method = method_name;
                trace.seed = run_seed;
                trace.aborted = true;
                trace.flags.push_back(std::string("aborted: ") + err.what());
            }
            trace.repeat = task.repeat;
            traces[index] = std::move(trace);
            {
                std::lock_guard<std::mutex> guard(log_mutex);
                log_line(LogLevel::debug, "finished " + method_name + " repeat " + std::to_string(task.repeat));
            }
        }
    };

    const int workers = std::max(1, config.workers);
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    std::sort(traces.begin(), traces.end(), [](const RunTrace& a, const RunTrace& b) {
        if (a.method != b.method) return a.method < b.method;
        return a.repeat < b.repeat;
    });

    for (const StrategyConfig& method : config.methods) {
        const std::string name = to_string(method.kind);
        bool any_ok = false;
        for (const RunTrace& trace : traces)
            if (trace.method == name && !trace.aborted) any_ok = true;
        if (!any_ok) throw std::runtime_error("run_experiment: every run of method " + name + " failed");
    }
    return traces;
}

namespace detail {

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string format_combination(const Combination& c) {
    std::string out;
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (i > 0) out.push_back(';');
        out += std::to_string(c[i]);
    }
    return out;
}

inline Combination parse_combination(const std::string& field) {
    Combination c;
    std::stringstream stream(field);
    std::string token;
    while (std::getline(stream, token, ';')) c.push_back(std::stoi(token));
    return c;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string current;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(current);
            current.clear();
        } else {
            current.push_back(ch);
        }
    }
    fields.push_back(current);
    return fields;
}

}  // namespace detail

inline constexpr const char* kTraceCsvHeader = "method,repeat,seed,iteration,combination,y,best_so_far,inst_regret,cum_regret";

inline void write_traces_csv(const std::vector<RunTrace>& traces, const std::string& path) {
    if (traces.empty()) throw std::invalid_argument("write_traces_csv: no traces");
    std::vector<const RunTrace*> ordered;
    ordered.reserve(traces.size());
    for (const RunTrace& t : traces) ordered.push_back(&t);
    std::sort(ordered.begin(), ordered.end(), [](const RunTrace* a, const RunTrace* b) {
        if (a->method != b->method) return a->method < b->method;
        return a->repeat < b->repeat;
    });

    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << kTraceCsvHeader << '\n';
    for (const RunTrace* trace : ordered) {
        for (const RunRecord& rec : trace->records) {
            out << trace->method << ',' << trace->repeat << ',' << trace->seed << ',' << rec.iteration << ','
                << detail::format_combination(rec.combination) << ',' << detail::format_double(rec.objective) << ','
                << detail::format_double(rec.best_so_far) << ',';
            if (rec.instant_regret.has_value()) out << detail::format_double(*rec.instant_regret);
            out << ',';
            if (rec.cumulative_regret.has_value()) out << detail::format_double(*rec.cumulative_regret);
            out << '\n';
        }
    }
    if (!out) throw std::runtime_error("short write to " + path);
}

inline std::vector<RunTrace> read_traces_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != kTraceCsvHeader)
        throw std::runtime_error(path + ": unexpected trace CSV header");

    std::vector<RunTrace> traces;
    RunTrace* current = nullptr;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != 9) throw std::runtime_error(path + ": malformed row: " + line);
        const std::string& method = fields[0];
        const int repeat = std::stoi(fields[1]);
        const std::uint64_t seed = std::stoull(fields[2]);
        if (current == nullptr || current->method != method || current->repeat != repeat) {
            traces.push_back(RunTrace{});
            current = &traces.back();
            current->method = method;
            current->repeat = repeat;
            current->seed = seed;
        }
        RunRecord rec;
        rec.iteration = std::stoi(fields[3]);
        rec.combination = detail::parse_combination(fields[4]);
        rec.objective = std::stod(fields[5]);
        rec.best_so_far = std::stod(fields[6]);
        if (!fields[7].empty()) rec.instant_regret = std::stod(fields[7]);
        if (!fields[8].empty()) rec.cumulative_regret = std::stod(fields[8]);
        current->records.push_back(std::move(rec));
    }
    for (RunTrace& trace : traces) {
        if (trace.records.empty()) continue;
        trace.best_value = trace.records.back().best_so_far;
        for (const RunRecord& rec : trace.records)
            if (rec.objective == trace.best_value) {
                trace.best_combination = rec.combination;
                break;
            }
    }
    return traces;
}

struct SummaryRow {
    std::string method;
    int iteration = 0;
    double mean_best = 0.0;
    double std_best = 0.0;
};

struct MethodFinal {
    std::string method;
    double mean_final = 0.0;
    double std_final = 0.0;
    int repeats = 0;
};

struct SummaryTable {
    std::vector<SummaryRow> rows;
    std::vector<MethodFinal> finals;
};

// Mean and sample standard deviation of best-so-far across repeats, per
// (method, iteration); a single repeat reports std 0.
inline SummaryTable summarize(const std::vector<RunTrace>& traces) {
    if (traces.empty()) throw std::invalid_argument("summarize: no traces");
    std::map<std::string, std::map<int, std::vector<double>>> by_method;
    std::map<std::string, std::vector<double>> finals;
    for (const RunTrace& trace : traces) {
        if (trace.records.empty()) continue;
        for (const RunRecord& rec : trace.records)
            by_method[trace.method][rec.iteration].push_back(rec.best_so_far);
        finals[trace.method].push_back(trace.records.back().best_so_far);
    }

    const auto mean_std = [](const std::vector<double>& values) {
        const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
        double ss = 0.0;
        for (double v : values) ss += (v - mean) * (v - mean);
        const double std = values.size() > 1 ? std::sqrt(ss / static_cast<double>(values.size() - 1)) : 0.0;
        return std::make_pair(mean, std);
    };

    SummaryTable table;
    for (const auto& [method, per_iteration] : by_method)
        for (const auto& [iteration, values] : per_iteration) {
            const auto [mean, std] = mean_std(values);
            table.rows.push_back(SummaryRow{method, iteration, mean, std});
        }
    for (const auto& [method, values] : finals) {
        const auto [mean, std] = mean_std(values);
        table.finals.push_back(MethodFinal{method, mean, std, static_cast<int>(values.size())});
    }
    return table;
}

inline constexpr const char* kSummaryCsvHeader = "method,iteration,mean_best,std_best";

inline void write_summary_csv(const SummaryTable& table, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << kSummaryCsvHeader << '\n';
    for (const SummaryRow& row : table.rows)
        out << row.method << ',' << row.iteration << ',' << detail::format_double(row.mean_best) << ','
            << detail::format_double(row.std_best) << '\n';
}

inline SummaryTable read_summary_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != kSummaryCsvHeader)
        throw std::runtime_error(path + ": unexpected summary CSV header");
    SummaryTable table;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != 4) throw std::runtime_error(path + ": malformed row: " + line);
        table.rows.push_back(
            SummaryRow{fields[0], std::stoi(fields[1]), std::stod(fields[2]), std::stod(fields[3])});
    }
    return table;
}

// Standalone SVG chart: one mean curve per method with a +/-1 std band.
inline void plot_svg(const SummaryTable& table, const std::string& path) {
    if (table.rows.empty()) throw std::invalid_argument("plot_svg: empty summary");

    std::map<std::string, std::vector<SummaryRow>> by_method;
    for (const SummaryRow& row : table.rows) by_method[row.method].push_back(row);
    for (auto& [name, rows] : by_method)
        std::sort(rows.begin(), rows.end(),
                  [](const SummaryRow& a, const SummaryRow& b) { return a.iteration < b.iteration; });

    double x_max = 1.0, y_min = std::numeric_limits<double>::infinity(), y_max = -y_min;
    for (const SummaryRow& row : table.rows) {
        x_max = std::max(x_max, static_cast<double>(row.iteration));
        y_min = std::min(y_min, row.mean_best - row.std_best);
        y_max = std::max(y_max, row.mean_best + row.std_best);
    }
    if (y_max - y_min < 1e-12) {
        y_min -= 1.0;
        y_max += 1.0;
    }
    const double pad = 0.05 * (y_max - y_min);
    y_min -= pad;
    y_max += pad;

    const double width = 960, height = 600;
    const double left = 70, right = 40, top = 40, bottom = 60;
    const auto x_of = [&](double it) { return left + (width - left - right) * (it / x_max); };
    const auto y_of = [&](double v) { return top + (height - top - bottom) * (1.0 - (v - y_min) / (y_max - y_min)); };
    const auto fmt = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%g", v);
        return std::string(buf);
    };

    static const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                     "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
    constexpr int kPaletteSize = 8;

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    svg << "  <rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";

    // axes with ticks
    svg << "  <line x1=\"" << left << "\" y1=\"" << (height - bottom) << "\" x2=\"" << (width - right) << "\" y2=\""
        << (height - bottom) << "\" stroke=\"black\"/>\n";
    svg << "  <line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << (height - bottom)
        << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double it = x_max * i / 5.0;
        svg << "  <line x1=\"" << x_of(it) << "\" y1=\"" << (height - bottom) << "\" x2=\"" << x_of(it) << "\" y2=\""
            << (height - bottom + 5) << "\" stroke=\"black\"/>\n";
        svg << "  <text x=\"" << x_of(it) << "\" y=\"" << (height - bottom + 20)
            << "\" font-size=\"12\" text-anchor=\"middle\">" << fmt(it) << "</text>\n";
        const double v = y_min + (y_max - y_min) * i / 5.0;
        svg << "  <line x1=\"" << (left - 5) << "\" y1=\"" << y_of(v) << "\" x2=\"" << left << "\" y2=\"" << y_of(v)
            << "\" stroke=\"black\"/>\n";
        svg << "  <text x=\"" << (left - 8) << "\" y=\"" << (y_of(v) + 4)
            << "\" font-size=\"12\" text-anchor=\"end\">" << fmt(v) << "</text>\n";
    }
    svg << "  <text x=\"" << (left + (width - left - right) / 2) << "\" y=\"" << (height - 15)
        << "\" font-size=\"14\" text-anchor=\"middle\">iteration</text>\n";
    svg << "  <text x=\"18\" y=\"" << (top + (height - top - bottom) / 2)
        << "\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
        << (top + (height - top - bottom) / 2) << ")\">best value so far</text>\n";

    int color_index = 0;
    for (const auto& [name, rows] : by_method) {
        const char* color = kPalette[color_index % kPaletteSize];
        svg << "  <polygon fill=\"" << color << "\" fill-opacity=\"0.15\" stroke=\"none\" points=\"";
        for (const SummaryRow& row : rows) svg << x_of(row.iteration) << "," << y_of(row.mean_best + row.std_best) << " ";
        for (auto it = rows.rbegin(); it != rows.rend(); ++it)
            svg << x_of(it->iteration) << "," << y_of(it->mean_best - it->std_best) << " ";
        svg << "\"/>\n";
        svg << "  <polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (const SummaryRow& row : rows) svg << x_of(row.iteration) << "," << y_of(row.mean_best) << " ";
        svg << "\"/>\n";
        const double legend_y = top + 18.0 * color_index;
        svg << "  <line x1=\"" << (width - right - 150) << "\" y1=\"" << legend_y << "\" x2=\""
            << (width - right - 120) << "\" y2=\"" << legend_y << "\" stroke=\"" << color
            << "\" stroke-width=\"2\"/>\n";
        svg << "  <text x=\"" << (width - right - 112) << "\" y=\"" << (legend_y + 4) << "\" font-size=\"12\">"
            << name << "</text>\n";
        ++color_index;
    }
    svg << "</svg>\n";

    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << svg.str();
}

// Configuration file: one JSON document; CLI flags override these values.
inline ExperimentConfig parse_experiment_config(const nlohmann::json& j) {
    ExperimentConfig config;
    const auto& problem = j.at("problem");
    config.problem.kind = benchmark_kind_from_string(problem.at("kind").get<std::string>());
    if (problem.contains("m")) config.problem.m = problem.at("m").get<int>();
    if (problem.contains("lambda")) config.problem.lambda = problem.at("lambda").get<double>();
    if (problem.contains("forbid_empty")) config.problem.forbid_empty = problem.at("forbid_empty").get<bool>();
    if (problem.contains("alpha")) config.problem.bqp_alpha = problem.at("alpha").get<double>();
    if (problem.contains("grid_rows")) config.problem.grid_rows = problem.at("grid_rows").get<int>();
    if (problem.contains("grid_cols")) config.problem.grid_cols = problem.at("grid_cols").get<int>();
    if (problem.contains("n")) config.problem.reg_n = problem.at("n").get<int>();
    if (problem.contains("p")) config.problem.reg_p = problem.at("p").get<int>();
    if (problem.contains("s")) config.problem.reg_s = problem.at("s").get<int>();
    if (problem.contains("rho")) config.problem.reg_rho = problem.at("rho").get<double>();
    if (problem.contains("nu")) config.problem.reg_nu = problem.at("nu").get<double>();
    if (problem.contains("instance_file")) config.instance_file = problem.at("instance_file").get<std::string>();

    if (!j.contains("methods") || j.at("methods").empty())
        throw std::invalid_argument("config: at least one method is required");
    for (const auto& entry : j.at("methods")) {
        StrategyConfig method;
        if (entry.is_string()) {
            method = make_strategy_config(strategy_kind_from_string(entry.get<std::string>()));
        } else {
            method = make_strategy_config(strategy_kind_from_string(entry.at("kind").get<std::string>()));
            if (entry.contains("d")) method.embedding_dim = entry.at("d").get<int>();
            if (entry.contains("threshold")) method.threshold = entry.at("threshold").get<double>();
            if (entry.contains("kappa")) method.acquisition.schedule.kappa = entry.at("kappa").get<double>();
            if (entry.contains("delta")) method.acquisition.schedule.delta = entry.at("delta").get<double>();
            if (entry.contains("ei_jitter")) method.acquisition.ei_jitter = entry.at("ei_jitter").get<double>();
            if (entry.contains("exclude_observed")) method.exclude_observed = entry.at("exclude_observed").get<bool>();
            if (entry.contains("refit_every")) method.refit_every = entry.at("refit_every").get<int>();
            if (entry.contains("enumeration_cap"))
                method.enumeration_cap = entry.at("enumeration_cap").get<std::uint64_t>();
            if (entry.contains("subsample_size"))
                method.subsample_size = entry.at("subsample_size").get<std::uint64_t>();
            if (entry.contains("search_restarts")) method.search_restarts = entry.at("search_restarts").get<int>();
            if (entry.contains("search_steps")) method.search_steps = entry.at("search_steps").get<int>();
            if (entry.contains("table_cap")) method.table_cap = entry.at("table_cap").get<std::uint64_t>();
        }
        config.methods.push_back(method);
    }

    if (j.contains("budget")) config.budget = j.at("budget").get<int>();
    if (j.contains("repeats")) config.repeats = j.at("repeats").get<int>();
    if (j.contains("base_seed")) config.base_seed = j.at("base_seed").get<std::uint64_t>();
    if (j.contains("fix_instance")) config.fix_instance = j.at("fix_instance").get<bool>();
    if (j.contains("oracle")) config.compute_oracle = j.at("oracle").get<bool>();
    if (j.contains("oracle_cap")) config.oracle_cap = j.at("oracle_cap").get<std::uint64_t>();
    if (j.contains("workers")) config.workers = j.at("workers").get<int>();
    if (j.contains("out_dir")) config.out_dir = j.at("out_dir").get<std::string>();
    return config;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    nlohmann::json j;
    in >> j;
    return parse_experiment_config(j);
}

}  // namespace cbo
