// hsvi: command-line front end for the solver library.
//
// Exit codes: 0 success, 1 usage or input error, 2 partial result (timeout,
// trial cap, or a failed bench row).

#include "hsvi/errors.hpp"
#include "hsvi/evaluator.hpp"
#include "hsvi/policy_io.hpp"
#include "hsvi/pomdp_format.hpp"
#include "hsvi/rocksample.hpp"
#include "hsvi/solver.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitPartial = 2;

void setup_logging() {
    auto logger = spdlog::stderr_color_mt("hsvi");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
    spdlog::set_level(spdlog::level::info);
    if (const char* env = std::getenv("HSVI_LOG")) {
        const auto level = spdlog::level::from_str(env);
        // from_str maps unknown names to "off"; only honour real names.
        if (level != spdlog::level::off || std::string(env) == "off") {
            spdlog::set_level(level);
        }
    }
}

void require_readable(const fs::path& p) {
    std::ifstream in(p);
    if (!in) {
        throw hsvi::IoError("cannot read " + p.string());
    }
}

void require_writable_parent(const fs::path& p) {
    const auto parent = p.has_parent_path() ? p.parent_path() : fs::path(".");
    if (!fs::is_directory(parent)) {
        throw hsvi::IoError("output directory does not exist: " + parent.string());
    }
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

// ---------------------------------------------------------------------------
// solve / anytime

struct SolveArgs {
    std::string model;
    double epsilon = 1e-3;
    double zeta = 0.95;
    std::optional<double> timeout;
    std::optional<long> max_trials;
    std::string trace;
    std::string policy;
    bool renormalize = false;
};

int run_solve(const SolveArgs& args, bool anytime) {
    require_readable(args.model);
    if (!args.trace.empty()) {
        require_writable_parent(args.trace);
    }
    if (!args.policy.empty()) {
        require_writable_parent(args.policy);
    }

    hsvi::ParseOptions parse;
    parse.renormalize = args.renormalize;
    const auto model = hsvi::load_pomdp(args.model, parse);
    spdlog::info("model {}: {} states, {} actions, {} observations, discount {}", args.model, model.num_states(),
                 model.num_actions(), model.num_observations(), model.discount());

    hsvi::SolverConfig config;
    config.epsilon = args.epsilon;
    config.zeta = args.zeta;
    if (args.timeout) {
        config.timeout = std::chrono::duration<double>(*args.timeout);
    }
    config.max_trials = args.max_trials;
    config.on_trial = [](const hsvi::BoundsPair&, const hsvi::TraceRow& row) {
        spdlog::debug("trial {} t={:.2f}s V=[{:.6f}, {:.6f}] width={:.6f} |G|={} |U|={}", row.trial, row.wall_time_s,
                      row.lower_b0, row.upper_b0, row.width, row.num_vectors, row.num_points);
    };

    const auto result = anytime ? hsvi::solve_anytime(model, config) : hsvi::solve(model, config);

    if (!args.trace.empty()) {
        std::ofstream out(args.trace);
        hsvi::write_trace_csv(result.trace, out);
        if (!out) {
            throw hsvi::IoError("write failed for " + args.trace);
        }
    }
    if (!args.policy.empty()) {
        hsvi::save_policy(hsvi::make_policy(result.bounds.lower, model.num_states()), fs::path(args.policy));
    }

    const auto& last = result.trace.back();
    std::cout << "terminated: " << hsvi::to_string(result.terminated_by) << '\n'
              << "lower_b0: " << fmt_double(last.lower_b0) << '\n'
              << "upper_b0: " << fmt_double(last.upper_b0) << '\n'
              << "width: " << fmt_double(last.width) << '\n'
              << "initial_width: " << fmt_double(result.initial_b0.width()) << '\n'
              << "trials: " << last.trial << '\n'
              << "vectors: " << last.num_vectors << '\n'
              << "points: " << last.num_points << '\n'
              << "wall_time_s: " << fmt_double(last.wall_time_s) << '\n';
    return result.terminated_by == hsvi::Termination::epsilon_reached ? kExitOk : kExitPartial;
}

// ---------------------------------------------------------------------------
// gen-rocksample

struct GenArgs {
    int n = 4;
    int k = 4;
    std::uint32_t layout_seed = 0;
    double d0 = 20.0;
    std::string out;
};

int run_gen(const GenArgs& args) {
    require_writable_parent(args.out);
    auto params = hsvi::default_layout(args.n, args.k, args.layout_seed);
    params.half_efficiency_distance = args.d0;
    const auto model = hsvi::gen_rocksample(params);
    hsvi::save_pomdp(model, args.out);
    std::cout << model.num_states() << ' ' << model.num_actions() << ' ' << model.num_observations() << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvalArgs {
    std::string model;
    std::string policy;
    int episodes = 500;
    int horizon = 251;
    std::uint64_t seed = 0;
    int jobs = 1;
    bool undiscounted = false;
    bool json_out = false;
};

json eval_json(const hsvi::EvalResult& r, const hsvi::EvalConfig& c) {
    return json{{"mean", r.mean},
                {"std_error", r.std_error},
                {"std_error_defined", r.std_error_defined},
                {"ci95_half_width", r.half_width},
                {"episodes", c.episodes},
                {"horizon", c.horizon},
                {"seed", c.seed},
                {"discounted", c.discounted},
                {"resampled", r.resampled},
                {"truncation_bound", r.truncation_bound}};
}

int run_evaluate(const EvalArgs& args) {
    require_readable(args.model);
    require_readable(args.policy);
    const auto model = hsvi::load_pomdp(args.model);
    const auto policy = hsvi::load_policy(fs::path(args.policy));
    if (policy.num_states != model.num_states()) {
        throw hsvi::ValidationError("policy has |S|=" + std::to_string(policy.num_states) + " but the model has " +
                                    std::to_string(model.num_states()) + " states");
    }
    for (const auto& v : policy.vectors) {
        if (v.action >= model.num_actions()) {
            throw hsvi::ValidationError("policy uses action " + std::to_string(v.action) + " but the model has " +
                                        std::to_string(model.num_actions()));
        }
    }
    if (policy.vectors.empty()) {
        throw hsvi::ValidationError("policy has no vectors");
    }

    hsvi::EvalConfig config;
    config.episodes = args.episodes;
    config.horizon = args.horizon;
    config.seed = args.seed;
    config.jobs = args.jobs;
    config.discounted = !args.undiscounted;
    const auto result = hsvi::evaluate(model, hsvi::to_lower_bound(policy), config);

    if (args.json_out) {
        std::cout << eval_json(result, config).dump() << '\n';
    } else {
        std::cout << "mean: " << fmt_double(result.mean) << '\n'
                  << "ci95: " << fmt_double(result.half_width) << (result.std_error_defined ? "" : " (undefined)")
                  << '\n'
                  << "episodes: " << config.episodes << '\n';
    }
    if (result.resampled > 0) {
        spdlog::warn("{} episodes were redrawn after an impossible observation", result.resampled);
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// bench

struct BenchRow {
    std::string name;
    std::optional<std::string> model_path;
    int rs_n = 0;
    int rs_k = 0;
    std::uint32_t rs_seed = 0;
    double budget_s = 600.0;
    double epsilon = 1e-3;
    hsvi::EvalConfig eval;
};

BenchRow parse_row(const json& j, std::size_t index) {
    BenchRow row;
    row.name = j.value("name", "row" + std::to_string(index));
    if (j.contains("model")) {
        row.model_path = j.at("model").get<std::string>();
    } else if (j.contains("rocksample")) {
        const auto& rs = j.at("rocksample");
        row.rs_n = rs.at("n").get<int>();
        row.rs_k = rs.at("k").get<int>();
        row.rs_seed = rs.value("layout_seed", 0u);
    } else {
        throw hsvi::InvalidParams("bench row '" + row.name + "' needs 'model' or 'rocksample'");
    }
    row.budget_s = j.value("time_budget_s", 600.0);
    row.epsilon = j.value("epsilon", 1e-3);
    row.eval.episodes = j.value("episodes", 500);
    row.eval.horizon = j.value("horizon", 251);
    row.eval.seed = j.value("seed", std::uint64_t{0});
    row.eval.jobs = j.value("jobs", 1);
    return row;
}

int run_bench(const std::string& suite_path, std::string out_dir) {
    require_readable(suite_path);
    json suite;
    {
        std::ifstream in(suite_path);
        try {
            suite = json::parse(in);
        } catch (const json::parse_error& e) {
            throw hsvi::ParseError(e.what(), 0);
        }
    }
    if (out_dir.empty()) {
        out_dir = suite.value("output_dir", std::string("."));
    }
    fs::create_directories(out_dir);

    std::vector<BenchRow> rows;
    for (std::size_t i = 0; i < suite.value("rows", json::array()).size(); ++i) {
        rows.push_back(parse_row(suite["rows"][i], i));
    }
    for (const auto& r : rows) {
        if (r.model_path) {
            require_readable(*r.model_path);
        }
    }

    std::ofstream table_file(fs::path(out_dir) / "table.csv");
    const std::string header =
        "name,states,actions,observations,lower_b0,upper_b0,mean_reward,ci95,num_vectors,wall_time_s";
    std::cout << header << '\n';
    table_file << header << '\n';

    bool failed = false;
    for (const auto& r : rows) {
        try {
            const auto model = r.model_path ? hsvi::load_pomdp(*r.model_path)
                                            : hsvi::gen_rocksample(r.rs_n, r.rs_k, r.rs_seed);
            spdlog::info("bench {}: {} states, budget {}s", r.name, model.num_states(), r.budget_s);
            hsvi::SolverConfig config;
            config.epsilon = r.epsilon;
            config.timeout = std::chrono::duration<double>(r.budget_s);
            const auto result = hsvi::solve_anytime(model, config);
            {
                std::ofstream trace(fs::path(out_dir) / (r.name + ".trace.csv"));
                hsvi::write_trace_csv(result.trace, trace);
            }
            const auto eval = hsvi::evaluate(model, result.bounds.lower, r.eval);
            const auto& last = result.trace.back();
            const std::string line = r.name + ',' + std::to_string(model.num_states()) + ',' +
                                     std::to_string(model.num_actions()) + ',' +
                                     std::to_string(model.num_observations()) + ',' + fmt_double(last.lower_b0) +
                                     ',' + fmt_double(last.upper_b0) + ',' + fmt_double(eval.mean) + ',' +
                                     fmt_double(eval.half_width) + ',' + std::to_string(last.num_vectors) + ',' +
                                     fmt_double(last.wall_time_s);
            std::cout << line << std::endl;
            table_file << line << '\n';
        } catch (const std::exception& e) {
            failed = true;
            spdlog::error("bench row {} failed: {}", r.name, e.what());
        }
    }
    return failed ? kExitPartial : kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    setup_logging();

    CLI::App app{"HSVI solver for discounted POMDPs"};
    app.require_subcommand(1);

    SolveArgs solve_args;
    auto add_solve_flags = [&](CLI::App* cmd) {
        cmd->add_option("model", solve_args.model, ".pomdp model file")->required();
        cmd->add_option("--epsilon", solve_args.epsilon, "target width at b0")->capture_default_str();
        cmd->add_option("--timeout", solve_args.timeout, "wall-clock limit in seconds");
        cmd->add_option("--max-trials", solve_args.max_trials, "stop after this many trials");
        cmd->add_option("--trace", solve_args.trace, "write the per-trial trace CSV here");
        cmd->add_option("--policy", solve_args.policy, "write the lower-bound policy here");
        cmd->add_flag("--renormalize", solve_args.renormalize, "rescale T and O rows to sum to one");
    };
    auto* solve_cmd = app.add_subcommand("solve", "run HSVI to a fixed epsilon");
    add_solve_flags(solve_cmd);
    auto* anytime_cmd = app.add_subcommand("anytime", "run HSVI with shrinking per-trial epsilon");
    add_solve_flags(anytime_cmd);
    anytime_cmd->add_option("--zeta", solve_args.zeta, "per-trial epsilon factor")->capture_default_str();

    GenArgs gen_args;
    auto* gen_cmd = app.add_subcommand("gen-rocksample", "write a RockSample[n,k] model");
    gen_cmd->add_option("n", gen_args.n, "grid size")->required();
    gen_cmd->add_option("k", gen_args.k, "number of rocks")->required();
    gen_cmd->add_option("out", gen_args.out, "output .pomdp path")->required();
    gen_cmd->add_option("--layout-seed", gen_args.layout_seed, "rock placement seed")->capture_default_str();
    gen_cmd->add_option("--d0", gen_args.d0, "sensor half-efficiency distance")->capture_default_str();

    EvalArgs eval_args;
    auto* eval_cmd = app.add_subcommand("evaluate", "simulate a policy");
    eval_cmd->add_option("model", eval_args.model, ".pomdp model file")->required();
    eval_cmd->add_option("policy", eval_args.policy, "policy file")->required();
    eval_cmd->add_option("--episodes", eval_args.episodes)->capture_default_str();
    eval_cmd->add_option("--horizon", eval_args.horizon)->capture_default_str();
    eval_cmd->add_option("--seed", eval_args.seed)->capture_default_str();
    eval_cmd->add_option("--jobs", eval_args.jobs, "worker threads")->capture_default_str();
    eval_cmd->add_flag("--undiscounted", eval_args.undiscounted, "sum raw rewards");
    eval_cmd->add_flag("--json", eval_args.json_out, "print a JSON object");

    std::string suite_path;
    std::string bench_out;
    auto* bench_cmd = app.add_subcommand("bench", "run a benchmark suite");
    bench_cmd->add_option("suite", suite_path, "suite JSON file")->required();
    bench_cmd->add_option("--out-dir", bench_out, "directory for traces and table.csv");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitError;
    }

    try {
        if (*solve_cmd) {
            return run_solve(solve_args, false);
        }
        if (*anytime_cmd) {
            return run_solve(solve_args, true);
        }
        if (*gen_cmd) {
            return run_gen(gen_args);
        }
        if (*eval_cmd) {
            return run_evaluate(eval_args);
        }
        return run_bench(suite_path, bench_out);
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return kExitError;
    }
}
