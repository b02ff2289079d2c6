#include "trustfed/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>

#include <json.hpp>

#include "trustfed/config.hpp"
#include "trustfed/flsim.hpp"
#include "trustfed/io.hpp"
#include "trustfed/optimizer.hpp"

namespace trustfed {

using nlohmann::json;

LogLevel log_level() {
    const char* env = std::getenv("TRUSTFED_LOG");
    if (!env) return LogLevel::off;
    const std::string v(env);
    if (v == "debug") return LogLevel::debug;
    if (v == "info") return LogLevel::info;
    return LogLevel::off;
}

void log_info(const std::string& message) {
    if (log_level() >= LogLevel::info) std::cerr << "[trustfed] " << message << "\n";
}

void log_debug(const std::string& message) {
    if (log_level() >= LogLevel::debug) std::cerr << "[trustfed:debug] " << message << "\n";
}

int cmd_run(const std::string& config_path, const std::string& out_dir, int workers) {
    std::string config_bytes;
    ScenarioConfig config;
    try {
        config_bytes = read_file(config_path);
        config = scenario_config_from_json(config_bytes);
    } catch (const Error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    }
    if (workers >= 0) config.workers = workers;

    try {
        const auto started = std::chrono::steady_clock::now();
        log_info("running scenario '" + config.name + "' from " + config_path);
        const ScenarioResult result = run_scenario(config);
        const double duration =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

        namespace fs = std::filesystem;
        fs::create_directories(out_dir);
        write_file_atomic((fs::path(out_dir) / "trace.jsonl").string(),
                          traces_to_jsonl(result.traces));
        write_file_atomic((fs::path(out_dir) / "summary.csv").string(),
                          summary_to_csv(result.traces));
        write_file_atomic((fs::path(out_dir) / "trust_log.jsonl").string(),
                          trust_log_to_jsonl(result.trust_log));
        json manifest;
        manifest["scenario"] = config.name;
        manifest["config_path"] = config_path;
        manifest["output_dir"] = out_dir;
        manifest["config_sha1"] = git_blob_sha1(config_bytes);
        manifest["duration_seconds"] = duration;
        write_file_atomic((fs::path(out_dir) / "manifest.json").string(),
                          manifest.dump(2) + "\n");
        log_info("wrote " + std::to_string(result.traces.size()) + " rounds to " + out_dir);
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

int cmd_compare(const std::vector<std::string>& trace_paths, const std::string& out_csv) {
    if (trace_paths.size() < 2) {
        std::cerr << "compare needs at least two traces\n";
        return kExitUsage;
    }
    std::vector<std::vector<RoundTrace>> traces;
    std::vector<std::string> names;
    try {
        for (const auto& path : trace_paths) {
            traces.push_back(traces_from_jsonl(read_file(path)));
            std::string stem = std::filesystem::path(path).parent_path().filename().string();
            if (stem.empty()) stem = std::filesystem::path(path).stem().string();
            names.push_back(stem + "_" + std::to_string(names.size()));
        }
    } catch (const std::exception& e) {
        std::cerr << "trace error: " << e.what() << "\n";
        return kExitUsage;
    }
    for (const auto& t : traces) {
        if (t.size() != traces.front().size()) {
            std::cerr << "traces have differing round counts\n";
            return kExitUsage;
        }
    }

    try {
        write_file_atomic(out_csv, [&](std::ostream& out) {
            out << "round";
            for (const auto& n : names) out << ",accuracy_" << n;
            for (const auto& n : names) out << ",mean_trust_" << n;
            for (const auto& n : names) out << ",dismissed_" << n;
            out << "\n";
            for (std::size_t r = 0; r < traces.front().size(); ++r) {
                out << traces.front()[r].round;
                for (const auto& t : traces) out << ',' << t[r].global_accuracy;
                for (const auto& t : traces) {
                    double sum = 0.0;
                    for (const auto& c : t[r].per_client) sum += c.trust;
                    out << ',' << (t[r].per_client.empty() ? 0.0 : sum / t[r].per_client.size());
                }
                for (const auto& t : traces) out << ',' << (t[r].dismissed ? 1 : 0);
                out << "\n";
            }
        });
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

namespace {

// Exhaustive scan over all 2^n raw selections, keeping the feasible best.
struct OracleResult {
    double fitness = 0.0;
    SelectionVector best;
    bool found = false;
};

OracleResult brute_force_optimum(const DeploymentContext& ctx) {
    OracleResult out;
    const std::size_t n = ctx.devices.size();
    for (std::uint64_t mask = 0; mask < (1ull << n); ++mask) {
        SelectionVector sel = SelectionVector::zeros(n);
        for (std::size_t i = 0; i < n; ++i) sel.bits[i] = (mask >> i) & 1;
        if (!check_constraints(sel, ctx).empty()) continue;
        const double fitness = scalarize(evaluate_objectives(sel, ctx), ctx.weights);
        if (!out.found || fitness > out.fitness) {
            out.fitness = fitness;
            out.best = sel;
            out.found = true;
        }
    }
    return out;
}

} // namespace

int cmd_bench_opt(const std::string& instance_path, std::uint64_t seed, bool oracle) {
    DeploymentContext ctx;
    try {
        ctx = load_instance(instance_path);
    } catch (const std::exception& e) {
        std::cerr << "instance error: " << e.what() << "\n";
        return kExitUsage;
    }
    if (oracle && ctx.devices.size() > 20) {
        std::cerr << "--oracle supports at most 20 devices, got " << ctx.devices.size() << "\n";
        return kExitUsage;
    }

    try {
        GaParams params;
        const GaResult result = ga_optimize(ctx, params, seed);
        std::cout << "selected:";
        for (std::size_t i = 0; i < result.chosen.size(); ++i)
            if (result.chosen.selected(i)) std::cout << ' ' << ctx.devices[i].id;
        std::cout << "\nbits: ";
        for (auto b : result.chosen.bits) std::cout << int(b);
        const auto f = result.chosen_objectives.as_array();
        std::cout << "\nobjectives: [" << f[0] << ", " << f[1] << ", " << f[2] << ", " << f[3]
                  << ", " << f[4] << "]";
        std::cout << "\nfitness: " << result.chosen_fitness;
        std::cout << "\npareto_size: " << result.pareto.size() << "\n";
        if (oracle) {
            const OracleResult opt = brute_force_optimum(ctx);
            if (!opt.found) {
                std::cout << "oracle: no feasible selection\n";
            } else {
                const double ratio =
                    opt.fitness > 0.0 ? result.chosen_fitness / opt.fitness
                                      : (result.chosen_fitness >= opt.fitness ? 1.0 : 0.0);
                std::cout << "oracle_fitness: " << opt.fitness << "\nratio: " << ratio << "\n";
            }
        }
        return kExitOk;
    } catch (const Error& e) {
        if (e.code() == "no-feasible-solution") {
            std::cout << "no-feasible-solution\n";
            return kExitOk;
        }
        std::cerr << "runtime error: " << e.what() << "\n";
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

} // namespace trustfed
