#include <CLI11.hpp>

#include "trustfed/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Trust-driven on-demand FL simulator and deployment optimizer"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    int workers = -1;
    CLI::App* run = app.add_subcommand("run", "execute a scenario config");
    run->add_option("--config", config_path, "scenario JSON file")->required();
    run->add_option("--out", out_dir, "output directory")->required();
    run->add_option("--workers", workers, "worker threads for local training");

    std::vector<std::string> trace_paths;
    std::string compare_out;
    CLI::App* compare = app.add_subcommand("compare", "merge traces into one CSV");
    compare->add_option("traces", trace_paths, "trace.jsonl files")->expected(-1);
    compare->add_option("--out", compare_out, "output CSV path")->required();

    std::string instance_path;
    std::uint64_t seed = 1;
    bool oracle = false;
    CLI::App* bench = app.add_subcommand("bench-opt", "standalone deployment optimization");
    bench->add_option("--instance", instance_path, "instance JSON file")->required();
    bench->add_option("--seed", seed, "GA seed");
    bench->add_flag("--oracle", oracle, "also run the exhaustive oracle (n <= 20)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : trustfed::kExitUsage;
    }

    if (run->parsed()) return trustfed::cmd_run(config_path, out_dir, workers);
    if (compare->parsed()) return trustfed::cmd_compare(trace_paths, compare_out);
    if (bench->parsed()) return trustfed::cmd_bench_opt(instance_path, seed, oracle);
    return trustfed::kExitUsage;
}
