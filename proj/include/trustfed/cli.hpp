#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace trustfed {

// Exit codes: 0 success, 1 runtime failure, 2 usage/config error.
constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

// TRUSTFED_LOG=off|info|debug controls diagnostic verbosity on stderr.
enum class LogLevel { off = 0, info = 1, debug = 2 };
LogLevel log_level();
void log_info(const std::string& message);
void log_debug(const std::string& message);

// run --config <file> --out <dir>: executes the scenario and writes
// trace.jsonl, summary.csv, trust_log.jsonl, and manifest.json atomically.
int cmd_run(const std::string& config_path, const std::string& out_dir, int workers = -1);

// compare <trace>... --out <csv>: merges >= 2 equal-length traces into one
// CSV of per-round accuracy, mean trust, and dismissal flags.
int cmd_compare(const std::vector<std::string>& trace_paths, const std::string& out_csv);

// bench-opt --instance <file> --seed N [--oracle]: standalone GA run; with
// --oracle (n <= 20) also prints the exhaustive optimum and the ratio.
int cmd_bench_opt(const std::string& instance_path, std::uint64_t seed, bool oracle);

} // namespace trustfed
