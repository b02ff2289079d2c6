#pragma once

#include <functional>
#include <string>
#include <vector>

#include "trustfed/bootstrap.hpp"
#include "trustfed/domain.hpp"
#include "trustfed/flsim.hpp"

namespace trustfed {

// Population CSV, one device per row:
//   id,type,cpu,memory,diskspace,battery,availability,area,avg_movements,avg_finish_time
std::string population_to_csv(const std::vector<DeviceProfile>& devices);
std::vector<DeviceProfile> population_from_csv(const std::string& text);

// Utility CSV: id,cpu_cost,memory_cost,battery_cost,diskspace_cost
std::string utilities_to_csv(const std::vector<DeviceProfile>& devices,
                             const std::vector<LearningUtility>& utilities);
std::vector<std::pair<std::string, LearningUtility>> utilities_from_csv(const std::string& text);

std::string device_profile_to_json(const DeviceProfile& profile);
DeviceProfile device_profile_from_json(const std::string& text);
std::string trust_record_to_json(const TrustRecord& record);
TrustRecord trust_record_from_json(const std::string& text);

// Trace JSON-lines, one object per round.
std::string traces_to_jsonl(const std::vector<RoundTrace>& traces);
std::vector<RoundTrace> traces_from_jsonl(const std::string& text);

// Trust log JSON-lines, one object per (round, client).
std::string trust_log_to_jsonl(const std::vector<TrustLogEntry>& log);
std::vector<TrustLogEntry> trust_log_from_jsonl(const std::string& text);

// Summary CSV: round,global_accuracy,mean_trust_honest,mean_trust_malicious,
// selected_count,dismissed
std::string summary_to_csv(const std::vector<RoundTrace>& traces);

std::string read_file(const std::string& path);

// Writes via temp file + rename so a crash mid-write never leaves a partial
// target. The producer receives the temp stream; if it throws, the temp file
// is removed and the target is untouched.
void write_file_atomic(const std::string& path, const std::string& content);
void write_file_atomic(const std::string& path,
                       const std::function<void(std::ostream&)>& producer);

// Git-style blob hash (sha1 over "blob <len>\0<bytes>"), hex-encoded.
std::string git_blob_sha1(const std::string& bytes);

} // namespace trustfed
