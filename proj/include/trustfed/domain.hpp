#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "trustfed/common.hpp"

namespace trustfed {

// One volunteer device: capacities, mobility and availability state, plus the
// behavioral averages the orchestrator maintains about it.
struct DeviceProfile {
    std::string id;
    std::string device_type;      // archetype tag: phone / tablet / laptop
    double cpu = 0.0;             // abstract compute units
    double memory = 0.0;          // bytes
    double diskspace = 0.0;       // megabytes
    double battery = 0.0;         // percent, [0, 100]
    double availability = 0.0;    // seconds remaining in the current area
    int area = 0;
    double avg_movements = 0.0;   // area transitions per simulated hour, smoothed
    double avg_finish_time = 0.0; // seconds, smoothed over reported rounds
    int joined_round = 0;         // device is active in rounds > joined_round

    bool operator==(const DeviceProfile&) const = default;
};

// Resource cost of running the learning container on the matching device.
struct LearningUtility {
    double cpu_cost = 0.0;
    double memory_cost = 0.0;
    double battery_cost = 0.0;
    double diskspace_cost = 0.0;

    bool operator==(const LearningUtility&) const = default;
};

// Per-client trust state: the four measurement inputs, bounded histories, and
// the aggregated trust value in [0, 1].
struct TrustRecord {
    long success_count = 0;
    long deployed_count = 0;
    std::deque<double> accuracy_history;      // M_j: accepted accuracies, newest last
    std::map<int, double> past_accuracy;      // round -> reported accuracy (probe reference)
    std::set<std::string> previous_neighbors; // cluster peers from the last deployed round
    std::deque<int> abnormal_counts;          // per-round raw Tr2 counts, same window
    int group_common_neighbors = 0;           // raw Tr3 of the last deployed round
    int contradiction_count = 0;              // raw Tr4 of the last deployed round
    double trust = 0.5;

    int abnormal_count_window() const {
        return std::accumulate(abnormal_counts.begin(), abnormal_counts.end(), 0);
    }

    bool operator==(const TrustRecord&) const = default;
};

// Binary deployment decision over n devices; doubles as the GA chromosome.
struct SelectionVector {
    std::vector<std::uint8_t> bits;

    static SelectionVector zeros(std::size_t n) { return SelectionVector{std::vector<std::uint8_t>(n, 0)}; }
    static SelectionVector ones(std::size_t n) { return SelectionVector{std::vector<std::uint8_t>(n, 1)}; }

    std::size_t size() const { return bits.size(); }
    long count() const { return std::accumulate(bits.begin(), bits.end(), 0L); }
    bool selected(std::size_t i) const { return bits[i] != 0; }

    bool operator==(const SelectionVector&) const = default;
};

// Objective weights w1..w5; construction enforces the sum-to-one contract.
struct ObjectiveWeights {
    std::array<double, 5> w{0.2, 0.2, 0.2, 0.2, 0.2};

    static ObjectiveWeights make(const std::array<double, 5>& w) {
        double sum = 0.0;
        for (double x : w) {
            if (x < 0.0 || x > 1.0) throw Error("weight-range", "weights must lie in [0,1]");
            sum += x;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw Error("weight-sum", "weights must sum to 1, got " + std::to_string(sum));
        return ObjectiveWeights{w};
    }

    double operator[](std::size_t i) const { return w[i]; }

    bool operator==(const ObjectiveWeights&) const = default;
};

struct PopulationSpec {
    int clients = 50;
    int areas = 6;
    int locations = 20;
    int min_records = 200;
    int max_records = 1500;
    double skew = 0.5;          // label-concentration parameter, > 0
    double mover_fraction = 0.3;
    std::uint64_t seed = 0;
};

struct GaParams {
    int population_size = 50;
    int generations = 100;
    double crossover_prob = 0.9;
    int patience = 20;               // generations without archive change
    std::string survivor_policy = "truncation"; // or "generational"
};

struct FlHyperParams {
    int rounds = 40;
    double learning_rate = 0.3;
    int local_epochs = 2;
    int batch_size = 32;
    int hidden_units = 0; // 0 = plain softmax regression
};

struct MaliciousBehavior {
    enum class Tag { label_flip, random_weights, data_hiding, context_falsify, timing_manipulation };
    Tag tag = Tag::label_flip;
    double intensity = 0.0; // [0, 1]
    int onset_round = 1;    // first round (1-based) the behavior is active

    bool operator==(const MaliciousBehavior&) const = default;
};

const char* to_string(MaliciousBehavior::Tag tag);
MaliciousBehavior::Tag behavior_tag_from_string(const std::string& name);

// Full scenario description; every field has a default except the master seed,
// which scenario files must set explicitly.
struct ScenarioConfig {
    std::string name = "scenario";
    PopulationSpec population;

    // thresholds
    double st_min_availability = 180.0; // ST, seconds
    double max_trust_cutoff = 0.8;      // MaxT
    int max_high_trust_selected = 6;    // Mt
    double max_movement_cutoff = 3.0;   // MaxM
    int max_high_movement_selected = 8; // Mm
    int min_selected = 0;               // optional extra constraint, 0 = none
    double dismissal_fraction = 0.5;

    // trust engine
    std::array<double, 4> alphas{2.0, 1.0, 2.0, 1.0};
    double epsilon = 3.5;
    double trust_beta = 0.5;
    int warmup_deployed_rounds = 3;
    int min_z_history = 5; // accuracy points needed before Tr2 z-checks run
    int history_window = 20;
    int probe_lag = 3;
    double probe_trust_threshold = 0.4;
    int min_trusted_per_area = 2;

    ObjectiveWeights weights;
    GaParams ga;
    FlHyperParams fl;

    double straggler_drop_prob = 0.05;

    std::map<std::string, MaliciousBehavior> malicious;

    enum class InitialTrustMode { sdr_bootstrap, fixed, zero };
    InitialTrustMode initial_trust = InitialTrustMode::sdr_bootstrap;
    double initial_trust_fixed = 0.5;

    enum class SelectionPolicy { ga, random };
    SelectionPolicy selection_policy = SelectionPolicy::ga;
    double random_select_prob = 0.3;

    // staggered joining: a seeded fraction of clients joins during
    // [join_round_min, join_round_max] instead of round 1
    double join_fraction = 0.0;
    int join_round_min = 0;
    int join_round_max = 0;

    int workers = 0; // 0 = hardware concurrency
    std::uint64_t seed = 0;
};

// Named data problem found by validation; violations are data, not faults.
struct Violation {
    std::string kind;
    std::string detail;
};

std::vector<Violation> validate_profile(const DeviceProfile& profile,
                                        const LearningUtility& utility,
                                        int area_count = 0);

std::vector<Violation> validate_population(const std::vector<DeviceProfile>& devices,
                                           const std::vector<LearningUtility>& utilities,
                                           int area_count = 0);

std::vector<Violation> validate_scenario(const ScenarioConfig& config);

// Tracks admitted and evicted ids; an evicted id can never be admitted again.
class PopulationRegistry {
public:
    std::optional<Violation> admit(const std::string& id);
    void evict(const std::string& id);
    bool active(const std::string& id) const { return active_.count(id) != 0; }

private:
    std::set<std::string> active_;
    std::set<std::string> evicted_;
};

} // namespace trustfed
