#include "trustfed/domain.hpp"

#include <cmath>
#include <set>

namespace trustfed {

const char* to_string(MaliciousBehavior::Tag tag) {
    switch (tag) {
        case MaliciousBehavior::Tag::label_flip: return "label_flip";
        case MaliciousBehavior::Tag::random_weights: return "random_weights";
        case MaliciousBehavior::Tag::data_hiding: return "data_hiding";
        case MaliciousBehavior::Tag::context_falsify: return "context_falsify";
        case MaliciousBehavior::Tag::timing_manipulation: return "timing_manipulation";
    }
    return "unknown";
}

MaliciousBehavior::Tag behavior_tag_from_string(const std::string& name) {
    if (name == "label_flip") return MaliciousBehavior::Tag::label_flip;
    if (name == "random_weights") return MaliciousBehavior::Tag::random_weights;
    if (name == "data_hiding") return MaliciousBehavior::Tag::data_hiding;
    if (name == "context_falsify") return MaliciousBehavior::Tag::context_falsify;
    if (name == "timing_manipulation") return MaliciousBehavior::Tag::timing_manipulation;
    throw Error("unknown-behavior", "no malicious behavior named '" + name + "'");
}

std::vector<Violation> validate_profile(const DeviceProfile& profile,
                                        const LearningUtility& utility,
                                        int area_count) {
    std::vector<Violation> out;
    auto nonneg = [&](double v, const char* field) {
        if (v < 0.0 || !std::isfinite(v))
            out.push_back({"negative-resource", profile.id + ": " + field});
    };
    nonneg(profile.cpu, "cpu");
    nonneg(profile.memory, "memory");
    nonneg(profile.diskspace, "diskspace");
    nonneg(profile.availability, "availability");
    nonneg(profile.avg_movements, "avg_movements");
    nonneg(profile.avg_finish_time, "avg_finish_time");
    nonneg(utility.cpu_cost, "cpu_cost");
    nonneg(utility.memory_cost, "memory_cost");
    nonneg(utility.battery_cost, "battery_cost");
    nonneg(utility.diskspace_cost, "diskspace_cost");
    if (profile.battery < 0.0 || profile.battery > 100.0)
        out.push_back({"battery-range", profile.id + ": battery=" + std::to_string(profile.battery)});
    if (profile.area < 0 || (area_count > 0 && profile.area >= area_count))
        out.push_back({"area-range", profile.id + ": area=" + std::to_string(profile.area)});
    if (profile.joined_round < 0)
        out.push_back({"negative-resource", profile.id + ": joined_round"});
    return out;
}

std::vector<Violation> validate_population(const std::vector<DeviceProfile>& devices,
                                           const std::vector<LearningUtility>& utilities,
                                           int area_count) {
    std::vector<Violation> out;
    std::set<std::string> seen;
    for (std::size_t i = 0; i < devices.size(); ++i) {
        const LearningUtility util = i < utilities.size() ? utilities[i] : LearningUtility{};
        auto v = validate_profile(devices[i], util, area_count);
        out.insert(out.end(), v.begin(), v.end());
        if (!seen.insert(devices[i].id).second)
            out.push_back({"duplicate-id", devices[i].id});
    }
    return out;
}

std::vector<Violation> validate_scenario(const ScenarioConfig& c) {
    std::vector<Violation> out;
    auto in01 = [&](double v, const char* field) {
        if (v < 0.0 || v > 1.0) out.push_back({"range", std::string(field) + " must lie in [0,1]"});
    };
    in01(c.dismissal_fraction, "dismissal_fraction");
    in01(c.max_trust_cutoff, "max_trust_cutoff");
    in01(c.trust_beta, "trust_beta");
    in01(c.straggler_drop_prob, "straggler_drop_prob");
    in01(c.random_select_prob, "random_select_prob");
    in01(c.join_fraction, "join_fraction");
    for (double a : c.alphas)
        if (a < 0.0) out.push_back({"range", "alphas must be >= 0"});
    if (c.epsilon <= 0.0) out.push_back({"range", "epsilon must be > 0"});
    if (c.st_min_availability < 0.0) out.push_back({"range", "st_min_availability must be >= 0"});
    if (c.population.clients < 1) out.push_back({"range", "population.clients must be >= 1"});
    if (c.population.areas < 1 || c.population.locations < c.population.areas)
        out.push_back({"range", "population requires locations >= areas >= 1"});
    if (c.population.min_records < 1 || c.population.max_records < c.population.min_records)
        out.push_back({"range", "record range must satisfy 1 <= min <= max"});
    if (c.population.skew <= 0.0) out.push_back({"range", "population.skew must be > 0"});
    in01(c.population.mover_fraction, "population.mover_fraction");
    if (c.fl.rounds < 0) out.push_back({"range", "fl.rounds must be >= 0"});
    if (c.fl.local_epochs < 0) out.push_back({"range", "fl.local_epochs must be >= 0"});
    if (c.fl.batch_size < 1) out.push_back({"range", "fl.batch_size must be >= 1"});
    if (c.ga.population_size < 2) out.push_back({"range", "ga.population_size must be >= 2"});
    if (c.ga.generations < 1) out.push_back({"range", "ga.generations must be >= 1"});
    in01(c.ga.crossover_prob, "ga.crossover_prob");
    if (c.ga.survivor_policy != "truncation" && c.ga.survivor_policy != "generational")
        out.push_back({"range", "ga.survivor_policy must be truncation or generational"});
    for (const auto& [id, b] : c.malicious) {
        if (b.intensity < 0.0 || b.intensity > 1.0)
            out.push_back({"range", "malicious intensity for " + id + " must lie in [0,1]"});
        if (b.onset_round < 1)
            out.push_back({"range", "malicious onset_round for " + id + " must be >= 1"});
    }
    return out;
}

std::optional<Violation> PopulationRegistry::admit(const std::string& id) {
    if (evicted_.count(id)) return Violation{"evicted-id", id};
    if (!active_.insert(id).second) return Violation{"duplicate-id", id};
    return std::nullopt;
}

void PopulationRegistry::evict(const std::string& id) {
    active_.erase(id);
    evicted_.insert(id);
}

} // namespace trustfed
