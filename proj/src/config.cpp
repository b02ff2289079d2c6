#include "trustfed/config.hpp"

#include <filesystem>
#include <set>

#include <json.hpp>

#include "trustfed/io.hpp"

namespace trustfed {

using nlohmann::json;

namespace {

void require_known_keys(const json& j, const std::set<std::string>& known,
                        const std::string& where) {
    for (const auto& [key, value] : j.items())
        if (!known.count(key))
            throw Error("invalid-config", "unknown field '" + key + "' in " + where);
}

template <typename T>
void read_into(const json& j, const char* key, T& target) {
    if (!j.contains(key)) return;
    try {
        target = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw Error("invalid-config", std::string("bad value for '") + key + "'");
    }
}

} // namespace

ScenarioConfig scenario_config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error("invalid-config", std::string("json parse: ") + e.what());
    }
    if (!j.is_object()) throw Error("invalid-config", "top level must be an object");

    require_known_keys(
        j,
        {"name", "population", "thresholds", "trust", "weights", "ga", "fl",
         "straggler_drop_prob", "malicious", "initial_trust", "initial_trust_fixed",
         "selection_policy", "random_select_prob", "join_fraction", "join_round_min",
         "join_round_max", "workers", "seed", "dismissal_fraction", "min_selected"},
        "config");

    ScenarioConfig c;
    read_into(j, "name", c.name);
    if (!j.contains("seed")) throw Error("invalid-config", "missing required field 'seed'");
    read_into(j, "seed", c.seed);
    read_into(j, "dismissal_fraction", c.dismissal_fraction);
    read_into(j, "straggler_drop_prob", c.straggler_drop_prob);
    read_into(j, "random_select_prob", c.random_select_prob);
    read_into(j, "join_fraction", c.join_fraction);
    read_into(j, "join_round_min", c.join_round_min);
    read_into(j, "join_round_max", c.join_round_max);
    read_into(j, "workers", c.workers);
    read_into(j, "min_selected", c.min_selected);
    read_into(j, "initial_trust_fixed", c.initial_trust_fixed);

    if (j.contains("initial_trust")) {
        const std::string mode = j.at("initial_trust").get<std::string>();
        if (mode == "sdr_bootstrap")
            c.initial_trust = ScenarioConfig::InitialTrustMode::sdr_bootstrap;
        else if (mode == "fixed")
            c.initial_trust = ScenarioConfig::InitialTrustMode::fixed;
        else if (mode == "zero")
            c.initial_trust = ScenarioConfig::InitialTrustMode::zero;
        else
            throw Error("invalid-config", "initial_trust must be sdr_bootstrap|fixed|zero");
    }
    if (j.contains("selection_policy")) {
        const std::string policy = j.at("selection_policy").get<std::string>();
        if (policy == "ga")
            c.selection_policy = ScenarioConfig::SelectionPolicy::ga;
        else if (policy == "random")
            c.selection_policy = ScenarioConfig::SelectionPolicy::random;
        else
            throw Error("invalid-config", "selection_policy must be ga|random");
    }

    if (j.contains("population")) {
        const json& p = j.at("population");
        require_known_keys(p,
                           {"clients", "areas", "locations", "min_records", "max_records",
                            "skew", "mover_fraction", "seed"},
                           "population");
        read_into(p, "clients", c.population.clients);
        read_into(p, "areas", c.population.areas);
        read_into(p, "locations", c.population.locations);
        read_into(p, "min_records", c.population.min_records);
        read_into(p, "max_records", c.population.max_records);
        read_into(p, "skew", c.population.skew);
        read_into(p, "mover_fraction", c.population.mover_fraction);
        read_into(p, "seed", c.population.seed);
    }

    if (j.contains("thresholds")) {
        const json& t = j.at("thresholds");
        require_known_keys(t,
                           {"st_min_availability", "max_trust_cutoff", "max_high_trust_selected",
                            "max_movement_cutoff", "max_high_movement_selected"},
                           "thresholds");
        read_into(t, "st_min_availability", c.st_min_availability);
        read_into(t, "max_trust_cutoff", c.max_trust_cutoff);
        read_into(t, "max_high_trust_selected", c.max_high_trust_selected);
        read_into(t, "max_movement_cutoff", c.max_movement_cutoff);
        read_into(t, "max_high_movement_selected", c.max_high_movement_selected);
    }

    if (j.contains("trust")) {
        const json& t = j.at("trust");
        require_known_keys(t,
                           {"alphas", "epsilon", "beta", "warmup_deployed_rounds",
                            "history_window", "min_z_history", "probe_lag",
                            "probe_trust_threshold", "min_trusted_per_area"},
                           "trust");
        if (t.contains("alphas")) {
            const auto a = t.at("alphas").get<std::vector<double>>();
            if (a.size() != 4) throw Error("invalid-config", "alphas must have 4 entries");
            std::copy(a.begin(), a.end(), c.alphas.begin());
        }
        read_into(t, "epsilon", c.epsilon);
        read_into(t, "beta", c.trust_beta);
        read_into(t, "warmup_deployed_rounds", c.warmup_deployed_rounds);
        read_into(t, "history_window", c.history_window);
        read_into(t, "min_z_history", c.min_z_history);
        read_into(t, "probe_lag", c.probe_lag);
        read_into(t, "probe_trust_threshold", c.probe_trust_threshold);
        read_into(t, "min_trusted_per_area", c.min_trusted_per_area);
    }

    if (j.contains("weights")) {
        const auto w = j.at("weights").get<std::vector<double>>();
        if (w.size() != 5) throw Error("invalid-config", "weights must have 5 entries");
        std::array<double, 5> arr;
        std::copy(w.begin(), w.end(), arr.begin());
        try {
            c.weights = ObjectiveWeights::make(arr);
        } catch (const Error& e) {
            throw Error("invalid-config", e.what());
        }
    }

    if (j.contains("ga")) {
        const json& g = j.at("ga");
        require_known_keys(
            g, {"population_size", "generations", "crossover_prob", "patience", "survivor_policy"},
            "ga");
        read_into(g, "population_size", c.ga.population_size);
        read_into(g, "generations", c.ga.generations);
        read_into(g, "crossover_prob", c.ga.crossover_prob);
        read_into(g, "patience", c.ga.patience);
        read_into(g, "survivor_policy", c.ga.survivor_policy);
    }

    if (j.contains("fl")) {
        const json& f = j.at("fl");
        require_known_keys(
            f, {"rounds", "learning_rate", "local_epochs", "batch_size", "hidden_units"}, "fl");
        read_into(f, "rounds", c.fl.rounds);
        read_into(f, "learning_rate", c.fl.learning_rate);
        read_into(f, "local_epochs", c.fl.local_epochs);
        read_into(f, "batch_size", c.fl.batch_size);
        read_into(f, "hidden_units", c.fl.hidden_units);
    }

    if (j.contains("malicious")) {
        const json& m = j.at("malicious");
        if (!m.is_object()) throw Error("invalid-config", "malicious must map ids to behaviors");
        for (const auto& [id, spec] : m.items()) {
            require_known_keys(spec, {"behavior", "intensity", "onset_round"},
                               "malicious." + id);
            MaliciousBehavior b;
            if (!spec.contains("behavior"))
                throw Error("invalid-config", "malicious." + id + " needs 'behavior'");
            try {
                b.tag = behavior_tag_from_string(spec.at("behavior").get<std::string>());
            } catch (const Error& e) {
                throw Error("invalid-config", e.what());
            }
            read_into(spec, "intensity", b.intensity);
            read_into(spec, "onset_round", b.onset_round);
            c.malicious[id] = b;
        }
    }

    const auto violations = validate_scenario(c);
    if (!violations.empty())
        throw Error("invalid-config", violations.front().kind + ": " + violations.front().detail);
    return c;
}

ScenarioConfig load_scenario_config(const std::string& path) {
    return scenario_config_from_json(read_file(path));
}

std::string scenario_config_to_json(const ScenarioConfig& c) {
    json j;
    j["name"] = c.name;
    j["seed"] = c.seed;
    j["dismissal_fraction"] = c.dismissal_fraction;
    j["straggler_drop_prob"] = c.straggler_drop_prob;
    j["random_select_prob"] = c.random_select_prob;
    j["join_fraction"] = c.join_fraction;
    j["join_round_min"] = c.join_round_min;
    j["join_round_max"] = c.join_round_max;
    j["workers"] = c.workers;
    j["min_selected"] = c.min_selected;
    j["initial_trust_fixed"] = c.initial_trust_fixed;
    j["initial_trust"] = c.initial_trust == ScenarioConfig::InitialTrustMode::zero ? "zero"
                         : c.initial_trust == ScenarioConfig::InitialTrustMode::fixed
                             ? "fixed"
                             : "sdr_bootstrap";
    j["selection_policy"] =
        c.selection_policy == ScenarioConfig::SelectionPolicy::random ? "random" : "ga";
    j["population"] = {{"clients", c.population.clients},
                       {"areas", c.population.areas},
                       {"locations", c.population.locations},
                       {"min_records", c.population.min_records},
                       {"max_records", c.population.max_records},
                       {"skew", c.population.skew},
                       {"mover_fraction", c.population.mover_fraction},
                       {"seed", c.population.seed}};
    j["thresholds"] = {{"st_min_availability", c.st_min_availability},
                       {"max_trust_cutoff", c.max_trust_cutoff},
                       {"max_high_trust_selected", c.max_high_trust_selected},
                       {"max_movement_cutoff", c.max_movement_cutoff},
                       {"max_high_movement_selected", c.max_high_movement_selected}};
    j["trust"] = {{"alphas", c.alphas},
                  {"epsilon", c.epsilon},
                  {"beta", c.trust_beta},
                  {"warmup_deployed_rounds", c.warmup_deployed_rounds},
                  {"history_window", c.history_window},
                  {"min_z_history", c.min_z_history},
                  {"probe_lag", c.probe_lag},
                  {"probe_trust_threshold", c.probe_trust_threshold},
                  {"min_trusted_per_area", c.min_trusted_per_area}};
    j["weights"] = c.weights.w;
    j["ga"] = {{"population_size", c.ga.population_size},
               {"generations", c.ga.generations},
               {"crossover_prob", c.ga.crossover_prob},
               {"patience", c.ga.patience},
               {"survivor_policy", c.ga.survivor_policy}};
    j["fl"] = {{"rounds", c.fl.rounds},
               {"learning_rate", c.fl.learning_rate},
               {"local_epochs", c.fl.local_epochs},
               {"batch_size", c.fl.batch_size},
               {"hidden_units", c.fl.hidden_units}};
    json m = json::object();
    for (const auto& [id, b] : c.malicious)
        m[id] = {{"behavior", to_string(b.tag)},
                 {"intensity", b.intensity},
                 {"onset_round", b.onset_round}};
    j["malicious"] = std::move(m);
    return j.dump(2) + "\n";
}

DeploymentContext load_instance(const std::string& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw Error("invalid-config", std::string("json parse: ") + e.what());
    }
    require_known_keys(j,
                       {"devices_csv", "utilities_csv", "weights", "thresholds",
                        "requested_areas", "trust", "clusters"},
                       "instance");
    if (!j.contains("devices_csv") || !j.contains("utilities_csv"))
        throw Error("invalid-config", "instance needs devices_csv and utilities_csv");

    const std::filesystem::path base = std::filesystem::path(path).parent_path();
    auto resolve = [&](const std::string& p) {
        const std::filesystem::path fp(p);
        return fp.is_absolute() ? fp.string() : (base / fp).string();
    };

    DeploymentContext ctx;
    ctx.devices = population_from_csv(read_file(resolve(j.at("devices_csv").get<std::string>())));
    const auto utils =
        utilities_from_csv(read_file(resolve(j.at("utilities_csv").get<std::string>())));
    std::map<std::string, LearningUtility> util_by_id;
    for (const auto& [id, u] : utils) util_by_id[id] = u;
    for (const auto& d : ctx.devices) {
        auto it = util_by_id.find(d.id);
        if (it == util_by_id.end())
            throw Error("invalid-config", "no utility row for device " + d.id);
        ctx.utilities.push_back(it->second);
    }

    ctx.trust.assign(ctx.devices.size(), 0.5);
    ctx.accuracy_clusters.assign(ctx.devices.size(), 0);
    if (j.contains("trust"))
        for (std::size_t i = 0; i < ctx.devices.size(); ++i)
            if (j.at("trust").contains(ctx.devices[i].id))
                ctx.trust[i] = j.at("trust").at(ctx.devices[i].id).get<double>();
    if (j.contains("clusters"))
        for (std::size_t i = 0; i < ctx.devices.size(); ++i)
            if (j.at("clusters").contains(ctx.devices[i].id))
                ctx.accuracy_clusters[i] = j.at("clusters").at(ctx.devices[i].id).get<int>();
    if (j.contains("requested_areas"))
        for (int a : j.at("requested_areas").get<std::vector<int>>())
            ctx.requested_areas.insert(a);
    if (j.contains("weights")) {
        const auto w = j.at("weights").get<std::vector<double>>();
        if (w.size() != 5) throw Error("invalid-config", "weights must have 5 entries");
        std::array<double, 5> arr;
        std::copy(w.begin(), w.end(), arr.begin());
        ctx.weights = ObjectiveWeights::make(arr);
    }
    if (j.contains("thresholds")) {
        const json& t = j.at("thresholds");
        require_known_keys(t,
                           {"st_min_availability", "max_trust_cutoff", "max_high_trust_selected",
                            "max_movement_cutoff", "max_high_movement_selected", "min_selected"},
                           "instance thresholds");
        read_into(t, "st_min_availability", ctx.thresholds.st_min_availability);
        read_into(t, "max_trust_cutoff", ctx.thresholds.max_trust_cutoff);
        read_into(t, "max_high_trust_selected", ctx.thresholds.max_high_trust_selected);
        read_into(t, "max_movement_cutoff", ctx.thresholds.max_movement_cutoff);
        read_into(t, "max_high_movement_selected", ctx.thresholds.max_high_movement_selected);
        read_into(t, "min_selected", ctx.thresholds.min_selected);
    }
    return ctx;
}

std::string instance_to_json(const DeploymentContext& ctx, const std::string& devices_csv,
                             const std::string& utilities_csv) {
    json j;
    j["devices_csv"] = devices_csv;
    j["utilities_csv"] = utilities_csv;
    j["weights"] = ctx.weights.w;
    j["thresholds"] = {{"st_min_availability", ctx.thresholds.st_min_availability},
                       {"max_trust_cutoff", ctx.thresholds.max_trust_cutoff},
                       {"max_high_trust_selected", ctx.thresholds.max_high_trust_selected},
                       {"max_movement_cutoff", ctx.thresholds.max_movement_cutoff},
                       {"max_high_movement_selected", ctx.thresholds.max_high_movement_selected},
                       {"min_selected", ctx.thresholds.min_selected}};
    j["requested_areas"] = std::vector<int>(ctx.requested_areas.begin(), ctx.requested_areas.end());
    json trust = json::object(), clusters = json::object();
    for (std::size_t i = 0; i < ctx.devices.size(); ++i) {
        trust[ctx.devices[i].id] = ctx.trust[i];
        clusters[ctx.devices[i].id] = ctx.accuracy_clusters[i];
    }
    j["trust"] = std::move(trust);
    j["clusters"] = std::move(clusters);
    return j.dump(2) + "\n";
}

} // namespace trustfed
