#include "trustfed/flsim.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <thread>

#include "trustfed/optimizer.hpp"

namespace trustfed {

bool should_dismiss_round(long received, long selected, double fraction) {
    if (selected <= 0) return false;
    return static_cast<double>(received) < fraction * static_cast<double>(selected);
}

void flip_records(std::vector<Record>& records, double intensity, int label_count,
                  SeedStream& rng) {
    if (intensity <= 0.0 || label_count < 2) return;
    const std::size_t n = records.size();
    const auto flips = static_cast<std::size_t>(std::floor(intensity * n));
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    for (std::size_t i = n; i > 1; --i)
        std::swap(order[i - 1], order[rng.uniform_int(i)]);
    for (std::size_t i = 0; i < flips; ++i) {
        Record& r = records[order[i]];
        r.label = (r.label + 1) % label_count;
    }
}

ClientDataset flip_labels(ClientDataset dataset, double intensity, int label_count,
                          SeedStream& rng) {
    flip_records(dataset.records, intensity, label_count, rng);
    return dataset;
}

ClientDataset hide_data(ClientDataset dataset, double intensity) {
    if (intensity <= 0.0) return dataset;
    std::map<int, long> freq;
    for (const auto& r : dataset.records) ++freq[r.label];
    const auto used = static_cast<long>(freq.size());
    const long keep = std::max<long>(
        1, static_cast<long>(std::ceil((1.0 - intensity) * static_cast<double>(used))));
    std::vector<std::pair<long, int>> by_freq; // (-count, label) for stable ordering
    for (const auto& [label, count] : freq) by_freq.emplace_back(-count, label);
    std::sort(by_freq.begin(), by_freq.end());
    std::set<int> kept;
    for (long i = 0; i < keep && i < static_cast<long>(by_freq.size()); ++i)
        kept.insert(by_freq[i].second);
    ClientDataset out;
    out.owner = dataset.owner;
    for (auto& r : dataset.records)
        if (kept.count(r.label)) out.records.push_back(std::move(r));
    return out;
}

ContextMap falsify_context(ContextMap context, double intensity, SeedStream& rng) {
    if (intensity <= 0.0 || context.empty()) return context;
    const std::size_t n = context.size();
    const auto corrupt = static_cast<std::size_t>(std::ceil(intensity * n));
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    for (std::size_t i = n; i > 1; --i)
        std::swap(order[i - 1], order[rng.uniform_int(i)]);
    std::set<std::size_t> chosen(order.begin(), order.begin() + corrupt);
    std::size_t idx = 0;
    for (auto& [key, value] : context) {
        if (chosen.count(idx)) {
            if (std::holds_alternative<double>(value))
                value = std::get<double>(value) + 1.0 + static_cast<double>(rng.uniform_int(7));
            else
                value = std::get<std::string>(value) + "?";
        }
        ++idx;
    }
    return context;
}

LocalOutcome apply_malicious_behavior(const MaliciousBehavior& behavior, LocalOutcome honest,
                                      int round, SeedStream& rng, int label_count) {
    if (round < behavior.onset_round || behavior.intensity <= 0.0) return honest;
    switch (behavior.tag) {
        case MaliciousBehavior::Tag::label_flip:
            honest.train_view =
                flip_labels(std::move(honest.train_view), behavior.intensity, label_count, rng);
            break;
        case MaliciousBehavior::Tag::data_hiding:
            honest.train_view = hide_data(std::move(honest.train_view), behavior.intensity);
            break;
        case MaliciousBehavior::Tag::random_weights:
            for (double& w : honest.params.weights) w = rng.uniform(-1.0, 1.0);
            break;
        case MaliciousBehavior::Tag::context_falsify:
            honest.reported_context =
                falsify_context(std::move(honest.reported_context), behavior.intensity, rng);
            break;
        case MaliciousBehavior::Tag::timing_manipulation: {
            const double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
            const double factor = std::max(0.0, 1.0 + sign * behavior.intensity);
            honest.reported_finish_time *= factor;
            if (kBehaviorFinishTimeIndex < static_cast<int>(honest.behavior_features.values.size()))
                honest.behavior_features.values[kBehaviorFinishTimeIndex] *= factor;
            break;
        }
    }
    return honest;
}

namespace {

bool behavior_pre_training(MaliciousBehavior::Tag tag) {
    return tag == MaliciousBehavior::Tag::label_flip ||
           tag == MaliciousBehavior::Tag::data_hiding;
}

bool behavior_post_training(MaliciousBehavior::Tag tag) {
    return tag == MaliciousBehavior::Tag::random_weights ||
           tag == MaliciousBehavior::Tag::timing_manipulation;
}

FeatureRow behavior_feature_row(const SimClient& client) {
    const DeviceProfile& p = client.profile;
    const double phone = p.device_type == "phone" ? 1.0 : 0.0;
    const double tablet = p.device_type == "tablet" ? 1.0 : 0.0;
    const double laptop = p.device_type == "laptop" ? 1.0 : 0.0;
    // layout: [type onehot x3, avg_movements, avg_finish_time, cpu, memory]
    return {p.id, {phone, tablet, laptop, p.avg_movements, p.avg_finish_time, p.cpu,
                   p.memory / (1024.0 * 1024.0 * 1024.0)}};
}

} // namespace

OrchestratorOutput orchestrator_round(std::vector<SimClient>& clients,
                                      const std::vector<RoundObservation>& observations,
                                      int round, const ScenarioConfig& config) {
    OrchestratorOutput out;

    std::vector<FeatureRow> rows;
    std::map<std::string, SimClient*> by_id;
    for (auto& c : clients) {
        by_id[c.profile.id] = &c;
        if (c.active) rows.push_back(behavior_feature_row(c));
    }
    std::map<std::string, int> labels;
    std::map<int, std::set<std::string>> members;
    if (!rows.empty()) {
        const int k = std::max(1, static_cast<int>(std::ceil(std::sqrt(
                                     static_cast<double>(rows.size())))));
        labels = agglomerative_cluster(standardize(rows), std::min<int>(k, rows.size()));
        for (const auto& [id, label] : labels) members[label].insert(id);
    }

    // every active client's neighbor expectation tracks the current clusters,
    // so deployed-round comparisons are against fresh groups, not stale ones
    std::set<std::string> deployed_ids;
    for (const auto& obs : observations) deployed_ids.insert(obs.client_id);
    for (auto& c : clients) {
        if (!c.active || deployed_ids.count(c.profile.id)) continue;
        auto it = labels.find(c.profile.id);
        if (it == labels.end()) continue;
        std::set<std::string> peers = members[it->second];
        peers.erase(c.profile.id);
        c.record.previous_neighbors = std::move(peers);
    }

    for (const auto& base_obs : observations) {
        SimClient* client = by_id.at(base_obs.client_id);
        RoundObservation obs = base_obs;
        obs.round = round;
        auto it = labels.find(obs.client_id);
        if (it != labels.end()) {
            obs.current_cluster_members = members[it->second];
            obs.current_cluster_members.erase(obs.client_id);
        }
        for (const auto& row : rows)
            if (row.id == obs.client_id) obs.behavior_features = row;
        const TrustUpdate update = update_trust_record(client->record, obs, config);
        client->record = update.record;
        out.metrics[obs.client_id] = update.metrics;
    }

    for (int area = 0; area < config.population.areas; ++area) {
        int trusted = 0;
        for (const auto& c : clients)
            if (c.active && c.profile.area == area &&
                c.record.trust >= config.max_trust_cutoff)
                ++trusted;
        if (trusted < config.min_trusted_per_area) out.requested_areas.insert(area);
    }
    for (const auto& c : clients)
        if (c.active && c.record.trust < config.probe_trust_threshold)
            out.probe_assignments.insert(c.profile.id);
    return out;
}

namespace {

// Raises the deployment to `target` devices. Non-penalized candidates
// (trust >= 0.5) join least-deployed first, spreading participation across
// the population; penalized ones are used only as a last resort, best trust
// first. Caps and per-device feasibility are respected.
void pad_selection(SelectionVector& selection, const DeploymentContext& ctx, long target,
                   SeedStream rng) {
    auto deployed_of = [&](std::size_t j) {
        return j < ctx.deployed_counts.size() ? ctx.deployed_counts[j] : 0L;
    };
    while (selection.count() < target) {
        long high_trust_count = 0, high_move_count = 0;
        for (std::size_t j = 0; j < selection.size(); ++j) {
            if (!selection.selected(j)) continue;
            if (ctx.trust[j] >= ctx.thresholds.max_trust_cutoff) ++high_trust_count;
            if (ctx.devices[j].avg_movements >= ctx.thresholds.max_movement_cutoff)
                ++high_move_count;
        }
        auto acceptable = [&](std::size_t j) {
            if (selection.selected(j) || !device_feasible(ctx, j)) return false;
            if (ctx.trust[j] >= ctx.thresholds.max_trust_cutoff &&
                high_trust_count >= ctx.thresholds.max_high_trust_selected)
                return false;
            if (ctx.devices[j].avg_movements >= ctx.thresholds.max_movement_cutoff &&
                high_move_count >= ctx.thresholds.max_high_movement_selected)
                return false;
            return true;
        };
        int best = -1;
        bool best_fresh = false;
        long best_deployed = 0;
        double best_trust = -1.0;
        int ties = 0;
        for (std::size_t j = 0; j < selection.size(); ++j) {
            if (!acceptable(j)) continue;
            const bool fresh = ctx.trust[j] >= 0.5;
            const long dep = deployed_of(j);
            const double tr = ctx.trust[j];
            bool better;
            if (best < 0) {
                better = true;
            } else if (fresh != best_fresh) {
                better = fresh;
            } else if (fresh) {
                better = dep < best_deployed;
            } else {
                better = tr > best_trust;
            }
            const bool tie = best >= 0 && fresh == best_fresh &&
                             (fresh ? dep == best_deployed : tr == best_trust);
            if (better) {
                best = static_cast<int>(j);
                best_fresh = fresh;
                best_deployed = dep;
                best_trust = tr;
                ties = 1;
            } else if (tie) {
                ++ties;
                if (rng.uniform_int(ties) == 0) best = static_cast<int>(j);
            }
        }
        if (best < 0) break;
        selection.bits[best] = 1;
    }
}

struct Submission {
    std::size_t ctx_index = 0;
    std::string id;
    bool submitted = false;
    bool probe_used = false;
    ModelParams params;
    int sample_count = 0;
    double local_accuracy = 0.0;
    double reported_finish_time = 0.0;
    ContextMap reported_context;
    ContextMap observed_context;
};

ContextMap make_context(const SimClient& client, double finish_time) {
    return {
        {"record_count_bucket", static_cast<double>(client.data.records.size() / 100)},
        {"area", static_cast<double>(client.profile.area)},
        {"finish_time_bucket", std::floor(finish_time / 30.0)},
        {"last_round_participated", static_cast<double>(client.last_round_participated)},
    };
}

Submission simulate_client_round(const SimClient& client, std::size_t ctx_index, int round,
                                 const ModelParams& base_params, bool probe_used,
                                 const ScenarioConfig& config) {
    Submission sub;
    sub.ctx_index = ctx_index;
    sub.id = client.profile.id;
    sub.probe_used = probe_used;

    const std::uint64_t id_hash = SeedStream::hash_part(client.profile.id);
    SeedStream straggle_rng = SeedStream::derive(
        {config.seed, SeedStream::hash_part("straggle"), static_cast<std::uint64_t>(round), id_hash});
    if (straggle_rng.bernoulli(config.straggler_drop_prob)) return sub; // dropped out

    const bool misbehaving =
        client.behavior && round >= client.behavior->onset_round;
    SeedStream malice_rng = SeedStream::derive(
        {config.seed, SeedStream::hash_part("malice"), static_cast<std::uint64_t>(round), id_hash});

    LocalOutcome outcome;
    outcome.train_view = client.data;
    TrainSliceMutation mutate_train;
    if (misbehaving && client.behavior->tag == MaliciousBehavior::Tag::label_flip) {
        // the flip poisons what the container trains on; the held-out slice
        // keeps true labels, so the reported accuracy reflects the damage
        const double intensity = client.behavior->intensity;
        const int label_count = config.population.locations;
        auto flip_rng = std::make_shared<SeedStream>(malice_rng);
        mutate_train = [intensity, label_count, flip_rng](std::vector<Record>& records) {
            flip_records(records, intensity, label_count, *flip_rng);
        };
    } else if (misbehaving && behavior_pre_training(client.behavior->tag)) {
        outcome = apply_malicious_behavior(*client.behavior, std::move(outcome), round,
                                           malice_rng, config.population.locations);
    }

    if (outcome.train_view.records.empty()) return sub; // hid everything away

    const LocalTrainResult trained =
        local_train(outcome.train_view, base_params, config.fl,
                    SeedStream::derive({config.seed, SeedStream::hash_part("sgd"),
                                        static_cast<std::uint64_t>(round), id_hash})
                        .next_u64(),
                    mutate_train);
    outcome.params = trained.params;
    outcome.local_accuracy = trained.local_accuracy;
    outcome.sample_count = trained.sample_count;

    SeedStream finish_rng = SeedStream::derive(
        {config.seed, SeedStream::hash_part("finish"), static_cast<std::uint64_t>(round), id_hash});
    outcome.reported_finish_time = client.base_finish_time * finish_rng.uniform(0.9, 1.1);
    outcome.behavior_features = behavior_feature_row(client);

    if (misbehaving && behavior_post_training(client.behavior->tag))
        outcome = apply_malicious_behavior(*client.behavior, std::move(outcome), round,
                                           malice_rng, config.population.locations);

    // the orchestrator records its own view; with finish-time manipulation the
    // slowdown or rush is physical, so both sides see the same number
    outcome.reported_context = make_context(client, outcome.reported_finish_time);
    ContextMap observed = outcome.reported_context;

    if (misbehaving && client.behavior->tag == MaliciousBehavior::Tag::context_falsify)
        outcome = apply_malicious_behavior(*client.behavior, std::move(outcome), round,
                                           malice_rng, config.population.locations);

    sub.submitted = true;
    sub.params = std::move(outcome.params);
    sub.sample_count = outcome.sample_count;
    sub.local_accuracy = outcome.local_accuracy;
    sub.reported_finish_time = outcome.reported_finish_time;
    sub.reported_context = std::move(outcome.reported_context);
    sub.observed_context = std::move(observed);
    return sub;
}

} // namespace

ScenarioResult run_scenario(const ScenarioConfig& config) {
    {
        const auto violations = validate_scenario(config);
        if (!violations.empty())
            throw Error("invalid-config", violations.front().kind + ": " + violations.front().detail);
    }

    PopulationSpec spec = config.population;
    if (spec.seed == 0) spec.seed = config.seed;
    GeneratedPopulation pop = generate_population(spec);

    std::vector<SimClient> clients(pop.devices.size());
    std::vector<Record> test_pool;
    for (std::size_t i = 0; i < pop.devices.size(); ++i) {
        SimClient& c = clients[i];
        c.profile = pop.devices[i];
        c.utility = pop.utilities[i];
        c.data = std::move(pop.datasets[i]);
        c.base_availability = c.profile.availability;
        c.base_movements = c.profile.avg_movements;
        c.base_finish_time = c.profile.avg_finish_time;
        auto mal = config.malicious.find(c.profile.id);
        if (mal != config.malicious.end()) c.behavior = mal->second;

        // carve the global evaluation slice out of the local data
        SeedStream pool_rng = SeedStream::derive(
            {config.seed, SeedStream::hash_part("pool"), SeedStream::hash_part(c.profile.id)});
        auto& records = c.data.records;
        for (std::size_t j = records.size(); j > 1; --j)
            std::swap(records[j - 1], records[pool_rng.uniform_int(j)]);
        const std::size_t take =
            std::min<std::size_t>(60, static_cast<std::size_t>(std::ceil(records.size() * 0.15)));
        for (std::size_t j = 0; j < take && records.size() > 1; ++j) {
            test_pool.push_back(std::move(records.back()));
            records.pop_back();
        }
    }

    // staggered joining: a seeded subset becomes active mid-run
    if (config.join_fraction > 0.0 && config.join_round_max >= config.join_round_min &&
        config.join_round_min >= 1) {
        SeedStream join_rng = SeedStream::derive({config.seed, SeedStream::hash_part("join")});
        std::vector<std::size_t> order(clients.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[join_rng.uniform_int(i)]);
        const auto late =
            static_cast<std::size_t>(std::floor(config.join_fraction * clients.size()));
        for (std::size_t i = 0; i < late && i < order.size(); ++i) {
            const int span = config.join_round_max - config.join_round_min + 1;
            clients[order[i]].profile.joined_round =
                config.join_round_min + static_cast<int>(join_rng.uniform_int(span));
        }
    }

    const ModelShape shape{kRecordFeatureDim, config.population.locations,
                           config.fl.hidden_units};
    ModelParams global = zero_params(shape);
    std::map<int, ModelParams> params_history;
    std::set<int> requested_areas;
    std::set<std::string> probe_assignments;
    std::vector<TrustLogEntry> logs;

    ScenarioResult result;
    const std::map<std::string, MaliciousBehavior>& roster = config.malicious;

    for (int round = 1; round <= config.fl.rounds; ++round) {
        // 1. newcomers activate; their first trust value comes from bootstrap
        for (auto& c : clients) {
            if (c.active || round <= c.profile.joined_round) continue;
            c.active = true;
            double initial = 0.5;
            switch (config.initial_trust) {
                case ScenarioConfig::InitialTrustMode::zero:
                    initial = 0.0;
                    break;
                case ScenarioConfig::InitialTrustMode::fixed:
                    initial = config.initial_trust_fixed;
                    break;
                case ScenarioConfig::InitialTrustMode::sdr_bootstrap: {
                    if (!logs.empty()) {
                        const BootstrapDataset ds = collect_bootstrap_dataset(logs);
                        const RegressionTree tree = fit_sdr_tree(ds.examples);
                        BootstrapFeatures f;
                        f.area = c.profile.area;
                        f.device_type = c.profile.device_type;
                        f.cpu = c.profile.cpu;
                        f.memory = c.profile.memory;
                        f.movement_bin = ds.bin_movements(c.profile.avg_movements);
                        initial = predict_initial_trust(tree, f);
                    }
                    break;
                }
            }
            c.record.trust = clamp01(initial);
        }

        // 2. mobility: movement observations, area changes, availability draws
        for (auto& c : clients) {
            if (!c.active) continue;
            SeedStream s = SeedStream::derive({config.seed, SeedStream::hash_part("mobility"),
                                               static_cast<std::uint64_t>(round),
                                               SeedStream::hash_part(c.profile.id)});
            const double observed_moves = c.base_movements * (0.7 + 0.6 * s.uniform());
            c.profile.avg_movements = 0.7 * c.profile.avg_movements + 0.3 * observed_moves;
            const double p_move = std::clamp(c.base_movements / 8.0, 0.02, 0.75);
            if (s.uniform() < p_move)
                c.profile.area = static_cast<int>(s.uniform_int(config.population.areas));
            c.profile.availability = c.base_availability * (0.25 + 1.5 * s.uniform());
        }

        // 3. accuracy clusters feed objective F3
        std::vector<std::size_t> active_index;
        for (std::size_t i = 0; i < clients.size(); ++i)
            if (clients[i].active) active_index.push_back(i);

        RoundTrace trace;
        trace.round = round;

        if (active_index.empty()) {
            trace.dismissed = true;
            trace.dismiss_cause = "no-active-clients";
            trace.global_accuracy = evaluate_accuracy(global, test_pool);
            result.traces.push_back(std::move(trace));
            continue;
        }

        std::vector<FeatureRow> acc_rows;
        for (std::size_t i : active_index)
            acc_rows.push_back({clients[i].profile.id, {clients[i].last_local_accuracy}});
        const int k_acc = std::max(
            1, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(acc_rows.size())))));
        const auto acc_labels = agglomerative_cluster(
            standardize(acc_rows), std::min<int>(k_acc, acc_rows.size()));

        // 4. deployment context over active clients
        DeploymentContext ctx;
        for (std::size_t i : active_index) {
            ctx.devices.push_back(clients[i].profile);
            ctx.utilities.push_back(clients[i].utility);
            ctx.trust.push_back(clients[i].record.trust);
            ctx.accuracy_clusters.push_back(acc_labels.at(clients[i].profile.id));
            ctx.deployed_counts.push_back(clients[i].record.deployed_count);
        }
        ctx.requested_areas = requested_areas;
        ctx.weights = config.weights;
        // the per-round deployment floor is enforced by engine-side padding
        // after optimization, so the GA cannot optimize over the rotation
        ctx.thresholds = {config.st_min_availability, config.max_trust_cutoff,
                          config.max_high_trust_selected, config.max_movement_cutoff,
                          config.max_high_movement_selected, 0};

        // 5. selection
        SelectionVector selection = SelectionVector::zeros(ctx.devices.size());
        bool selection_failed = false;
        if (config.selection_policy == ScenarioConfig::SelectionPolicy::random) {
            SeedStream s = SeedStream::derive(
                {config.seed, SeedStream::hash_part("random-select"),
                 static_cast<std::uint64_t>(round)});
            for (std::size_t j = 0; j < ctx.devices.size(); ++j) {
                const bool pick = s.bernoulli(config.random_select_prob);
                if (device_feasible(ctx, j) && pick) selection.bits[j] = 1;
            }
        } else {
            try {
                const GaResult ga = ga_optimize(
                    ctx, config.ga,
                    SeedStream::derive({config.seed, SeedStream::hash_part("ga"),
                                        static_cast<std::uint64_t>(round)})
                        .next_u64());
                selection = ga.chosen;
            } catch (const Error& e) {
                if (e.code() != "no-feasible-solution") throw;
                selection_failed = true;
            }
        }

        if (selection_failed) {
            trace.dismissed = true;
            trace.dismiss_cause = "no-feasible-solution";
        } else if (config.min_selected > 0 &&
                   config.selection_policy == ScenarioConfig::SelectionPolicy::ga) {
            pad_selection(selection, ctx, config.min_selected,
                          SeedStream::derive({config.seed, SeedStream::hash_part("pad"),
                                              static_cast<std::uint64_t>(round)}));
        }

        std::vector<std::size_t> selected; // positions in active_index
        for (std::size_t j = 0; j < selection.size(); ++j)
            if (selection.selected(j)) selected.push_back(j);
        for (std::size_t j : selected)
            trace.selected_ids.push_back(ctx.devices[j].id);

        // 6. local training fan-out; per-client streams keep this
        //    schedule-independent
        params_history[round] = global;
        while (!params_history.empty() &&
               params_history.begin()->first < round - config.probe_lag)
            params_history.erase(params_history.begin());

        std::vector<Submission> submissions(selected.size());
        auto run_one = [&](std::size_t slot) {
            const std::size_t ci = active_index[selected[slot]];
            const SimClient& client = clients[ci];
            const int stale_round = round - config.probe_lag;
            const bool probe_used = probe_assignments.count(client.profile.id) &&
                                    stale_round >= 1 && params_history.count(stale_round);
            const ModelParams& base =
                probe_used ? params_history.at(stale_round) : global;
            submissions[slot] =
                simulate_client_round(client, selected[slot], round, base, probe_used, config);
        };
        int workers = config.workers > 0
                          ? config.workers
                          : static_cast<int>(std::thread::hardware_concurrency());
        workers = std::max(1, std::min<int>(workers, static_cast<int>(selected.size())));
        if (workers <= 1 || selected.size() <= 1) {
            for (std::size_t slot = 0; slot < selected.size(); ++slot) run_one(slot);
        } else {
            std::vector<std::thread> threads;
            for (int w = 0; w < workers; ++w) {
                threads.emplace_back([&, w] {
                    for (std::size_t slot = w; slot < selected.size();
                         slot += static_cast<std::size_t>(workers))
                        run_one(slot);
                });
            }
            for (auto& t : threads) t.join();
        }

        // 7. aggregate or dismiss
        long received = 0;
        std::vector<std::pair<ModelParams, long>> aggregable;
        for (const auto& sub : submissions) {
            if (!sub.submitted) continue;
            ++received;
            if (!sub.probe_used)
                aggregable.emplace_back(sub.params, sub.sample_count);
        }
        if (!trace.dismissed) {
            if (should_dismiss_round(received, static_cast<long>(selected.size()),
                                     config.dismissal_fraction)) {
                trace.dismissed = true;
                trace.dismiss_cause = "below-threshold";
            } else if (!selected.empty() && aggregable.empty()) {
                trace.dismissed = true;
                trace.dismiss_cause = "no-aggregable-updates";
            } else if (!aggregable.empty()) {
                global = aggregate_fedavg(aggregable);
            }
        }

        // 8. global accuracy on the held-out pool
        trace.global_accuracy = evaluate_accuracy(global, test_pool);

        // 9. orchestrator pass: profile smoothing, observations, trust updates
        std::map<std::string, const Submission*> sub_by_id;
        for (const auto& sub : submissions)
            if (!sub.id.empty()) sub_by_id[sub.id] = &sub;

        std::vector<RoundObservation> observations;
        for (std::size_t slot = 0; slot < selected.size(); ++slot) {
            const std::size_t ci = active_index[selected[slot]];
            SimClient& client = clients[ci];
            const Submission& sub = submissions[slot];
            RoundObservation obs;
            obs.round = round;
            obs.client_id = client.profile.id;
            obs.deployed = true;
            if (sub.submitted) {
                obs.reported_accuracy = sub.local_accuracy;
                obs.reported_context = sub.reported_context;
                obs.observed_context = sub.observed_context;
                if (sub.probe_used) obs.probe_round = round - config.probe_lag;
                obs.completed_ok =
                    tr4_contradictions(sub.reported_context, sub.observed_context) == 0;
                client.profile.avg_finish_time =
                    0.7 * client.profile.avg_finish_time + 0.3 * sub.reported_finish_time;
            }
            observations.push_back(std::move(obs));
        }

        const OrchestratorOutput orch =
            orchestrator_round(clients, observations, round, config);
        requested_areas = orch.requested_areas;
        probe_assignments = orch.probe_assignments;

        for (std::size_t slot = 0; slot < selected.size(); ++slot) {
            const std::size_t ci = active_index[selected[slot]];
            SimClient& client = clients[ci];
            const Submission& sub = submissions[slot];
            if (sub.submitted) {
                client.last_round_participated = round;
                client.last_local_accuracy = sub.local_accuracy;
            }
        }

        // 10. trust log for the bootstrap trainer
        std::map<std::string, const SimClient*> client_by_id;
        for (const auto& c : clients) client_by_id[c.profile.id] = &c;
        for (const auto& [id, metrics] : orch.metrics) {
            const SimClient& client = *client_by_id.at(id);
            TrustLogEntry entry;
            entry.round = round;
            entry.client_id = id;
            entry.tr1 = metrics.tr1;
            entry.tr2_norm = metrics.tr2_norm;
            entry.tr3_norm = metrics.tr3_norm;
            entry.tr4_norm = metrics.tr4_norm;
            entry.tr2_count = metrics.tr2_count;
            entry.abnormal_avg = metrics.tr2_abnormal_avg;
            entry.trust = client.record.trust;
            entry.area = client.profile.area;
            entry.device_type = client.profile.device_type;
            entry.cpu = client.profile.cpu;
            entry.memory = client.profile.memory;
            entry.avg_movements = client.profile.avg_movements;
            logs.push_back(entry);
            result.trust_log.push_back(entry);
        }

        // 11. trace rows for every active client
        for (std::size_t i : active_index) {
            const SimClient& client = clients[i];
            RoundTrace::ClientEntry entry;
            entry.id = client.profile.id;
            entry.trust = client.record.trust;
            entry.malicious = roster.count(client.profile.id) != 0;
            auto mit = orch.metrics.find(client.profile.id);
            if (mit != orch.metrics.end()) {
                entry.tr1 = mit->second.tr1;
                entry.tr2_norm = mit->second.tr2_norm;
                entry.tr3_norm = mit->second.tr3_norm;
                entry.tr4_norm = mit->second.tr4_norm;
                entry.flagged = mit->second.flagged;
            }
            auto sit = sub_by_id.find(client.profile.id);
            if (sit != sub_by_id.end() && sit->second->submitted)
                entry.local_accuracy = sit->second->local_accuracy;
            entry.selected = std::find(trace.selected_ids.begin(), trace.selected_ids.end(),
                                       client.profile.id) != trace.selected_ids.end();
            trace.per_client.push_back(std::move(entry));
        }

        result.traces.push_back(std::move(trace));
    }

    result.final_model = global;
    return result;
}

} // namespace trustfed
