#pragma once

#include <optional>
#include <string>
#include <vector>

#include "trustfed/bootstrap.hpp"
#include "trustfed/datagen.hpp"
#include "trustfed/domain.hpp"
#include "trustfed/model.hpp"
#include "trustfed/trust.hpp"

namespace trustfed {

// Per-round record emitted by the simulator.
struct RoundTrace {
    struct ClientEntry {
        std::string id;
        double trust = 0.0;
        double tr1 = 0.0;
        double tr2_norm = 0.0;
        double tr3_norm = 0.0;
        double tr4_norm = 0.0;
        std::optional<double> local_accuracy;
        bool flagged = false;
        bool selected = false;
        bool malicious = false;
    };

    int round = 0;
    std::vector<std::string> selected_ids;
    bool dismissed = false;
    std::string dismiss_cause;
    double global_accuracy = 0.0;
    std::vector<ClientEntry> per_client;
};

struct ScenarioResult {
    std::vector<RoundTrace> traces;
    std::vector<TrustLogEntry> trust_log;
    ModelParams final_model;
};

bool should_dismiss_round(long received, long selected, double fraction);

// What one client hands back for a round: the dataset view it trained on plus
// everything it reports to the orchestrator.
struct LocalOutcome {
    ClientDataset train_view;
    ModelParams params;
    double local_accuracy = 0.0;
    int sample_count = 0;
    ContextMap reported_context;
    double reported_finish_time = 0.0;
    FeatureRow behavior_features;
};

// index of avg_finish_time inside the behavior feature vector
constexpr int kBehaviorFinishTimeIndex = 4;

void flip_records(std::vector<Record>& records, double intensity, int label_count,
                  SeedStream& rng);
ClientDataset flip_labels(ClientDataset dataset, double intensity, int label_count,
                          SeedStream& rng);
ClientDataset hide_data(ClientDataset dataset, double intensity);
ContextMap falsify_context(ContextMap context, double intensity, SeedStream& rng);

// Dispatches one behavior onto an honest outcome. Dataset behaviors
// (label_flip, data_hiding) perturb train_view -- the engine retrains on it;
// report behaviors perturb the submitted values. Zero intensity and rounds
// before onset leave everything untouched.
LocalOutcome apply_malicious_behavior(const MaliciousBehavior& behavior, LocalOutcome honest,
                                      int round, SeedStream& rng, int label_count);

// Mutable per-client simulation state.
struct SimClient {
    DeviceProfile profile;
    LearningUtility utility;
    ClientDataset data;
    TrustRecord record;
    std::optional<MaliciousBehavior> behavior;
    double base_availability = 0.0;
    double base_movements = 0.0;
    double base_finish_time = 0.0;
    bool active = false;
    int last_round_participated = -1;
    double last_local_accuracy = 0.0;
};

struct OrchestratorOutput {
    std::map<std::string, TrustMetrics> metrics; // per deployed client
    std::set<int> requested_areas;
    std::set<std::string> probe_assignments;
};

// One orchestrator pass: recluster active clients on behavior features
// (k = ceil(sqrt(active))), update every deployed client's trust record from
// its observation, list under-trusted areas, and pick next round's probes.
OrchestratorOutput orchestrator_round(std::vector<SimClient>& clients,
                                      const std::vector<RoundObservation>& observations,
                                      int round, const ScenarioConfig& config);

// Full deterministic scenario: per round, bootstrap newcomers, build the
// deployment context, select clients (GA or the random baseline), train with
// malicious perturbation, aggregate or dismiss, update trust, and trace.
ScenarioResult run_scenario(const ScenarioConfig& config);

} // namespace trustfed
