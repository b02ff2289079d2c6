#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "trustfed/analytics.hpp"
#include "trustfed/domain.hpp"

namespace trustfed {

using ContextValue = std::variant<double, std::string>;
using ContextMap = std::map<std::string, ContextValue>;

// Everything the orchestrator learned about one client in one round.
struct RoundObservation {
    int round = 0;
    std::string client_id;
    bool deployed = false;
    bool completed_ok = false;
    std::optional<double> reported_accuracy;
    std::optional<int> probe_round; // stale-weights round id when probed
    ContextMap reported_context;
    ContextMap observed_context;
    FeatureRow behavior_features;
    std::set<std::string> current_cluster_members; // excludes the client itself
};

// Tr1: share of deployed jobs served successfully; 0 before any deployment.
double tr1_success_ratio(long success, long deployed);

struct Tr2Result {
    int abnormal_count = 0;
    double abnormal_average = 0.0; // mean of the flagged accuracies, 0 if none
};

// Tr2: modified-z outlier count of this round's reported accuracies against
// the client's accepted history. Throws "insufficient-history" when the
// history has fewer than 3 points.
Tr2Result tr2_two_step(const std::vector<double>& history,
                       const std::vector<double>& new_points, double epsilon);

struct Tr3Result {
    int common = 0;
    int group_size = 0;
};

// Tr3: how much of last round's cluster neighborhood the client kept.
Tr3Result tr3_group_deviation(const std::set<std::string>& previous_neighbors,
                              const std::set<std::string>& current_cluster_members);

// Tr4: count of context entries where the client's report disagrees with the
// orchestrator's own record. Throws "context-schema-mismatch" on key drift.
int tr4_contradictions(const ContextMap& reported, const ContextMap& observed);

// Weighted aggregation of the four scaled measurements, clamped to [0, 1].
// Defaults alpha = (2, 1, 2, 1) make a violation-free client score exactly 1.
double aggregate_trust(double tr1, double tr2_norm, double tr3_norm, double tr4_norm,
                       const std::array<double, 4>& alphas = {2.0, 1.0, 2.0, 1.0});

struct TrustMetrics {
    double tr1 = 0.0;
    double tr2_norm = 0.0;
    double tr3_norm = 0.0;
    double tr4_norm = 0.0;
    int tr2_count = 0;
    double tr2_abnormal_avg = 0.0;
    int tr3_common = 0;
    int tr3_group_size = 0;
    int tr4_count = 0;
    double aggregate = 0.0;
    bool flagged = false; // any Tr2 outlier or Tr4 contradiction this round
    bool updated = false; // false for non-deployed rounds
};

struct TrustUpdate {
    TrustRecord record;
    TrustMetrics metrics;
};

// One trust step per Algorithms 1-4 plus the EMA smoothing:
//   trust <- (1 - beta) * trust + beta * aggregate
// Non-deployed rounds leave the record untouched. Tr2/Tr3 contribute their
// neutral values during the client's first `warmup_deployed_rounds` deployed
// rounds. Accuracies flagged as outliers are not appended to the history, so
// the reference stays clean under sustained manipulation.
TrustUpdate update_trust_record(const TrustRecord& record, const RoundObservation& obs,
                                const ScenarioConfig& config);

} // namespace trustfed
