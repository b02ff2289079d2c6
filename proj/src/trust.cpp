#include "trustfed/trust.hpp"

#include <algorithm>
#include <cmath>

namespace trustfed {

double tr1_success_ratio(long success, long deployed) {
    if (success > deployed)
        throw Error("inconsistent-counters",
                    "success=" + std::to_string(success) + " > deployed=" + std::to_string(deployed));
    if (deployed < 1) return 0.0;
    return static_cast<double>(success) / static_cast<double>(deployed);
}

Tr2Result tr2_two_step(const std::vector<double>& history,
                       const std::vector<double>& new_points, double epsilon) {
    Tr2Result result;
    if (new_points.empty()) return result;
    double flagged_sum = 0.0;
    for (double point : new_points) {
        const double z = modified_z_score(history, point, epsilon);
        if (std::abs(z) >= epsilon) {
            ++result.abnormal_count;
            flagged_sum += point;
        }
    }
    if (result.abnormal_count > 0)
        result.abnormal_average = flagged_sum / result.abnormal_count;
    return result;
}

Tr3Result tr3_group_deviation(const std::set<std::string>& previous_neighbors,
                              const std::set<std::string>& current_cluster_members) {
    Tr3Result result;
    result.group_size = static_cast<int>(current_cluster_members.size());
    if (current_cluster_members.empty()) return result; // (0, 0)
    for (const auto& id : current_cluster_members)
        if (previous_neighbors.count(id)) ++result.common;
    return result;
}

int tr4_contradictions(const ContextMap& reported, const ContextMap& observed) {
    if (reported.size() != observed.size())
        throw Error("context-schema-mismatch", "reported and observed contexts differ in size");
    int count = 0;
    auto it_r = reported.begin();
    auto it_o = observed.begin();
    for (; it_r != reported.end(); ++it_r, ++it_o) {
        if (it_r->first != it_o->first)
            throw Error("context-schema-mismatch", "key '" + it_r->first + "' vs '" + it_o->first + "'");
        const ContextValue& a = it_r->second;
        const ContextValue& b = it_o->second;
        bool equal;
        if (a.index() != b.index()) {
            equal = false;
        } else if (std::holds_alternative<double>(a)) {
            equal = std::abs(std::get<double>(a) - std::get<double>(b)) <= 1e-9;
        } else {
            equal = std::get<std::string>(a) == std::get<std::string>(b);
        }
        if (!equal) ++count;
    }
    return count;
}

double aggregate_trust(double tr1, double tr2_norm, double tr3_norm, double tr4_norm,
                       const std::array<double, 4>& alphas) {
    const double raw = (tr1 * alphas[0] - tr2_norm * alphas[1] +
                        tr3_norm * alphas[2] - tr4_norm * alphas[3]) / 4.0;
    return clamp01(raw);
}

TrustUpdate update_trust_record(const TrustRecord& record, const RoundObservation& obs,
                                const ScenarioConfig& config) {
    TrustUpdate out{record, {}};
    if (!obs.deployed) return out;

    TrustRecord& r = out.record;
    TrustMetrics& m = out.metrics;
    m.updated = true;

    r.deployed_count += 1;
    const bool warmup = r.deployed_count <= config.warmup_deployed_rounds;
    const std::vector<double> history(r.accuracy_history.begin(), r.accuracy_history.end());

    // --- Tr2: two-step verification on this round's reported accuracy ---
    const std::size_t min_history =
        static_cast<std::size_t>(std::max(3, config.min_z_history));
    int points_checked = 0;
    bool probe_checked = false;
    if (obs.reported_accuracy) {
        const double reported = *obs.reported_accuracy;
        if (obs.probe_round && r.past_accuracy.count(*obs.probe_round) &&
            history.size() >= min_history) {
            // Probe: same modified-z machinery, centered on the accuracy the
            // client recorded for that stale model.
            const double recorded = r.past_accuracy.at(*obs.probe_round);
            const double z = robust_z(reported - recorded, mad(history), config.epsilon);
            points_checked = 1;
            probe_checked = true;
            if (std::abs(z) >= config.epsilon) {
                m.tr2_count = 1;
                m.tr2_abnormal_avg = reported;
            }
        } else if (history.size() >= min_history) {
            const Tr2Result t2 = tr2_two_step(history, {reported}, config.epsilon);
            points_checked = 1;
            m.tr2_count = t2.abnormal_count;
            m.tr2_abnormal_avg = t2.abnormal_average;
        }
        // short history: nothing checkable yet, treated as count 0
    }
    m.tr2_norm = (warmup || points_checked == 0)
                     ? 0.0
                     : static_cast<double>(m.tr2_count) / points_checked;

    // a round only counts as successfully served when the job finished AND
    // its report survived verification
    if (obs.completed_ok && m.tr2_count == 0) r.success_count += 1;
    m.tr1 = tr1_success_ratio(r.success_count, r.deployed_count);

    // --- Tr3: deviation from the expected behavior group ---
    const Tr3Result t3 = tr3_group_deviation(r.previous_neighbors, obs.current_cluster_members);
    m.tr3_common = t3.common;
    m.tr3_group_size = t3.group_size;
    if (warmup || r.previous_neighbors.empty() || t3.group_size == 0) {
        m.tr3_norm = 1.0; // no usable expectation yet
    } else {
        m.tr3_norm = static_cast<double>(t3.common) / t3.group_size;
    }
    r.previous_neighbors = obs.current_cluster_members;
    r.group_common_neighbors = t3.common;

    // --- Tr4: context-sharing contradictions ---
    m.tr4_count = tr4_contradictions(obs.reported_context, obs.observed_context);
    m.tr4_norm = obs.reported_context.empty()
                     ? 0.0
                     : static_cast<double>(m.tr4_count) / obs.reported_context.size();
    r.contradiction_count = m.tr4_count;

    // --- aggregate and smooth ---
    m.aggregate = aggregate_trust(m.tr1, m.tr2_norm, m.tr3_norm, m.tr4_norm, config.alphas);
    r.trust = clamp01((1.0 - config.trust_beta) * r.trust + config.trust_beta * m.aggregate);
    m.flagged = m.tr2_count > 0 || m.tr4_count > 0;

    // --- bookkeeping: histories stay bounded. Upward outliers are absorbed
    // (local accuracy rises with the global model); collapses are not, so a
    // sustained manipulator keeps deviating from the clean reference ---
    const bool improvement =
        !history.empty() && obs.reported_accuracy &&
        *obs.reported_accuracy >= median(history);
    if (obs.reported_accuracy && !probe_checked) {
        if (warmup || m.tr2_count == 0 || improvement) {
            r.accuracy_history.push_back(*obs.reported_accuracy);
            while (static_cast<int>(r.accuracy_history.size()) > config.history_window)
                r.accuracy_history.pop_front();
        }
        r.past_accuracy[obs.round] = *obs.reported_accuracy;
        const int keep_from = obs.round - std::max(config.history_window, config.probe_lag + 2);
        while (!r.past_accuracy.empty() && r.past_accuracy.begin()->first < keep_from)
            r.past_accuracy.erase(r.past_accuracy.begin());
    }
    r.abnormal_counts.push_back(m.tr2_count);
    while (static_cast<int>(r.abnormal_counts.size()) > config.history_window)
        r.abnormal_counts.pop_front();

    return out;
}

} // namespace trustfed
