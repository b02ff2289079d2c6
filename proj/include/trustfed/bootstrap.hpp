#pragma once

#include <array>
#include <string>
#include <vector>

#include "trustfed/common.hpp"

namespace trustfed {

// Feature layout used by the initial-trust tree. Numeric features split at
// midpoints (binary); categorical features split multiway.
struct BootstrapFeatures {
    int area = 0;             // categorical
    std::string device_type;  // categorical
    double cpu = 0.0;         // numeric
    double memory = 0.0;      // numeric
    int movement_bin = 0;     // categorical tercile bin, 0..2
};

struct BootstrapExample {
    BootstrapFeatures features;
    double target = 0.0; // earned trust in [0, 1]
};

struct TreeParams {
    int max_depth = 6;
    int min_samples = 4;
    double cv_stop = 0.10; // stop when stddev/mean drops below this
};

// Regression tree fitted with Standard Deviation Reduction. Nodes are stored
// flat; children reference node indices.
class RegressionTree {
public:
    struct Node {
        bool leaf = true;
        int feature = -1;         // split feature index, -1 for leaves
        bool numeric = false;     // numeric split: value <= threshold goes left
        double threshold = 0.0;
        std::vector<std::pair<std::string, int>> category_children; // value -> node
        std::array<int, 2> numeric_children{-1, -1};
        double mean = 0.0; // subset mean, also the fallback prediction
        int count = 0;
    };

    int root() const { return root_; }
    const std::vector<Node>& nodes() const { return nodes_; }
    const Node& node(int i) const { return nodes_[i]; }
    bool empty() const { return nodes_.empty(); }

    friend RegressionTree fit_sdr_tree(const std::vector<BootstrapExample>&, const TreeParams&);

private:
    std::vector<Node> nodes_;
    int root_ = 0;
};

// Number of features the tree understands (area, type, cpu, memory, bin).
constexpr int kBootstrapFeatureCount = 5;

const char* bootstrap_feature_name(int feature);
bool bootstrap_feature_numeric(int feature);
double bootstrap_numeric_value(const BootstrapFeatures& f, int feature);
std::string bootstrap_category_value(const BootstrapFeatures& f, int feature);

RegressionTree fit_sdr_tree(const std::vector<BootstrapExample>& examples,
                            const TreeParams& params = {});

// Walks the tree; an unseen categorical value routes to the child with the
// largest training count, falling back to the node's own mean on a tie.
double predict_initial_trust(const RegressionTree& tree, const BootstrapFeatures& features);

std::string dump_tree(const RegressionTree& tree);

// One orchestrator log line: trust outcome of one (round, client) pair plus
// the client attributes the bootstrap tree learns from.
struct TrustLogEntry {
    int round = 0;
    std::string client_id;
    double tr1 = 0.0;
    double tr2_norm = 0.0;
    double tr3_norm = 0.0;
    double tr4_norm = 0.0;
    int tr2_count = 0;
    double abnormal_avg = 0.0;
    double trust = 0.0;
    int area = 0;
    std::string device_type;
    double cpu = 0.0;
    double memory = 0.0;
    double avg_movements = 0.0;
};

struct BootstrapDataset {
    std::vector<BootstrapExample> examples;
    std::array<double, 2> movement_cuts{0.0, 0.0}; // tercile cut points

    int bin_movements(double avg_movements) const {
        if (avg_movements < movement_cuts[0]) return 0;
        if (avg_movements < movement_cuts[1]) return 1;
        return 2;
    }
};

// One example per client, keeping the most recent round seen across all
// orchestrator logs. Movement tercile cuts come from the collected values.
BootstrapDataset collect_bootstrap_dataset(const std::vector<TrustLogEntry>& logs);

} // namespace trustfed
