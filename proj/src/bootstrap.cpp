#include "trustfed/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

namespace trustfed {

const char* bootstrap_feature_name(int feature) {
    switch (feature) {
        case 0: return "area";
        case 1: return "device_type";
        case 2: return "cpu";
        case 3: return "memory";
        case 4: return "movement_bin";
    }
    return "?";
}

bool bootstrap_feature_numeric(int feature) { return feature == 2 || feature == 3; }

double bootstrap_numeric_value(const BootstrapFeatures& f, int feature) {
    return feature == 2 ? f.cpu : f.memory;
}

std::string bootstrap_category_value(const BootstrapFeatures& f, int feature) {
    switch (feature) {
        case 0: return std::to_string(f.area);
        case 1: return f.device_type;
        case 4: return std::to_string(f.movement_bin);
    }
    return {};
}

namespace {

double subset_stddev(const std::vector<BootstrapExample>& all, const std::vector<int>& idx) {
    if (idx.empty()) return 0.0;
    double mean = 0.0;
    for (int i : idx) mean += all[i].target;
    mean /= idx.size();
    double var = 0.0;
    for (int i : idx) {
        const double d = all[i].target - mean;
        var += d * d;
    }
    return std::sqrt(var / idx.size()); // population convention
}

double subset_mean(const std::vector<BootstrapExample>& all, const std::vector<int>& idx) {
    double mean = 0.0;
    for (int i : idx) mean += all[i].target;
    return idx.empty() ? 0.0 : mean / idx.size();
}

struct SplitChoice {
    double sdr = -1.0;
    int feature = -1;
    bool numeric = false;
    double threshold = 0.0;
    std::vector<std::pair<std::string, std::vector<int>>> partitions; // deterministic order
};

// SDR = stddev(parent) - sum(|child|/|parent| * stddev(child)); the best split
// wins, ties broken by lowest feature index then lowest threshold.
SplitChoice best_split(const std::vector<BootstrapExample>& all, const std::vector<int>& idx) {
    SplitChoice best;
    const double parent_sd = subset_stddev(all, idx);
    const double n = static_cast<double>(idx.size());

    auto weighted_child_sd = [&](const std::vector<std::vector<int>>& parts) {
        double s = 0.0;
        for (const auto& p : parts)
            s += (p.size() / n) * subset_stddev(all, p);
        return s;
    };

    for (int f = 0; f < kBootstrapFeatureCount; ++f) {
        if (bootstrap_feature_numeric(f)) {
            std::vector<double> values;
            values.reserve(idx.size());
            for (int i : idx) values.push_back(bootstrap_numeric_value(all[i].features, f));
            std::sort(values.begin(), values.end());
            values.erase(std::unique(values.begin(), values.end()), values.end());
            for (std::size_t v = 0; v + 1 < values.size(); ++v) {
                const double threshold = 0.5 * (values[v] + values[v + 1]);
                std::vector<int> left, right;
                for (int i : idx) {
                    (bootstrap_numeric_value(all[i].features, f) <= threshold ? left : right)
                        .push_back(i);
                }
                const double sdr = parent_sd - weighted_child_sd({left, right});
                if (sdr > best.sdr + 1e-12) {
                    best = {sdr, f, true, threshold, {{"<=", left}, {">", right}}};
                }
            }
        } else {
            std::map<std::string, std::vector<int>> groups;
            for (int i : idx) groups[bootstrap_category_value(all[i].features, f)].push_back(i);
            if (groups.size() < 2) continue;
            std::vector<std::vector<int>> parts;
            std::vector<std::pair<std::string, std::vector<int>>> ordered;
            for (auto& [key, members] : groups) {
                parts.push_back(members);
                ordered.emplace_back(key, members);
            }
            const double sdr = parent_sd - weighted_child_sd(parts);
            if (sdr > best.sdr + 1e-12) {
                best = {sdr, f, false, 0.0, ordered};
            }
        }
    }
    return best;
}

} // namespace

namespace {

int build_node(const std::vector<BootstrapExample>& all, const std::vector<int>& idx,
               int depth, const TreeParams& params, std::vector<RegressionTree::Node>& nodes) {
    RegressionTree::Node node;
    node.mean = subset_mean(all, idx);
    node.count = static_cast<int>(idx.size());
    const int self = static_cast<int>(nodes.size());
    nodes.push_back(node);

    const double sd = subset_stddev(all, idx);
    const bool stop = depth >= params.max_depth ||
                      static_cast<int>(idx.size()) < params.min_samples ||
                      sd <= 0.0 ||
                      (nodes[self].mean > 0.0 && sd / nodes[self].mean < params.cv_stop);
    if (stop) return self;

    const SplitChoice choice = best_split(all, idx);
    if (choice.feature < 0 || choice.sdr <= 1e-12) return self;
    for (const auto& [key, members] : choice.partitions)
        if (members.empty()) return self;

    nodes[self].leaf = false;
    nodes[self].feature = choice.feature;
    nodes[self].numeric = choice.numeric;
    nodes[self].threshold = choice.threshold;
    if (choice.numeric) {
        const int left = build_node(all, choice.partitions[0].second, depth + 1, params, nodes);
        const int right = build_node(all, choice.partitions[1].second, depth + 1, params, nodes);
        nodes[self].numeric_children = {left, right};
    } else {
        for (const auto& [key, members] : choice.partitions) {
            const int child = build_node(all, members, depth + 1, params, nodes);
            nodes[self].category_children.emplace_back(key, child);
        }
    }
    return self;
}

} // namespace

RegressionTree fit_sdr_tree(const std::vector<BootstrapExample>& examples,
                            const TreeParams& params) {
    if (examples.empty()) throw Error("empty-training-set", "no bootstrap examples");
    std::vector<int> idx(examples.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    RegressionTree tree;
    tree.root_ = build_node(examples, idx, 0, params, tree.nodes_);
    return tree;
}

double predict_initial_trust(const RegressionTree& tree, const BootstrapFeatures& features) {
    int cur = tree.root();
    for (;;) {
        const RegressionTree::Node& node = tree.node(cur);
        if (node.leaf) return node.mean;
        if (node.numeric) {
            const double v = bootstrap_numeric_value(features, node.feature);
            cur = v <= node.threshold ? node.numeric_children[0] : node.numeric_children[1];
            continue;
        }
        const std::string v = bootstrap_category_value(features, node.feature);
        int next = -1;
        for (const auto& [key, child] : node.category_children) {
            if (key == v) {
                next = child;
                break;
            }
        }
        if (next < 0) {
            // unseen category: follow the heaviest child; a tie falls back to
            // this node's own mean
            int best_count = -1;
            bool tie = false;
            for (const auto& [key, child] : node.category_children) {
                const int c = tree.node(child).count;
                if (c > best_count) {
                    best_count = c;
                    next = child;
                    tie = false;
                } else if (c == best_count) {
                    tie = true;
                }
            }
            if (tie || next < 0) return node.mean;
        }
        cur = next;
    }
}

namespace {

void dump_node(const RegressionTree& tree, int index, int indent, std::ostringstream& out) {
    const RegressionTree::Node& node = tree.node(index);
    const std::string pad(indent * 2, ' ');
    if (node.leaf) {
        out << pad << "leaf mean=" << node.mean << " n=" << node.count << "\n";
        return;
    }
    if (node.numeric) {
        out << pad << bootstrap_feature_name(node.feature) << " <= " << node.threshold
            << " (n=" << node.count << ")\n";
        dump_node(tree, node.numeric_children[0], indent + 1, out);
        out << pad << bootstrap_feature_name(node.feature) << " > " << node.threshold << "\n";
        dump_node(tree, node.numeric_children[1], indent + 1, out);
        return;
    }
    for (const auto& [key, child] : node.category_children) {
        out << pad << bootstrap_feature_name(node.feature) << " = " << key
            << " (n=" << tree.node(child).count << ")\n";
        dump_node(tree, child, indent + 1, out);
    }
}

} // namespace

std::string dump_tree(const RegressionTree& tree) {
    std::ostringstream out;
    if (!tree.empty()) dump_node(tree, tree.root(), 0, out);
    return out.str();
}

BootstrapDataset collect_bootstrap_dataset(const std::vector<TrustLogEntry>& logs) {
    BootstrapDataset ds;
    std::map<std::string, const TrustLogEntry*> latest;
    for (const auto& entry : logs) {
        auto it = latest.find(entry.client_id);
        if (it == latest.end() || entry.round > it->second->round) latest[entry.client_id] = &entry;
    }
    if (latest.empty()) return ds;

    std::vector<double> movements;
    movements.reserve(latest.size());
    for (const auto& [id, entry] : latest) movements.push_back(entry->avg_movements);
    std::sort(movements.begin(), movements.end());
    ds.movement_cuts[0] = movements[movements.size() / 3];
    ds.movement_cuts[1] = movements[(2 * movements.size()) / 3];

    for (const auto& [id, entry] : latest) {
        BootstrapExample ex;
        ex.features.area = entry->area;
        ex.features.device_type = entry->device_type;
        ex.features.cpu = entry->cpu;
        ex.features.memory = entry->memory;
        ex.features.movement_bin = ds.bin_movements(entry->avg_movements);
        ex.target = entry->trust;
        ds.examples.push_back(ex);
    }
    return ds;
}

} // namespace trustfed
