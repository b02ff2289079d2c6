#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "trustfed/bootstrap.hpp"
#include "trustfed/rng.hpp"

using namespace trustfed;

namespace {

double oracle_sd(const std::vector<const BootstrapExample*>& subset) {
    if (subset.empty()) return 0.0;
    double mean = 0.0;
    for (const auto* e : subset) mean += e->target;
    mean /= subset.size();
    double var = 0.0;
    for (const auto* e : subset) var += (e->target - mean) * (e->target - mean);
    return std::sqrt(var / subset.size());
}

struct OracleSplit {
    double sdr = -1.0;
    int feature = -1;
    bool numeric = false;
    double threshold = 0.0;
};

// Brute force over every feature and every candidate split; mirrors the spec
// text directly and stays independent of the tree implementation.
OracleSplit oracle_best_split(const std::vector<const BootstrapExample*>& subset) {
    OracleSplit best;
    const double parent = oracle_sd(subset);
    const double n = static_cast<double>(subset.size());
    for (int f = 0; f < kBootstrapFeatureCount; ++f) {
        if (bootstrap_feature_numeric(f)) {
            std::vector<double> values;
            for (const auto* e : subset) values.push_back(bootstrap_numeric_value(e->features, f));
            std::sort(values.begin(), values.end());
            values.erase(std::unique(values.begin(), values.end()), values.end());
            for (std::size_t v = 0; v + 1 < values.size(); ++v) {
                const double thr = 0.5 * (values[v] + values[v + 1]);
                std::vector<const BootstrapExample*> left, right;
                for (const auto* e : subset)
                    (bootstrap_numeric_value(e->features, f) <= thr ? left : right).push_back(e);
                const double sdr = parent - (left.size() / n) * oracle_sd(left) -
                                   (right.size() / n) * oracle_sd(right);
                if (sdr > best.sdr + 1e-12) best = {sdr, f, true, thr};
            }
        } else {
            std::map<std::string, std::vector<const BootstrapExample*>> groups;
            for (const auto* e : subset)
                groups[bootstrap_category_value(e->features, f)].push_back(e);
            if (groups.size() < 2) continue;
            double weighted = 0.0;
            for (const auto& [key, members] : groups)
                weighted += (members.size() / n) * oracle_sd(members);
            const double sdr = parent - weighted;
            if (sdr > best.sdr + 1e-12) best = {sdr, f, false, 0.0};
        }
    }
    return best;
}

BootstrapExample ex(int area, const std::string& type, double cpu, double memory, int bin,
                    double target) {
    return {{area, type, cpu, memory, bin}, target};
}

// Walk the fitted tree and check every internal node against the oracle on
// the exact training subset that reached it.
void check_splits_against_oracle(const RegressionTree& tree, int node_index,
                                 std::vector<const BootstrapExample*> subset) {
    const RegressionTree::Node& node = tree.node(node_index);
    if (node.leaf) return;
    const OracleSplit want = oracle_best_split(subset);
    REQUIRE(want.feature >= 0);
    CHECK(node.feature == want.feature);
    CHECK(node.numeric == want.numeric);
    if (node.numeric) {
        CHECK(node.threshold == doctest::Approx(want.threshold).epsilon(1e-12));
        std::vector<const BootstrapExample*> left, right;
        for (const auto* e : subset)
            (bootstrap_numeric_value(e->features, node.feature) <= node.threshold ? left : right)
                .push_back(e);
        check_splits_against_oracle(tree, node.numeric_children[0], left);
        check_splits_against_oracle(tree, node.numeric_children[1], right);
    } else {
        for (const auto& [key, child] : node.category_children) {
            std::vector<const BootstrapExample*> members;
            for (const auto* e : subset)
                if (bootstrap_category_value(e->features, node.feature) == key)
                    members.push_back(e);
            check_splits_against_oracle(tree, child, members);
        }
    }
}

} // namespace

TEST_CASE("constant targets collapse to a single leaf") {
    std::vector<BootstrapExample> data;
    for (int i = 0; i < 6; ++i) data.push_back(ex(i % 3, "phone", 1.0 + i, 2.0, 0, 0.7));
    const RegressionTree tree = fit_sdr_tree(data);
    CHECK(tree.node(tree.root()).leaf);
    CHECK(predict_initial_trust(tree, data[0].features) == doctest::Approx(0.7));
}

TEST_CASE("single example gives a single-leaf tree") {
    const RegressionTree tree = fit_sdr_tree({ex(0, "phone", 1.0, 2.0, 0, 0.41)});
    CHECK(tree.node(tree.root()).leaf);
    CHECK(predict_initial_trust(tree, ex(5, "laptop", 9.0, 9.0, 2, 0.0).features) ==
          doctest::Approx(0.41));
}

TEST_CASE("empty training set raises") {
    try {
        fit_sdr_tree({});
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.code() == "empty-training-set");
    }
}

TEST_CASE("root split maximizes SDR on a toy set where area beats type") {
    // area separates targets perfectly, type only partially
    std::vector<BootstrapExample> data{
        ex(0, "phone", 1.0, 2.0, 0, 0.9), ex(0, "tablet", 1.2, 2.1, 0, 0.9),
        ex(0, "phone", 1.4, 2.2, 1, 0.88), ex(0, "tablet", 1.6, 2.3, 1, 0.92),
        ex(1, "phone", 1.1, 2.0, 0, 0.2), ex(1, "tablet", 1.3, 2.1, 0, 0.2),
        ex(1, "phone", 1.5, 2.2, 1, 0.22), ex(1, "tablet", 1.7, 2.3, 1, 0.18),
    };
    const OracleSplit oracle = oracle_best_split(
        {&data[0], &data[1], &data[2], &data[3], &data[4], &data[5], &data[6], &data[7]});
    CHECK(oracle.feature == 0); // area
    const RegressionTree tree = fit_sdr_tree(data, {.max_depth = 4, .min_samples = 2});
    CHECK_FALSE(tree.node(tree.root()).leaf);
    CHECK(tree.node(tree.root()).feature == 0);
}

TEST_CASE("every split matches the brute-force SDR oracle on random data") {
    SeedStream rng(1205);
    const char* types[] = {"phone", "tablet", "laptop"};
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<BootstrapExample> data;
        const std::size_t n = 10 + rng.uniform_int(191); // up to 200 rows
        for (std::size_t i = 0; i < n; ++i) {
            data.push_back(ex(static_cast<int>(rng.uniform_int(6)), types[rng.uniform_int(3)],
                              rng.uniform(1.0, 8.0), rng.uniform(2.0, 16.0),
                              static_cast<int>(rng.uniform_int(3)), rng.uniform(0.0, 1.0)));
        }
        const TreeParams params{.max_depth = 5, .min_samples = 4, .cv_stop = 0.10};
        const RegressionTree tree = fit_sdr_tree(data, params);
        std::vector<const BootstrapExample*> all;
        for (const auto& e : data) all.push_back(&e);
        check_splits_against_oracle(tree, tree.root(), all);

        // predictions stay inside the target range
        double lo = 1.0, hi = 0.0;
        for (const auto& e : data) {
            lo = std::min(lo, e.target);
            hi = std::max(hi, e.target);
        }
        for (int probe = 0; probe < 20; ++probe) {
            const auto f = ex(static_cast<int>(rng.uniform_int(8)), types[rng.uniform_int(3)],
                              rng.uniform(0.0, 10.0), rng.uniform(0.0, 20.0),
                              static_cast<int>(rng.uniform_int(3)), 0.0)
                               .features;
            const double p = predict_initial_trust(tree, f);
            CHECK(p >= lo - 1e-12);
            CHECK(p <= hi + 1e-12);
        }
    }
}

TEST_CASE("fit is deterministic") {
    SeedStream rng(77);
    std::vector<BootstrapExample> data;
    const char* types[] = {"phone", "tablet", "laptop"};
    for (int i = 0; i < 60; ++i)
        data.push_back(ex(static_cast<int>(rng.uniform_int(4)), types[rng.uniform_int(3)],
                          rng.uniform(1.0, 8.0), rng.uniform(2.0, 16.0),
                          static_cast<int>(rng.uniform_int(3)), rng.uniform(0.0, 1.0)));
    const std::string a = dump_tree(fit_sdr_tree(data));
    const std::string b = dump_tree(fit_sdr_tree(data));
    CHECK(a == b);
    CHECK(!a.empty());
}

TEST_CASE("unseen categories route to the heaviest child") {
    // area 0 has 4 examples at 0.8, area 1 has 2 at 0.2; area 7 is unseen
    std::vector<BootstrapExample> data{
        ex(0, "phone", 1.0, 2.0, 0, 0.8), ex(0, "phone", 1.1, 2.0, 0, 0.8),
        ex(0, "phone", 1.2, 2.0, 0, 0.8), ex(0, "phone", 1.3, 2.0, 0, 0.8),
        ex(1, "phone", 1.0, 2.0, 0, 0.2), ex(1, "phone", 1.1, 2.0, 0, 0.2),
    };
    const RegressionTree tree = fit_sdr_tree(data, {.max_depth = 2, .min_samples = 2});
    REQUIRE_FALSE(tree.node(tree.root()).leaf);
    REQUIRE(tree.node(tree.root()).feature == 0);
    const double p = predict_initial_trust(tree, ex(7, "phone", 1.0, 2.0, 0, 0.0).features);
    CHECK(p == doctest::Approx(0.8)); // heaviest child has 4 samples
}

TEST_CASE("collect keeps one example per client at the latest round") {
    TrustLogEntry a;
    a.round = 3;
    a.client_id = "c01";
    a.trust = 0.4;
    a.area = 1;
    a.device_type = "phone";
    a.cpu = 1.0;
    a.memory = 2.0;
    a.avg_movements = 0.5;
    TrustLogEntry b = a;
    b.round = 7;
    b.trust = 0.9;
    TrustLogEntry c = a;
    c.client_id = "c02";
    c.round = 5;
    c.avg_movements = 4.0;
    TrustLogEntry d = a;
    d.client_id = "c03";
    d.round = 2;
    d.avg_movements = 2.0;

    const BootstrapDataset ds = collect_bootstrap_dataset({a, b, c, d});
    CHECK(ds.examples.size() == 3);
    double c01_target = -1.0;
    for (const auto& e : ds.examples)
        if (e.features.area == 1 && e.features.movement_bin == ds.bin_movements(0.5))
            c01_target = std::max(c01_target, e.target);
    CHECK(c01_target == doctest::Approx(0.9)); // round 7 wins

    CHECK(collect_bootstrap_dataset({}).examples.empty());

    // disjoint clients from several orchestrators all survive
    std::vector<TrustLogEntry> many;
    for (int orch = 0; orch < 3; ++orch)
        for (int i = 0; i < 10; ++i) {
            TrustLogEntry e = a;
            e.client_id = "o" + std::to_string(orch) + "_c" + std::to_string(i);
            many.push_back(e);
        }
    CHECK(collect_bootstrap_dataset(many).examples.size() == 30);
}
