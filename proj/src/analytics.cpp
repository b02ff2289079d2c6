#include "trustfed/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace trustfed {

double median(std::vector<double> values) {
    if (values.empty()) throw Error("insufficient-history", "median of empty sequence");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double mad(const std::vector<double>& values) {
    const double med = median(values);
    std::vector<double> dev;
    dev.reserve(values.size());
    for (double v : values) dev.push_back(std::abs(v - med));
    return median(std::move(dev));
}

double robust_z(double deviation, double mad_value, double epsilon) {
    if (mad_value <= 0.0) {
        if (std::abs(deviation) <= 1e-12) return 0.0;
        return deviation > 0.0 ? (epsilon + 1.0) : -(epsilon + 1.0);
    }
    return 0.6745 * deviation / mad_value;
}

double modified_z_score(const std::vector<double>& history, double point, double epsilon) {
    if (history.size() < 3)
        throw Error("insufficient-history",
                    "need >= 3 points, got " + std::to_string(history.size()));
    const double med = median(history);
    return robust_z(point - med, mad(history), epsilon);
}

std::vector<FeatureRow> standardize(std::vector<FeatureRow> rows) {
    if (rows.empty()) return rows;
    const std::size_t dim = rows[0].values.size();
    const double n = static_cast<double>(rows.size());
    for (std::size_t c = 0; c < dim; ++c) {
        double mean = 0.0;
        for (const auto& r : rows) mean += r.values[c];
        mean /= n;
        double var = 0.0;
        for (const auto& r : rows) {
            const double d = r.values[c] - mean;
            var += d * d;
        }
        const double sd = std::sqrt(var / n); // population convention
        for (auto& r : rows)
            r.values[c] = sd > 0.0 ? (r.values[c] - mean) / sd : 0.0;
    }
    return rows;
}

namespace {

double euclidean(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

} // namespace

std::map<std::string, int> agglomerative_cluster(const std::vector<FeatureRow>& rows, int k) {
    const int n = static_cast<int>(rows.size());
    if (k < 1 || k > n)
        throw Error("too-many-clusters",
                    "k=" + std::to_string(k) + " with " + std::to_string(n) + " rows");

    struct Cluster {
        int min_ordinal;
        int size;
        std::vector<int> members; // input ordinals
        bool alive = true;
    };
    std::vector<Cluster> clusters(n);
    // dist[i][j] holds the average-linkage distance between live clusters i, j
    std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i) clusters[i] = {i, 1, {i}, true};
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            dist[i][j] = dist[j][i] = euclidean(rows[i].values, rows[j].values);

    int live = n;
    while (live > k) {
        int best_a = -1, best_b = -1;
        double best_d = std::numeric_limits<double>::infinity();
        // scan in ordinal order; strict < keeps the lowest-ordinal pair on ties
        for (int a = 0; a < n; ++a) {
            if (!clusters[a].alive) continue;
            for (int b = a + 1; b < n; ++b) {
                if (!clusters[b].alive) continue;
                if (dist[a][b] < best_d) {
                    best_d = dist[a][b];
                    best_a = a;
                    best_b = b;
                }
            }
        }
        // Lance-Williams update for average linkage (UPGMA)
        Cluster& a = clusters[best_a];
        Cluster& b = clusters[best_b];
        for (int m = 0; m < n; ++m) {
            if (!clusters[m].alive || m == best_a || m == best_b) continue;
            const double d = (a.size * dist[best_a][m] + b.size * dist[best_b][m]) /
                             static_cast<double>(a.size + b.size);
            dist[best_a][m] = dist[m][best_a] = d;
        }
        a.members.insert(a.members.end(), b.members.begin(), b.members.end());
        a.size += b.size;
        a.min_ordinal = std::min(a.min_ordinal, b.min_ordinal);
        b.alive = false;
        --live;
    }

    // label clusters 0..k-1 by ascending lowest ordinal
    std::vector<int> order;
    for (int i = 0; i < n; ++i)
        if (clusters[i].alive) order.push_back(i);
    std::sort(order.begin(), order.end(), [&](int x, int y) {
        return clusters[x].min_ordinal < clusters[y].min_ordinal;
    });
    std::map<std::string, int> labels;
    for (std::size_t label = 0; label < order.size(); ++label)
        for (int m : clusters[order[label]].members)
            labels[rows[m].id] = static_cast<int>(label);
    return labels;
}

} // namespace trustfed
