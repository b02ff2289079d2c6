#pragma once

#include <map>
#include <string>
#include <vector>

#include "trustfed/common.hpp"

namespace trustfed {

// One entity's feature vector; all rows of a dataset share the same length.
struct FeatureRow {
    std::string id;
    std::vector<double> values;
};

double median(std::vector<double> values);
double mad(const std::vector<double>& values); // median absolute deviation

// 0.6745 * deviation / mad_value with the MAD-zero fallback: deviations within
// 1e-12 score 0, anything larger scores +-(epsilon + 1) so it always flags.
double robust_z(double deviation, double mad_value, double epsilon);

// Modified z-score of `point` against `history` (length >= 3). Throws
// "insufficient-history" otherwise.
double modified_z_score(const std::vector<double>& history, double point,
                        double epsilon = 3.5);

// Column-wise (x - mean) / stddev with population stddev; constant columns
// become all-zero.
std::vector<FeatureRow> standardize(std::vector<FeatureRow> rows);

// Bottom-up agglomerative clustering with average linkage on Euclidean
// distance. Returns entity id -> label in [0, k); labels are ordered by the
// lowest input ordinal in each cluster. Distance ties merge the pair with the
// lowest input ordinals, so the result is deterministic for a given row order.
std::map<std::string, int> agglomerative_cluster(const std::vector<FeatureRow>& rows, int k);

} // namespace trustfed
