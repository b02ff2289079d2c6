#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "trustfed/common.hpp"
#include "trustfed/domain.hpp"
#include "trustfed/rng.hpp"

namespace trustfed {

struct Record {
    std::vector<double> features;
    int label = 0;

    bool operator==(const Record&) const = default;
};

struct ClientDataset {
    std::string owner;
    std::vector<Record> records;
};

struct ModelShape {
    int input_dim = 0;
    int num_classes = 0;
    int hidden_units = 0; // 0 = linear softmax

    bool operator==(const ModelShape&) const = default;

    // weight layout: hidden ? [W1 h*d | b1 h | W2 c*h | b2 c] : [W c*d | b c]
    std::size_t parameter_count() const {
        if (hidden_units > 0)
            return static_cast<std::size_t>(hidden_units) * input_dim + hidden_units +
                   static_cast<std::size_t>(num_classes) * hidden_units + num_classes;
        return static_cast<std::size_t>(num_classes) * input_dim + num_classes;
    }
};

struct ModelParams {
    ModelShape shape;
    std::vector<double> weights;

    bool operator==(const ModelParams&) const = default;
};

ModelParams zero_params(const ModelShape& shape);

// Class scores for one input; tanh hidden layer when configured.
std::vector<double> forward_logits(const ModelParams& params, const std::vector<double>& x);

int predict_label(const ModelParams& params, const std::vector<double>& x);

double evaluate_accuracy(const ModelParams& params, const std::vector<Record>& records);

// Mean cross-entropy over the batch; writes the analytic gradient (same
// layout as params.weights) into `grad`.
double loss_and_gradient(const ModelParams& params, const std::vector<Record>& batch,
                         std::vector<double>& grad);

struct LocalTrainResult {
    ModelParams params;
    double local_accuracy = 0.0;
    int sample_count = 0;
};

// Deterministic mini-batch SGD from the given global weights: seeded 80/20
// train/test shuffle split, `local_epochs` passes, accuracy on the held-out
// slice. Zero epochs return the global weights untouched. `mutate_train`,
// when set, is applied to the training slice after the split (the held-out
// slice keeps its true labels).
using TrainSliceMutation = std::function<void(std::vector<Record>&)>;
LocalTrainResult local_train(const ClientDataset& dataset, const ModelParams& global,
                             const FlHyperParams& hyper, std::uint64_t seed,
                             const TrainSliceMutation& mutate_train = {});

// FedAvg: coordinatewise mean weighted by sample counts.
ModelParams aggregate_fedavg(const std::vector<std::pair<ModelParams, long>>& updates);

} // namespace trustfed
