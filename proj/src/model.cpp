#include "trustfed/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace trustfed {

ModelParams zero_params(const ModelShape& shape) {
    return {shape, std::vector<double>(shape.parameter_count(), 0.0)};
}

namespace {

struct Layout {
    // offsets into the flat weight vector
    std::size_t w1 = 0, b1 = 0, w2 = 0, b2 = 0;
    int d = 0, h = 0, c = 0;
};

Layout layout_of(const ModelShape& s) {
    Layout l;
    l.d = s.input_dim;
    l.h = s.hidden_units;
    l.c = s.num_classes;
    if (l.h > 0) {
        l.w1 = 0;
        l.b1 = static_cast<std::size_t>(l.h) * l.d;
        l.w2 = l.b1 + l.h;
        l.b2 = l.w2 + static_cast<std::size_t>(l.c) * l.h;
    } else {
        l.w1 = 0;                                      // W c*d
        l.b1 = static_cast<std::size_t>(l.c) * l.d;    // b c
    }
    return l;
}

void softmax_inplace(std::vector<double>& z) {
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double& v : z) {
        v = std::exp(v - zmax);
        sum += v;
    }
    for (double& v : z) v /= sum;
}

} // namespace

std::vector<double> forward_logits(const ModelParams& params, const std::vector<double>& x) {
    const Layout l = layout_of(params.shape);
    const std::vector<double>& w = params.weights;
    if (l.h > 0) {
        std::vector<double> hidden(l.h);
        for (int j = 0; j < l.h; ++j) {
            double s = w[l.b1 + j];
            const std::size_t row = l.w1 + static_cast<std::size_t>(j) * l.d;
            for (int i = 0; i < l.d; ++i) s += w[row + i] * x[i];
            hidden[j] = std::tanh(s);
        }
        std::vector<double> logits(l.c);
        for (int k = 0; k < l.c; ++k) {
            double s = w[l.b2 + k];
            const std::size_t row = l.w2 + static_cast<std::size_t>(k) * l.h;
            for (int j = 0; j < l.h; ++j) s += w[row + j] * hidden[j];
            logits[k] = s;
        }
        return logits;
    }
    std::vector<double> logits(l.c);
    for (int k = 0; k < l.c; ++k) {
        double s = w[l.b1 + k];
        const std::size_t row = static_cast<std::size_t>(k) * l.d;
        for (int i = 0; i < l.d; ++i) s += w[row + i] * x[i];
        logits[k] = s;
    }
    return logits;
}

int predict_label(const ModelParams& params, const std::vector<double>& x) {
    const std::vector<double> logits = forward_logits(params, x);
    return static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

double evaluate_accuracy(const ModelParams& params, const std::vector<Record>& records) {
    if (records.empty()) return 0.0;
    long correct = 0;
    for (const auto& r : records)
        if (predict_label(params, r.features) == r.label) ++correct;
    return static_cast<double>(correct) / static_cast<double>(records.size());
}

double loss_and_gradient(const ModelParams& params, const std::vector<Record>& batch,
                         std::vector<double>& grad) {
    const Layout l = layout_of(params.shape);
    const std::vector<double>& w = params.weights;
    grad.assign(w.size(), 0.0);
    if (batch.empty()) return 0.0;

    double loss = 0.0;
    std::vector<double> hidden(std::max(l.h, 0));
    for (const auto& rec : batch) {
        const std::vector<double>& x = rec.features;
        std::vector<double> probs;
        if (l.h > 0) {
            for (int j = 0; j < l.h; ++j) {
                double s = w[l.b1 + j];
                const std::size_t row = l.w1 + static_cast<std::size_t>(j) * l.d;
                for (int i = 0; i < l.d; ++i) s += w[row + i] * x[i];
                hidden[j] = std::tanh(s);
            }
            probs.resize(l.c);
            for (int k = 0; k < l.c; ++k) {
                double s = w[l.b2 + k];
                const std::size_t row = l.w2 + static_cast<std::size_t>(k) * l.h;
                for (int j = 0; j < l.h; ++j) s += w[row + j] * hidden[j];
                probs[k] = s;
            }
        } else {
            probs = forward_logits(params, x);
        }
        softmax_inplace(probs);
        loss += -std::log(std::max(probs[rec.label], 1e-300));

        // dL/dlogit_k = p_k - [k == y]
        if (l.h > 0) {
            std::vector<double> dhidden(l.h, 0.0);
            for (int k = 0; k < l.c; ++k) {
                const double delta = probs[k] - (k == rec.label ? 1.0 : 0.0);
                const std::size_t row = l.w2 + static_cast<std::size_t>(k) * l.h;
                for (int j = 0; j < l.h; ++j) {
                    grad[row + j] += delta * hidden[j];
                    dhidden[j] += delta * w[row + j];
                }
                grad[l.b2 + k] += delta;
            }
            for (int j = 0; j < l.h; ++j) {
                const double dpre = dhidden[j] * (1.0 - hidden[j] * hidden[j]);
                const std::size_t row = l.w1 + static_cast<std::size_t>(j) * l.d;
                for (int i = 0; i < l.d; ++i) grad[row + i] += dpre * x[i];
                grad[l.b1 + j] += dpre;
            }
        } else {
            for (int k = 0; k < l.c; ++k) {
                const double delta = probs[k] - (k == rec.label ? 1.0 : 0.0);
                const std::size_t row = static_cast<std::size_t>(k) * l.d;
                for (int i = 0; i < l.d; ++i) grad[row + i] += delta * x[i];
                grad[l.b1 + k] += delta;
            }
        }
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (double& g : grad) g *= inv;
    return loss * inv;
}

LocalTrainResult local_train(const ClientDataset& dataset, const ModelParams& global,
                             const FlHyperParams& hyper, std::uint64_t seed,
                             const TrainSliceMutation& mutate_train) {
    if (dataset.records.empty()) throw Error("empty-dataset", "client " + dataset.owner);

    const std::size_t n = dataset.records.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    SeedStream split_rng = SeedStream::derive({seed, SeedStream::hash_part("split")});
    for (std::size_t i = n - 1; i > 0; --i)
        std::swap(order[i], order[split_rng.uniform_int(i + 1)]);

    const std::size_t test_count = n >= 2 ? std::max<std::size_t>(1, n / 5) : 0;
    const std::size_t train_count = n - test_count;
    std::vector<Record> train, test;
    train.reserve(train_count);
    test.reserve(test_count);
    for (std::size_t i = 0; i < train_count; ++i) train.push_back(dataset.records[order[i]]);
    for (std::size_t i = train_count; i < n; ++i) test.push_back(dataset.records[order[i]]);
    if (mutate_train) mutate_train(train);

    LocalTrainResult result;
    result.params = global;
    result.sample_count = static_cast<int>(train_count);

    std::vector<std::size_t> idx(train.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<double> grad;
    std::vector<Record> batch;
    for (int epoch = 0; epoch < hyper.local_epochs; ++epoch) {
        SeedStream epoch_rng = SeedStream::derive(
            {seed, SeedStream::hash_part("epoch"), static_cast<std::uint64_t>(epoch)});
        for (std::size_t i = idx.size(); i > 1; --i)
            std::swap(idx[i - 1], idx[epoch_rng.uniform_int(i)]);
        for (std::size_t start = 0; start < idx.size();
             start += static_cast<std::size_t>(hyper.batch_size)) {
            const std::size_t end =
                std::min(idx.size(), start + static_cast<std::size_t>(hyper.batch_size));
            batch.clear();
            for (std::size_t i = start; i < end; ++i) batch.push_back(train[idx[i]]);
            loss_and_gradient(result.params, batch, grad);
            for (std::size_t i = 0; i < grad.size(); ++i)
                result.params.weights[i] -= hyper.learning_rate * grad[i];
        }
    }

    result.local_accuracy =
        evaluate_accuracy(result.params, test.empty() ? train : test);
    return result;
}

ModelParams aggregate_fedavg(const std::vector<std::pair<ModelParams, long>>& updates) {
    if (updates.empty()) throw Error("shape-mismatch", "no updates to aggregate");
    const ModelShape shape = updates.front().first.shape;
    double total = 0.0;
    for (const auto& [params, count] : updates) {
        if (params.shape != shape || params.weights.size() != updates.front().first.weights.size())
            throw Error("shape-mismatch", "inconsistent update shapes");
        total += static_cast<double>(count);
    }
    if (total <= 0.0) throw Error("shape-mismatch", "total sample count is zero");
    ModelParams out = zero_params(shape);
    for (const auto& [params, count] : updates) {
        const double w = static_cast<double>(count) / total;
        for (std::size_t i = 0; i < out.weights.size(); ++i)
            out.weights[i] += w * params.weights[i];
    }
    return out;
}

} // namespace trustfed
