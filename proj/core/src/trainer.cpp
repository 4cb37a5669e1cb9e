// Copyright (C) 2026 The finclass Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "finclass/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

#include "finclass/error.hpp"
#include "finclass/nn_ops.hpp"
#include "finclass/rng.hpp"

namespace finclass {
namespace {

std::vector<std::size_t> count_labels(const std::vector<std::size_t>& labels, std::size_t classes) {
    std::vector<std::size_t> counts(classes, 0);
    for (auto l : labels) {
        if (l >= classes) throw DatasetError("label " + std::to_string(l) + " out of range");
        ++counts[l];
    }
    return counts;
}

void gather_batch(const FeatureSet& data, std::span<const std::size_t> idx, Tensor& x, Tensor& y) {
    const std::size_t F = data.features.front().size(), K = data.classes;
    x = Tensor({idx.size(), F});
    y = Tensor({idx.size(), K});
    for (std::size_t r = 0; r < idx.size(); ++r) {
        const Tensor& f = data.features[idx[r]];
        std::copy(f.data().begin(), f.data().end(), x.data().begin() + static_cast<std::ptrdiff_t>(r * F));
        y[r * K + data.labels[idx[r]]] = 1.0f;
    }
}

bool params_finite(const HeadParams& p) { return all_finite(p.w1) && all_finite(p.b1) && all_finite(p.w2) && all_finite(p.b2); }

Evaluation evaluate_subset(const HeadParams& head, const FeatureSet& data, const std::vector<std::size_t>& idx) {
    std::vector<Tensor> feats;
    std::vector<std::size_t> labels;
    feats.reserve(idx.size());
    for (auto i : idx) {
        feats.push_back(data.features[i]);
        labels.push_back(data.labels[i]);
    }
    return evaluate_features(head, feats, labels);
}

}  // namespace

void TrainConfig::validate() const {
    if (!(validation_split > 0.0 && validation_split < 1.0)) throw ValidationError("validation_split must lie in (0, 1)");
    if (batch_size == 0) throw ValidationError("batch_size must be at least 1");
    if (max_epochs == 0) throw ValidationError("max_epochs must be at least 1");
    if (hidden_width == 0) throw ValidationError("hidden_width must be at least 1");
    if (!(adam.learning_rate > 0.0)) throw ValidationError("learning_rate must be positive");
}

std::string TrainConfig::to_key_values() const {
    std::ostringstream out;
    out.precision(17);
    out << "batch_size=" << batch_size << "\nmax_epochs=" << max_epochs << "\nearly_stop_patience="
        << early_stop_patience << "\nhidden_width=" << hidden_width << "\nlearning_rate=" << adam.learning_rate
        << "\nbeta1=" << adam.beta1 << "\nbeta2=" << adam.beta2 << "\nadam_epsilon=" << adam.epsilon
        << "\nvalidation_split=" << validation_split << "\nseed=" << rng_seed << "\n";
    return out.str();
}

std::string TrainConfig::hash() const {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : to_key_values()) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

const EpochMetrics& TrainReport::best() const {
    for (const auto& e : epochs) {
        if (e.epoch == best_epoch) return e;
    }
    throw ValidationError("report has no row for best epoch " + std::to_string(best_epoch));
}

std::string TrainReport::to_text_table() const {
    std::string out = "epoch  train_accuracy  train_loss  val_accuracy  val_loss\n";
    char line[160];
    for (const auto& e : epochs) {
        std::snprintf(line, sizeof(line), "%5zu  %14.4f  %10.6f  %12.4f  %8.6f\n", e.epoch, e.train_accuracy,
                      e.train_loss, e.val_accuracy, e.val_loss);
        out += line;
    }
    std::snprintf(line, sizeof(line), "stopped_epoch=%zu best_epoch=%zu\n", stopped_epoch, best_epoch);
    out += line;
    return out;
}

std::string TrainReport::to_jsonl() const {
    std::string out;
    for (const auto& e : epochs) {
        nlohmann::ordered_json j;
        j["epoch"] = e.epoch;
        j["train_accuracy"] = e.train_accuracy;
        j["train_loss"] = e.train_loss;
        j["val_accuracy"] = e.val_accuracy;
        j["val_loss"] = e.val_loss;
        out += j.dump() + "\n";
    }
    nlohmann::ordered_json summary;
    summary["stopped_epoch"] = stopped_epoch;
    summary["best_epoch"] = best_epoch;
    out += summary.dump() + "\n";
    return out;
}

bool EarlyStopping::update(double value) {
    ++epoch_;
    if (value < best_) {
        best_ = value;
        best_epoch_ = epoch_;
        since_best_ = 0;
        return false;
    }
    ++since_best_;
    return since_best_ > patience_;
}

std::size_t stopping_epoch(const std::vector<double>& values, std::size_t patience) {
    EarlyStopping rule(patience);
    for (double v : values) {
        if (rule.update(v)) return rule.epochs_seen();
    }
    return values.size();
}

Split stratified_split(const std::vector<std::size_t>& labels, std::size_t classes, double ratio, std::uint64_t seed) {
    const auto counts = count_labels(labels, classes);
    for (std::size_t c = 0; c < classes; ++c) {
        if (counts[c] < 2) {
            throw DatasetError("class " + std::to_string(c) + " has " + std::to_string(counts[c]) +
                               " samples; at least 2 are required");
        }
    }
    std::vector<std::vector<std::size_t>> by_class(classes);
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

    Rng rng(seed);
    Split split;
    for (auto& members : by_class) {
        rng.shuffle(std::span(members));
        const auto n = members.size();
        auto n_val = static_cast<std::size_t>(std::llround(static_cast<double>(n) * ratio));
        n_val = std::clamp<std::size_t>(n_val, 1, n - 1);
        split.validation.insert(split.validation.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_val));
        split.train.insert(split.train.end(), members.begin() + static_cast<std::ptrdiff_t>(n_val), members.end());
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.validation.begin(), split.validation.end());
    return split;
}

Evaluation evaluate_features(const HeadParams& head, const std::vector<Tensor>& features,
                             const std::vector<std::size_t>& labels, double confidence_floor) {
    if (features.empty()) throw ValidationError("cannot evaluate an empty dataset");
    if (features.size() != labels.size()) throw ValidationError("features and labels differ in length");
    std::vector<Tensor> probs;
    probs.reserve(features.size());
    for (const auto& f : features) probs.push_back(head_forward(head, f));
    return {nn::accuracy(labels, probs, confidence_floor), nn::mean_loss(labels, probs)};
}

TrainResult train_on_features(const FeatureSet& data, const TrainConfig& config, const TrainHooks& hooks) {
    config.validate();
    if (data.features.size() != data.labels.size() || data.features.empty()) {
        throw ValidationError("feature set is empty or misaligned");
    }
    const Split split = stratified_split(data.labels, data.classes, config.validation_split, config.rng_seed);
    const std::size_t F = data.features.front().size();

    HeadParams head = HeadParams::glorot(F, config.hidden_width, data.classes, config.rng_seed + 1);
    AdamState state = AdamState::zeros_like(head);
    Rng shuffler(config.rng_seed + 2);
    EarlyStopping stopper(config.early_stop_patience);

    TrainResult result{head, {}};
    std::vector<std::size_t> order = split.train;
    Tensor x, y;
    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        const auto started = std::chrono::steady_clock::now();
        shuffler.shuffle(std::span(order));
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_index) {
            const std::size_t len = std::min(config.batch_size, order.size() - start);
            gather_batch(data, std::span(order).subspan(start, len), x, y);
            const auto grad = head_gradients(head, x, y);
            if (!std::isfinite(grad.loss) || !params_finite(grad.gradients)) {
                throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                      std::to_string(batch_index + 1));
            }
            adam_step(head, grad.gradients, state, config.adam);
            if (!params_finite(head)) {
                throw DivergenceError("non-finite parameters at epoch " + std::to_string(epoch) + ", batch " +
                                      std::to_string(batch_index + 1));
            }
        }

        EpochMetrics row;
        row.epoch = epoch;
        const auto tr = evaluate_subset(head, data, split.train);
        const auto va = evaluate_subset(head, data, split.validation);
        if (!std::isfinite(tr.loss) || !std::isfinite(va.loss)) {
            throw DivergenceError("non-finite epoch loss at epoch " + std::to_string(epoch));
        }
        row.train_accuracy = tr.accuracy;
        row.train_loss = tr.loss;
        row.val_accuracy = va.accuracy;
        row.val_loss = va.loss;
        row.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        result.report.epochs.push_back(row);
        if (hooks.on_epoch) hooks.on_epoch(row, head);

        const double monitored = hooks.monitor ? hooks.monitor(epoch, va.loss) : va.loss;
        const bool stop = stopper.update(monitored);
        if (stopper.best_epoch() == epoch) result.head = head;
        if (stop) break;
    }
    result.report.stopped_epoch = result.report.epochs.size();
    result.report.best_epoch = stopper.best_epoch();
    return result;
}

FeatureSet compute_features(const ModelGraph& backbone, const WeightStore& folded, const LabeledDataset& dataset,
                            unsigned threads) {
    if (dataset.samples.empty()) throw ValidationError("dataset is empty");
    const std::size_t size = backbone.input_shape.at(0);
    FeatureSet out;
    out.classes = dataset.class_names.size();
    out.labels = dataset.labels();
    out.features = extract_features_batch(
        backbone, folded, dataset.samples.size(),
        [&](std::size_t i) { return prepare_input(dataset.samples[i].image(), size); }, threads);
    return out;
}

TrainResult train(const ModelGraph& backbone, const WeightStore& folded, const LabeledDataset& dataset,
                  const TrainConfig& config, const TrainHooks& hooks) {
    config.validate();
    const auto counts = dataset.class_counts();
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] < 2) {
            throw DatasetError("class '" + dataset.class_names[c] + "' has " + std::to_string(counts[c]) +
                               " samples; at least 2 are required");
        }
    }
    return train_on_features(compute_features(backbone, folded, dataset, config.feature_threads), config, hooks);
}

Evaluation evaluate(const ModelGraph& backbone, const WeightStore& folded, const HeadParams& head,
                    const LabeledDataset& dataset, double confidence_floor) {
    if (dataset.samples.empty()) throw ValidationError("cannot evaluate an empty dataset");
    const auto fs = compute_features(backbone, folded, dataset);
    return evaluate_features(head, fs.features, fs.labels, confidence_floor);
}

}  // namespace finclass
