// Copyright (C) 2026 The finclass Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "finclass/backbone.hpp"
#include "finclass/dataset.hpp"
#include "finclass/head.hpp"

namespace finclass {

struct TrainConfig {
    std::size_t batch_size = 32;
    std::size_t max_epochs = 50;
    std::size_t early_stop_patience = 0;
    std::size_t hidden_width = kDefaultHiddenWidth;
    AdamConfig adam;
    double validation_split = 0.2;
    std::uint64_t rng_seed = 20230401;
    /// Worker threads for feature extraction (0 = hardware concurrency).
    unsigned feature_threads = 0;

    void validate() const;
    /// Flat key=value rendering, used for the bundle's config hash.
    std::string to_key_values() const;
    /// 64-bit FNV-1a of to_key_values(), as 16 hex digits.
    std::string hash() const;
};

struct EpochMetrics {
    std::size_t epoch = 0;  // 1-based
    double train_accuracy = 0.0;
    double train_loss = 0.0;
    double val_accuracy = 0.0;
    double val_loss = 0.0;
    double wall_time_s = 0.0;
};

struct TrainReport {
    std::vector<EpochMetrics> epochs;
    std::size_t stopped_epoch = 0;
    std::size_t best_epoch = 0;

    const EpochMetrics& best() const;

    /// Aligned human-readable table, one line per epoch. Wall times are left
    /// out of both renderings so seeded runs produce identical files.
    std::string to_text_table() const;
    /// JSON Lines: one object per epoch, then a summary object.
    std::string to_jsonl() const;
};

/// Stops once the monitored value has failed to improve on its running
/// minimum for more than `patience` consecutive epochs.
class EarlyStopping {
public:
    explicit EarlyStopping(std::size_t patience) : patience_(patience) {}

    /// Feeds the value for the next epoch; returns true when training must stop.
    bool update(double value);

    std::size_t best_epoch() const noexcept { return best_epoch_; }
    double best_value() const noexcept { return best_; }
    std::size_t epochs_seen() const noexcept { return epoch_; }

private:
    std::size_t patience_;
    std::size_t epoch_ = 0;
    std::size_t best_epoch_ = 0;
    std::size_t since_best_ = 0;
    double best_ = std::numeric_limits<double>::infinity();
};

/// Epoch at which training stops for a given monitored sequence (1-based);
/// the sequence length when the rule never fires.
std::size_t stopping_epoch(const std::vector<double>& values, std::size_t patience);

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
};

/// Per class, a seeded shuffle moves round(n * ratio) samples (at least one,
/// at most n - 1) to validation. Throws DatasetError for a class with fewer
/// than two samples.
Split stratified_split(const std::vector<std::size_t>& labels, std::size_t classes, double ratio, std::uint64_t seed);

struct FeatureSet {
    std::vector<Tensor> features;
    std::vector<std::size_t> labels;
    std::size_t classes = 0;
};

struct TrainHooks {
    /// Called after each epoch with its metrics and the parameters it produced.
    std::function<void(const EpochMetrics&, const HeadParams&)> on_epoch;
    /// Maps the measured validation loss to the value early stopping watches.
    std::function<double(std::size_t epoch, double val_loss)> monitor;
};

struct TrainResult {
    HeadParams head;
    TrainReport report;
};

/// Head training on precomputed backbone features; returns the parameters of
/// the epoch with the lowest monitored validation loss.
TrainResult train_on_features(const FeatureSet& data, const TrainConfig& config, const TrainHooks& hooks = {});

FeatureSet compute_features(const ModelGraph& backbone, const WeightStore& folded, const LabeledDataset& dataset,
                            unsigned threads = 0);

/// Extracts features once through the frozen backbone, then trains the head.
TrainResult train(const ModelGraph& backbone, const WeightStore& folded, const LabeledDataset& dataset,
                  const TrainConfig& config, const TrainHooks& hooks = {});

struct Evaluation {
    double accuracy = 0.0;
    double loss = 0.0;
};

Evaluation evaluate_features(const HeadParams& head, const std::vector<Tensor>& features,
                             const std::vector<std::size_t>& labels, double confidence_floor = 0.0);

Evaluation evaluate(const ModelGraph& backbone, const WeightStore& folded, const HeadParams& head,
                    const LabeledDataset& dataset, double confidence_floor = 0.0);

}  // namespace finclass
