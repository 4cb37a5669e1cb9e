// Copyright (C) 2026 The finclass Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "finclass/backbone.hpp"
#include "finclass/tensor.hpp"
#include "finclass/weights.hpp"

namespace finclass {

inline constexpr std::size_t kDefaultHiddenWidth = 128;

/// Two dense layers: features -> relu(hidden) -> logits, followed by softmax.
struct HeadParams {
    Tensor w1;  // [hidden x features]
    Tensor b1;  // [hidden]
    Tensor w2;  // [classes x hidden]
    Tensor b2;  // [classes]

    std::size_t features() const { return w1.dim(1); }
    std::size_t hidden() const { return w1.dim(0); }
    std::size_t classes() const { return w2.dim(0); }

    /// Throws DimensionError unless shapes chain features -> hidden -> classes.
    void validate() const;

    /// Glorot-uniform weights, zero biases.
    static HeadParams glorot(std::size_t features, std::size_t hidden, std::size_t classes, std::uint64_t seed);
    static HeadParams zeros(std::size_t features, std::size_t hidden, std::size_t classes);

    friend bool operator==(const HeadParams&, const HeadParams&) = default;
};

/// Gradient set; same shapes as HeadParams.
using HeadGradients = HeadParams;

inline constexpr const char* kHeadHiddenLayer = "head.dense1";
inline constexpr const char* kHeadOutputLayer = "head.dense2";

/// Appends dense(relu) -> dense -> softmax layers and the class table.
ModelGraph append_classifier(const ModelGraph& backbone, std::size_t hidden, std::vector<std::string> class_names);

void store_head(const HeadParams& head, WeightStore& store);
/// Reads the head.* parameters; throws WeightError if any is missing.
HeadParams load_head(const WeightStore& store);

Tensor head_logits(const HeadParams& params, const Tensor& features);
/// softmax(W2 * relu(W1 * f + b1) + b2)
Tensor head_forward(const HeadParams& params, const Tensor& features);

struct GradientResult {
    HeadGradients gradients;
    double loss = 0.0;  // mean categorical cross-entropy over the batch
};

/// Analytic gradient of the mean categorical cross-entropy. `features` is
/// [batch x F], `labels` is one-hot [batch x K].
GradientResult head_gradients(const HeadParams& params, const Tensor& features, const Tensor& labels);

struct AdamConfig {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-7;
};

struct AdamState {
    HeadParams m;
    HeadParams v;
    std::uint64_t step = 0;

    static AdamState zeros_like(const HeadParams& params);
};

/// One bias-corrected Adam update applied in place.
void adam_step(HeadParams& params, const HeadGradients& gradients, AdamState& state, const AdamConfig& config);

}  // namespace finclass
