// Copyright (C) 2026 The finclass Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "finclass/tensor.hpp"

namespace finclass::nn {

/// `same` pads symmetrically; when the total padding is odd the extra pixel
/// goes to the bottom/right edge.
enum class Padding { same, valid };

struct Conv2DSpec {
    std::size_t kernel_h = 1;
    std::size_t kernel_w = 1;
    std::size_t stride = 1;
    Padding padding = Padding::same;
    std::size_t in_channels = 1;
    std::size_t out_channels = 1;
    Tensor weights;  // [kernel_h, kernel_w, in_channels, out_channels]
    std::optional<Tensor> bias;  // [out_channels]

    void validate() const;
};

struct DepthwiseSpec {
    std::size_t kernel_h = 3;
    std::size_t kernel_w = 3;
    std::size_t stride = 1;
    Padding padding = Padding::same;
    std::size_t channels = 1;
    Tensor weights;  // [kernel_h, kernel_w, channels]
    std::optional<Tensor> bias;  // [channels]

    void validate() const;
};

struct BatchNormParams {
    Tensor gamma;
    Tensor beta;
    Tensor mean;
    Tensor variance;
    float epsilon = 1e-3f;

    std::size_t channels() const { return gamma.size(); }
    void validate() const;
};

/// Output extent of one spatial axis (ceil(in/stride) for `same`).
std::size_t conv_output_extent(std::size_t in, std::size_t kernel, std::size_t stride, Padding padding);

Tensor conv2d(const Tensor& input, const Conv2DSpec& spec);

Tensor depthwise_conv2d(const Tensor& input, const DepthwiseSpec& spec);
Tensor depthwise_conv2d(const Tensor& input, const Tensor& kernel, std::size_t stride, Padding padding);

Tensor relu(const Tensor& x);
Tensor relu6(const Tensor& x);

/// Normalization applied after `conv`, y = gamma * (x - mean) / sqrt(var + eps) + beta.
Tensor batchnorm(const Tensor& x, const BatchNormParams& bn);

Conv2DSpec batchnorm_fold(const Conv2DSpec& conv, const BatchNormParams& bn);
DepthwiseSpec batchnorm_fold(const DepthwiseSpec& conv, const BatchNormParams& bn);

Tensor global_avg_pool(const Tensor& input);

/// weights * input + bias for weights [m x n].
Tensor dense(const Tensor& input, const Tensor& weights, const Tensor& bias);

Tensor softmax(const Tensor& z);

std::size_t argmax(std::span<const float> values);

Tensor one_hot(std::size_t label, std::size_t classes);

/// Probabilities are clamped to [kProbabilityFloor, 1] before the log.
inline constexpr float kProbabilityFloor = 1e-7f;

float categorical_cross_entropy(const Tensor& y, const Tensor& p);

/// Fraction of samples whose argmax equals the label and whose top
/// probability is at least `confidence_floor`.
double accuracy(std::span<const std::size_t> labels, std::span<const Tensor> predictions,
                double confidence_floor = 0.0);

double mean_loss(std::span<const std::size_t> labels, std::span<const Tensor> predictions);

}  // namespace finclass::nn
