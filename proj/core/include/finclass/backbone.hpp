// Copyright (C) 2026 The finclass Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "finclass/nn_ops.hpp"
#include "finclass/tensor.hpp"
#include "finclass/weights.hpp"

namespace finclass {

enum class Activation { none, relu, relu6 };

/// Inverted residual block: 1x1 expansion (skipped when expansion == 1),
/// 3x3 depthwise, linear 1x1 projection, optional identity skip.
struct BottleneckSpec {
    std::size_t expansion = 1;
    std::size_t out_channels = 1;
    std::size_t stride = 1;
    bool use_residual = false;

    friend bool operator==(const BottleneckSpec&, const BottleneckSpec&) = default;
};

struct ConvLayer {
    std::string name;
    std::size_t kernel = 1;
    std::size_t stride = 1;
    std::size_t in_channels = 1;
    std::size_t out_channels = 1;
    Activation activation = Activation::relu6;

    friend bool operator==(const ConvLayer&, const ConvLayer&) = default;
};

struct BottleneckLayer {
    std::string name;
    std::size_t in_channels = 1;
    BottleneckSpec spec;

    std::size_t hidden_channels() const noexcept { return in_channels * spec.expansion; }

    friend bool operator==(const BottleneckLayer&, const BottleneckLayer&) = default;
};

struct PoolLayer {
    friend bool operator==(const PoolLayer&, const PoolLayer&) = default;
};

struct DenseLayer {
    std::string name;
    std::size_t in_features = 1;
    std::size_t out_features = 1;
    Activation activation = Activation::none;

    friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

struct SoftmaxLayer {
    friend bool operator==(const SoftmaxLayer&, const SoftmaxLayer&) = default;
};

using Layer = std::variant<ConvLayer, BottleneckLayer, PoolLayer, DenseLayer, SoftmaxLayer>;

struct ParameterRef {
    std::string name;
    Shape shape;
};

/// Ordered layer list plus input shape and class table. Parameters are named
/// `<layer>.weights` / `<layer>.bias`, and bottlenecks use
/// `<block>.{expand,depthwise,project}.{weights,bias}`.
struct ModelGraph {
    Shape input_shape;
    std::vector<Layer> layers;
    std::vector<std::string> class_names;

    /// Output shape after each layer; throws DimensionError if shapes do not chain.
    std::vector<Shape> layer_output_shapes() const;
    Shape output_shape() const;

    /// Every parameter the graph reads, in its folded (inference) form.
    std::vector<ParameterRef> parameters() const;

    /// Checks residual flags and shape chaining.
    void validate() const;
    /// validate() plus: exactly one softmax, as the final layer, and a class
    /// table whose length equals the output width.
    void validate_classifier() const;

    std::size_t bottleneck_count() const;
    /// Index one past the global pooling layer: the frozen feature extractor.
    std::size_t feature_layer_end() const;
    std::size_t feature_width() const;

    friend bool operator==(const ModelGraph&, const ModelGraph&) = default;
};

/// One row of the inverted-residual table: expansion t, channels c, repeats n, first stride s.
struct BottleneckStage {
    std::size_t expansion;
    std::size_t channels;
    std::size_t repeats;
    std::size_t stride;
};

inline constexpr BottleneckStage kBackboneStages[] = {
    {1, 16, 1, 1}, {6, 24, 2, 2}, {6, 32, 3, 2}, {6, 64, 4, 2}, {6, 96, 3, 1}, {6, 160, 3, 2}, {6, 320, 1, 1},
};
inline constexpr std::size_t kBackboneInputSize = 224;
inline constexpr std::size_t kStemChannels = 32;
inline constexpr std::size_t kFeatureChannels = 1280;

/// 3x3/2 stem conv (32 filters), 17 inverted-residual blocks, 1x1 conv to
/// 1280 channels, all relu6, then global average pooling. Input 224x224x3.
ModelGraph build_backbone();

/// stem + bottleneck blocks + final pointwise conv; 19 for build_backbone().
std::size_t feature_stage_count(const ModelGraph& graph);

/// Resolves every convolution of `graph` against `raw`, folding any
/// `<conv>.bn.{gamma,beta,mean,variance[,epsilon]}` entries into the weights,
/// and returns a store holding exactly graph.parameters().
WeightStore attach_weights(const ModelGraph& graph, const WeightStore& raw);

/// Throws WeightError for the first missing or mis-shaped parameter.
void check_weights(const ModelGraph& graph, const WeightStore& folded);

/// Block transform plus (when use_residual) the identity skip.
Tensor bottleneck_forward(const Tensor& input, const BottleneckLayer& layer, const WeightStore& folded);

Tensor run_layer(const Tensor& input, const Layer& layer, const WeightStore& folded);

/// Forward pass over the feature layers of `graph` (through global pooling).
/// `folded` must come from attach_weights.
Tensor extract_features(const ModelGraph& graph, const WeightStore& folded, const Tensor& image);

/// Features for inputs 0..count-1, where `input_at(i)` produces the i-th
/// preprocessed image. Fans out across `threads` workers (0 = hardware
/// concurrency); results are always in index order.
std::vector<Tensor> extract_features_batch(const ModelGraph& graph, const WeightStore& folded, std::size_t count,
                                           const std::function<Tensor(std::size_t)>& input_at,
                                           unsigned threads = 0);

}  // namespace finclass
