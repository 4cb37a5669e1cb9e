// Copyright (C) 2026 The finclass Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "finclass/backbone.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "finclass/error.hpp"

namespace finclass {
namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

Shape conv_shape(const Shape& in, std::size_t kernel, std::size_t stride, std::size_t in_ch, std::size_t out_ch,
                 const std::string& name) {
    if (in.size() != 3 || in[2] != in_ch) {
        throw DimensionError("layer '" + name + "' expects " + std::to_string(in_ch) + " input channels, got " +
                             shape_to_string(in));
    }
    return {nn::conv_output_extent(in[0], kernel, stride, nn::Padding::same),
            nn::conv_output_extent(in[1], kernel, stride, nn::Padding::same), out_ch};
}

Shape next_shape(const Shape& in, const Layer& layer) {
    return std::visit(
        overloaded{
            [&](const ConvLayer& l) { return conv_shape(in, l.kernel, l.stride, l.in_channels, l.out_channels, l.name); },
            [&](const BottleneckLayer& l) {
                return conv_shape(in, 3, l.spec.stride, l.in_channels, l.spec.out_channels, l.name);
            },
            [&](const PoolLayer&) {
                if (in.size() != 3) throw DimensionError("pooling expects a feature map, got " + shape_to_string(in));
                return Shape{in[2]};
            },
            [&](const DenseLayer& l) {
                if (in.size() != 1 || in[0] != l.in_features) {
                    throw DimensionError("dense layer '" + l.name + "' expects (" + std::to_string(l.in_features) +
                                         ",), got " + shape_to_string(in));
                }
                return Shape{l.out_features};
            },
            [&](const SoftmaxLayer&) {
                if (in.size() != 1) throw DimensionError("softmax expects a vector, got " + shape_to_string(in));
                return in;
            },
        },
        layer);
}

Tensor activate(Tensor t, Activation a) {
    switch (a) {
        case Activation::none: return t;
        case Activation::relu: return nn::relu(t);
        case Activation::relu6: return nn::relu6(t);
    }
    return t;
}

nn::Conv2DSpec pointwise_spec(const WeightStore& w, const std::string& prefix, std::size_t kernel, std::size_t stride,
                              std::size_t in_ch, std::size_t out_ch) {
    nn::Conv2DSpec spec;
    spec.kernel_h = spec.kernel_w = kernel;
    spec.stride = stride;
    spec.padding = nn::Padding::same;
    spec.in_channels = in_ch;
    spec.out_channels = out_ch;
    spec.weights = w.get(prefix + ".weights", {kernel, kernel, in_ch, out_ch});
    spec.bias = w.get(prefix + ".bias", {out_ch});
    return spec;
}

nn::DepthwiseSpec depthwise_spec(const WeightStore& w, const std::string& prefix, std::size_t stride,
                                 std::size_t channels) {
    nn::DepthwiseSpec spec;
    spec.kernel_h = spec.kernel_w = 3;
    spec.stride = stride;
    spec.padding = nn::Padding::same;
    spec.channels = channels;
    spec.weights = w.get(prefix + ".weights", {3, 3, channels});
    spec.bias = w.get(prefix + ".bias", {channels});
    return spec;
}

std::optional<nn::BatchNormParams> find_batchnorm(const WeightStore& raw, const std::string& prefix,
                                                  std::size_t channels) {
    const std::string bn = prefix + ".bn.";
    if (!raw.contains(bn + "gamma")) return std::nullopt;
    nn::BatchNormParams params;
    params.gamma = raw.get(bn + "gamma", {channels});
    params.beta = raw.get(bn + "beta", {channels});
    params.mean = raw.get(bn + "mean", {channels});
    params.variance = raw.get(bn + "variance", {channels});
    if (raw.contains(bn + "epsilon")) params.epsilon = raw.get(bn + "epsilon", {1})[0];
    return params;
}

Tensor bias_or_zero(const WeightStore& raw, const std::string& prefix, std::size_t channels) {
    if (raw.contains(prefix + ".bias")) return raw.get(prefix + ".bias", {channels});
    return Tensor({channels});
}

void attach_conv(const WeightStore& raw, WeightStore& out, const std::string& prefix, std::size_t kernel,
                 std::size_t in_ch, std::size_t out_ch) {
    nn::Conv2DSpec spec;
    spec.kernel_h = spec.kernel_w = kernel;
    spec.in_channels = in_ch;
    spec.out_channels = out_ch;
    spec.weights = raw.get(prefix + ".weights", {kernel, kernel, in_ch, out_ch});
    spec.bias = bias_or_zero(raw, prefix, out_ch);
    if (auto bn = find_batchnorm(raw, prefix, out_ch)) spec = nn::batchnorm_fold(spec, *bn);
    out.set(prefix + ".weights", std::move(spec.weights));
    out.set(prefix + ".bias", std::move(*spec.bias));
}

void attach_depthwise(const WeightStore& raw, WeightStore& out, const std::string& prefix, std::size_t channels) {
    nn::DepthwiseSpec spec;
    spec.channels = channels;
    spec.weights = raw.get(prefix + ".weights", {3, 3, channels});
    spec.bias = bias_or_zero(raw, prefix, channels);
    if (auto bn = find_batchnorm(raw, prefix, channels)) spec = nn::batchnorm_fold(spec, *bn);
    out.set(prefix + ".weights", std::move(spec.weights));
    out.set(prefix + ".bias", std::move(*spec.bias));
}

}  // namespace

std::vector<Shape> ModelGraph::layer_output_shapes() const {
    if (input_shape.empty()) throw DimensionError("graph has no input shape");
    std::vector<Shape> shapes;
    shapes.reserve(layers.size());
    Shape current = input_shape;
    for (const auto& layer : layers) {
        current = next_shape(current, layer);
        shapes.push_back(current);
    }
    return shapes;
}

Shape ModelGraph::output_shape() const {
    auto shapes = layer_output_shapes();
    return shapes.empty() ? input_shape : shapes.back();
}

std::vector<ParameterRef> ModelGraph::parameters() const {
    std::vector<ParameterRef> refs;
    for (const auto& layer : layers) {
        std::visit(overloaded{
                       [&](const ConvLayer& l) {
                           refs.push_back({l.name + ".weights", {l.kernel, l.kernel, l.in_channels, l.out_channels}});
                           refs.push_back({l.name + ".bias", {l.out_channels}});
                       },
                       [&](const BottleneckLayer& l) {
                           const std::size_t hidden = l.hidden_channels();
                           if (l.spec.expansion != 1) {
                               refs.push_back({l.name + ".expand.weights", {1, 1, l.in_channels, hidden}});
                               refs.push_back({l.name + ".expand.bias", {hidden}});
                           }
                           refs.push_back({l.name + ".depthwise.weights", {3, 3, hidden}});
                           refs.push_back({l.name + ".depthwise.bias", {hidden}});
                           refs.push_back({l.name + ".project.weights", {1, 1, hidden, l.spec.out_channels}});
                           refs.push_back({l.name + ".project.bias", {l.spec.out_channels}});
                       },
                       [&](const DenseLayer& l) {
                           refs.push_back({l.name + ".weights", {l.out_features, l.in_features}});
                           refs.push_back({l.name + ".bias", {l.out_features}});
                       },
                       [](const auto&) {},
                   },
                   layer);
    }
    return refs;
}

void ModelGraph::validate() const {
    for (const auto& layer : layers) {
        if (const auto* b = std::get_if<BottleneckLayer>(&layer)) {
            if (b->spec.expansion == 0 || b->spec.out_channels == 0) {
                throw ValidationError("bottleneck '" + b->name + "' has zero expansion or width");
            }
            if (b->spec.stride != 1 && b->spec.stride != 2) {
                throw ValidationError("bottleneck '" + b->name + "' stride must be 1 or 2");
            }
            if (b->spec.use_residual && (b->spec.stride != 1 || b->in_channels != b->spec.out_channels)) {
                throw ValidationError("bottleneck '" + b->name + "' cannot use a residual when shapes change");
            }
        }
    }
    (void)layer_output_shapes();
}

void ModelGraph::validate_classifier() const {
    validate();
    const auto softmaxes = std::count_if(layers.begin(), layers.end(),
                                         [](const Layer& l) { return std::holds_alternative<SoftmaxLayer>(l); });
    if (softmaxes != 1 || !std::holds_alternative<SoftmaxLayer>(layers.back())) {
        throw ValidationError("classifier graph must end in exactly one softmax layer");
    }
    const Shape out = output_shape();
    if (class_names.size() != out[0]) {
        throw ValidationError("class table has " + std::to_string(class_names.size()) + " names but the output has " +
                              std::to_string(out[0]) + " classes");
    }
}

std::size_t ModelGraph::bottleneck_count() const {
    return static_cast<std::size_t>(std::count_if(
        layers.begin(), layers.end(), [](const Layer& l) { return std::holds_alternative<BottleneckLayer>(l); }));
}

std::size_t ModelGraph::feature_layer_end() const {
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (std::holds_alternative<PoolLayer>(layers[i])) return i + 1;
    }
    throw ValidationError("graph has no global pooling layer");
}

std::size_t ModelGraph::feature_width() const {
    const auto shapes = layer_output_shapes();
    return shapes[feature_layer_end() - 1][0];
}

ModelGraph build_backbone() {
    ModelGraph g;
    g.input_shape = {kBackboneInputSize, kBackboneInputSize, 3};
    g.layers.emplace_back(ConvLayer{"stem", 3, 2, 3, kStemChannels, Activation::relu6});
    std::size_t channels = kStemChannels;
    std::size_t index = 1;
    for (const auto& stage : kBackboneStages) {
        for (std::size_t r = 0; r < stage.repeats; ++r) {
            const std::size_t stride = r == 0 ? stage.stride : 1;
            BottleneckSpec spec{stage.expansion, stage.channels, stride, stride == 1 && channels == stage.channels};
            g.layers.emplace_back(BottleneckLayer{"block_" + std::to_string(index++), channels, spec});
            channels = stage.channels;
        }
    }
    g.layers.emplace_back(ConvLayer{"last_conv", 1, 1, channels, kFeatureChannels, Activation::relu6});
    g.layers.emplace_back(PoolLayer{});
    g.validate();
    return g;
}

std::size_t feature_stage_count(const ModelGraph& graph) {
    std::size_t n = 0;
    const std::size_t end = graph.feature_layer_end();
    for (std::size_t i = 0; i < end; ++i) {
        const auto& l = graph.layers[i];
        if (std::holds_alternative<ConvLayer>(l) || std::holds_alternative<BottleneckLayer>(l)) ++n;
    }
    return n;
}

WeightStore attach_weights(const ModelGraph& graph, const WeightStore& raw) {
    graph.validate();
    WeightStore out;
    for (const auto& layer : graph.layers) {
        std::visit(overloaded{
                       [&](const ConvLayer& l) {
                           attach_conv(raw, out, l.name, l.kernel, l.in_channels, l.out_channels);
                       },
                       [&](const BottleneckLayer& l) {
                           const std::size_t hidden = l.hidden_channels();
                           if (l.spec.expansion != 1) attach_conv(raw, out, l.name + ".expand", 1, l.in_channels, hidden);
                           attach_depthwise(raw, out, l.name + ".depthwise", hidden);
                           attach_conv(raw, out, l.name + ".project", 1, hidden, l.spec.out_channels);
                       },
                       [&](const DenseLayer& l) {
                           out.set(l.name + ".weights", raw.get(l.name + ".weights", {l.out_features, l.in_features}));
                           out.set(l.name + ".bias", raw.get(l.name + ".bias", {l.out_features}));
                       },
                       [](const auto&) {},
                   },
                   layer);
    }
    return out;
}

void check_weights(const ModelGraph& graph, const WeightStore& folded) {
    for (const auto& ref : graph.parameters()) (void)folded.get(ref.name, ref.shape);
}

Tensor bottleneck_forward(const Tensor& input, const BottleneckLayer& layer, const WeightStore& folded) {
    const std::size_t hidden = layer.hidden_channels();
    Tensor x = input;
    if (layer.spec.expansion != 1) {
        x = nn::relu6(nn::conv2d(x, pointwise_spec(folded, layer.name + ".expand", 1, 1, layer.in_channels, hidden)));
    }
    x = nn::relu6(nn::depthwise_conv2d(x, depthwise_spec(folded, layer.name + ".depthwise", layer.spec.stride, hidden)));
    x = nn::conv2d(x, pointwise_spec(folded, layer.name + ".project", 1, 1, hidden, layer.spec.out_channels));
    if (layer.spec.use_residual) x = add(x, input);
    return x;
}

Tensor run_layer(const Tensor& input, const Layer& layer, const WeightStore& folded) {
    return std::visit(
        overloaded{
            [&](const ConvLayer& l) {
                return activate(nn::conv2d(input, pointwise_spec(folded, l.name, l.kernel, l.stride, l.in_channels,
                                                                 l.out_channels)),
                                l.activation);
            },
            [&](const BottleneckLayer& l) { return bottleneck_forward(input, l, folded); },
            [&](const PoolLayer&) { return nn::global_avg_pool(input); },
            [&](const DenseLayer& l) {
                return activate(nn::dense(input, folded.get(l.name + ".weights", {l.out_features, l.in_features}),
                                          folded.get(l.name + ".bias", {l.out_features})),
                                l.activation);
            },
            [&](const SoftmaxLayer&) { return nn::softmax(input); },
        },
        layer);
}

Tensor extract_features(const ModelGraph& graph, const WeightStore& folded, const Tensor& image) {
    if (image.shape() != graph.input_shape) {
        throw DimensionError("backbone expects input " + shape_to_string(graph.input_shape) + ", got " +
                             shape_to_string(image.shape()));
    }
    const std::size_t end = graph.feature_layer_end();
    Tensor x = image;
    for (std::size_t i = 0; i < end; ++i) x = run_layer(x, graph.layers[i], folded);
    return x;
}

std::vector<Tensor> extract_features_batch(const ModelGraph& graph, const WeightStore& folded, std::size_t count,
                                           const std::function<Tensor(std::size_t)>& input_at, unsigned threads) {
    std::vector<Tensor> out(count);
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                out[i] = extract_features(graph, folded, input_at(i));
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(count);
                return;
            }
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

}  // namespace finclass
