// Copyright (C) 2026 The finclass Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "finclass/nn_ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "finclass/error.hpp"

namespace finclass::nn {
namespace {

void require_vector(const Tensor& t, std::size_t n, const char* what) {
    if (t.rank() != 1 || t.dim(0) != n) {
        throw DimensionError(std::string(what) + " must have shape (" + std::to_string(n) + ",), got " +
                             shape_to_string(t.shape()));
    }
}

struct AxisPlan {
    std::size_t out;
    std::size_t pad_before;
};

AxisPlan plan_axis(std::size_t in, std::size_t kernel, std::size_t stride, Padding padding) {
    const std::size_t out = conv_output_extent(in, kernel, stride, padding);
    if (padding == Padding::valid) return {out, 0};
    const std::size_t needed = (out - 1) * stride + kernel;
    const std::size_t total = needed > in ? needed - in : 0;
    return {out, total / 2};
}

void require_hwc(const Tensor& input, std::size_t channels, const char* op) {
    if (input.rank() != 3) {
        throw DimensionError(std::string(op) + " expects a (height, width, channels) input, got " +
                             shape_to_string(input.shape()));
    }
    if (input.dim(2) != channels) {
        throw DimensionError(std::string(op) + " channel mismatch: input " + shape_to_string(input.shape()) +
                             " vs " + std::to_string(channels) + " expected channels");
    }
}

}  // namespace

void Conv2DSpec::validate() const {
    if (kernel_h == 0 || kernel_w == 0 || stride == 0 || in_channels == 0 || out_channels == 0) {
        throw DimensionError("conv2d kernel, stride and channel counts must be positive");
    }
    const Shape expected{kernel_h, kernel_w, in_channels, out_channels};
    if (weights.shape() != expected) {
        throw DimensionError("conv2d weights shape " + shape_to_string(weights.shape()) + " does not match " +
                             shape_to_string(expected));
    }
    if (bias) require_vector(*bias, out_channels, "conv2d bias");
}

void DepthwiseSpec::validate() const {
    if (kernel_h == 0 || kernel_w == 0 || stride == 0 || channels == 0) {
        throw DimensionError("depthwise kernel, stride and channel counts must be positive");
    }
    const Shape expected{kernel_h, kernel_w, channels};
    if (weights.shape() != expected) {
        throw DimensionError("depthwise weights shape " + shape_to_string(weights.shape()) + " does not match " +
                             shape_to_string(expected));
    }
    if (bias) require_vector(*bias, channels, "depthwise bias");
}

void BatchNormParams::validate() const {
    const std::size_t c = gamma.size();
    require_vector(gamma, c, "batchnorm gamma");
    require_vector(beta, c, "batchnorm beta");
    require_vector(mean, c, "batchnorm mean");
    require_vector(variance, c, "batchnorm variance");
    if (!(epsilon >= 0.0f)) throw ValidationError("batchnorm epsilon must be non-negative");
    for (std::size_t i = 0; i < c; ++i) {
        if (!(variance[i] >= 0.0f) || !(variance[i] + epsilon > 0.0f)) {
            throw ValidationError("batchnorm variance + epsilon must be positive (channel " + std::to_string(i) +
                                  ")");
        }
    }
}

std::size_t conv_output_extent(std::size_t in, std::size_t kernel, std::size_t stride, Padding padding) {
    if (in == 0 || kernel == 0 || stride == 0) throw DimensionError("convolution extents must be positive");
    if (padding == Padding::same) return (in + stride - 1) / stride;
    if (in < kernel) {
        throw DimensionError("valid convolution kernel " + std::to_string(kernel) + " larger than input " +
                             std::to_string(in));
    }
    return (in - kernel) / stride + 1;
}

Tensor conv2d(const Tensor& input, const Conv2DSpec& spec) {
    spec.validate();
    require_hwc(input, spec.in_channels, "conv2d");
    const std::size_t h = input.dim(0), w = input.dim(1);
    const std::size_t cin = spec.in_channels, cout = spec.out_channels;
    const auto rows = plan_axis(h, spec.kernel_h, spec.stride, spec.padding);
    const auto cols = plan_axis(w, spec.kernel_w, spec.stride, spec.padding);

    Tensor out({rows.out, cols.out, cout});
    const float* in = input.data().data();
    const float* wt = spec.weights.data().data();
    float* dst = out.data().data();

    for (std::size_t oy = 0; oy < rows.out; ++oy) {
        for (std::size_t ox = 0; ox < cols.out; ++ox) {
            float* acc = dst + (oy * cols.out + ox) * cout;
            if (spec.bias) std::copy_n(spec.bias->data().data(), cout, acc);
            for (std::size_t ky = 0; ky < spec.kernel_h; ++ky) {
                const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * spec.stride + ky) -
                                          static_cast<std::ptrdiff_t>(rows.pad_before);
                if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
                for (std::size_t kx = 0; kx < spec.kernel_w; ++kx) {
                    const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * spec.stride + kx) -
                                              static_cast<std::ptrdiff_t>(cols.pad_before);
                    if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
                    const float* px = in + (static_cast<std::size_t>(iy) * w + static_cast<std::size_t>(ix)) * cin;
                    const float* tap = wt + (ky * spec.kernel_w + kx) * cin * cout;
                    for (std::size_t ci = 0; ci < cin; ++ci) {
                        const float v = px[ci];
                        const float* wrow = tap + ci * cout;
                        for (std::size_t co = 0; co < cout; ++co) acc[co] += v * wrow[co];
                    }
                }
            }
        }
    }
    return out;
}

Tensor depthwise_conv2d(const Tensor& input, const DepthwiseSpec& spec) {
    spec.validate();
    require_hwc(input, spec.channels, "depthwise_conv2d");
    const std::size_t h = input.dim(0), w = input.dim(1), c = spec.channels;
    const auto rows = plan_axis(h, spec.kernel_h, spec.stride, spec.padding);
    const auto cols = plan_axis(w, spec.kernel_w, spec.stride, spec.padding);

    Tensor out({rows.out, cols.out, c});
    const float* in = input.data().data();
    const float* wt = spec.weights.data().data();
    float* dst = out.data().data();

    for (std::size_t oy = 0; oy < rows.out; ++oy) {
        for (std::size_t ox = 0; ox < cols.out; ++ox) {
            float* acc = dst + (oy * cols.out + ox) * c;
            if (spec.bias) std::copy_n(spec.bias->data().data(), c, acc);
            for (std::size_t ky = 0; ky < spec.kernel_h; ++ky) {
                const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * spec.stride + ky) -
                                          static_cast<std::ptrdiff_t>(rows.pad_before);
                if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
                for (std::size_t kx = 0; kx < spec.kernel_w; ++kx) {
                    const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * spec.stride + kx) -
                                              static_cast<std::ptrdiff_t>(cols.pad_before);
                    if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
                    const float* px = in + (static_cast<std::size_t>(iy) * w + static_cast<std::size_t>(ix)) * c;
                    const float* tap = wt + (ky * spec.kernel_w + kx) * c;
                    for (std::size_t ch = 0; ch < c; ++ch) acc[ch] += px[ch] * tap[ch];
                }
            }
        }
    }
    return out;
}

Tensor depthwise_conv2d(const Tensor& input, const Tensor& kernel, std::size_t stride, Padding padding) {
    if (kernel.rank() != 3) {
        throw DimensionError("depthwise kernel must be (kh, kw, channels), got " + shape_to_string(kernel.shape()));
    }
    DepthwiseSpec spec{kernel.dim(0), kernel.dim(1), stride, padding, kernel.dim(2), kernel, std::nullopt};
    return depthwise_conv2d(input, spec);
}

Tensor relu(const Tensor& x) {
    Tensor out = x;
    for (float& v : out.data()) v = std::max(0.0f, v);
    return out;
}

Tensor relu6(const Tensor& x) {
    Tensor out = x;
    for (float& v : out.data()) v = std::min(6.0f, std::max(0.0f, v));
    return out;
}

Tensor batchnorm(const Tensor& x, const BatchNormParams& bn) {
    bn.validate();
    const std::size_t c = bn.channels();
    if (x.rank() == 0 || x.shape().back() != c) {
        throw DimensionError("batchnorm channel mismatch: input " + shape_to_string(x.shape()) + " vs " +
                             std::to_string(c) + " channels");
    }
    Tensor out = x;
    auto d = out.data();
    for (std::size_t i = 0; i < d.size(); ++i) {
        const std::size_t ch = i % c;
        d[i] = bn.gamma[ch] * (d[i] - bn.mean[ch]) / std::sqrt(bn.variance[ch] + bn.epsilon) + bn.beta[ch];
    }
    return out;
}

namespace {

// Per-channel scale gamma / sqrt(var + eps) and the folded bias.
std::pair<std::vector<float>, Tensor> fold_terms(const std::optional<Tensor>& bias, const BatchNormParams& bn) {
    const std::size_t c = bn.channels();
    std::vector<float> scale(c);
    Tensor folded_bias({c});
    for (std::size_t i = 0; i < c; ++i) {
        scale[i] = bn.gamma[i] / std::sqrt(bn.variance[i] + bn.epsilon);
        const float b = bias ? (*bias)[i] : 0.0f;
        folded_bias[i] = (b - bn.mean[i]) * scale[i] + bn.beta[i];
    }
    return {std::move(scale), std::move(folded_bias)};
}

}  // namespace

Conv2DSpec batchnorm_fold(const Conv2DSpec& conv, const BatchNormParams& bn) {
    conv.validate();
    bn.validate();
    if (bn.channels() != conv.out_channels) {
        throw DimensionError("batchnorm has " + std::to_string(bn.channels()) + " channels, convolution has " +
                             std::to_string(conv.out_channels) + " outputs");
    }
    auto [scale, bias] = fold_terms(conv.bias, bn);
    Conv2DSpec out = conv;
    auto w = out.weights.data();
    for (std::size_t i = 0; i < w.size(); ++i) w[i] *= scale[i % conv.out_channels];
    out.bias = std::move(bias);
    return out;
}

DepthwiseSpec batchnorm_fold(const DepthwiseSpec& conv, const BatchNormParams& bn) {
    conv.validate();
    bn.validate();
    if (bn.channels() != conv.channels) {
        throw DimensionError("batchnorm has " + std::to_string(bn.channels()) + " channels, depthwise has " +
                             std::to_string(conv.channels));
    }
    auto [scale, bias] = fold_terms(conv.bias, bn);
    DepthwiseSpec out = conv;
    auto w = out.weights.data();
    for (std::size_t i = 0; i < w.size(); ++i) w[i] *= scale[i % conv.channels];
    out.bias = std::move(bias);
    return out;
}

Tensor global_avg_pool(const Tensor& input) {
    if (input.rank() != 3) {
        throw DimensionError("global_avg_pool expects (height, width, channels), got " +
                             shape_to_string(input.shape()));
    }
    const std::size_t pixels = input.dim(0) * input.dim(1), c = input.dim(2);
    std::vector<double> sums(c, 0.0);
    const float* src = input.data().data();
    for (std::size_t p = 0; p < pixels; ++p) {
        for (std::size_t ch = 0; ch < c; ++ch) sums[ch] += src[p * c + ch];
    }
    Tensor out({c});
    for (std::size_t ch = 0; ch < c; ++ch) out[ch] = static_cast<float>(sums[ch] / static_cast<double>(pixels));
    return out;
}

Tensor dense(const Tensor& input, const Tensor& weights, const Tensor& bias) {
    if (weights.rank() != 2 || input.rank() != 1 || weights.dim(1) != input.dim(0)) {
        throw DimensionError("dense shape mismatch: weights " + shape_to_string(weights.shape()) + ", input " +
                             shape_to_string(input.shape()));
    }
    const std::size_t m = weights.dim(0), n = weights.dim(1);
    require_vector(bias, m, "dense bias");
    Tensor out({m});
    const float* x = input.data().data();
    for (std::size_t i = 0; i < m; ++i) {
        const float* row = weights.data().data() + i * n;
        float acc = 0.0f;
        for (std::size_t j = 0; j < n; ++j) acc += row[j] * x[j];
        out[i] = acc + bias[i];
    }
    return out;
}

Tensor softmax(const Tensor& z) {
    if (z.rank() != 1) throw DimensionError("softmax expects a vector, got " + shape_to_string(z.shape()));
    const float peak = *std::max_element(z.data().begin(), z.data().end());
    std::vector<double> e(z.size());
    double total = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        e[i] = std::exp(static_cast<double>(z[i] - peak));
        total += e[i];
    }
    Tensor out({z.size()});
    for (std::size_t i = 0; i < z.size(); ++i) out[i] = static_cast<float>(e[i] / total);
    return out;
}

std::size_t argmax(std::span<const float> values) {
    if (values.empty()) throw ValidationError("argmax of an empty vector");
    return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

Tensor one_hot(std::size_t label, std::size_t classes) {
    if (label >= classes) {
        throw ValidationError("label " + std::to_string(label) + " out of range for " + std::to_string(classes) +
                              " classes");
    }
    Tensor t({classes});
    t[label] = 1.0f;
    return t;
}

float categorical_cross_entropy(const Tensor& y, const Tensor& p) {
    if (y.shape() != p.shape() || y.rank() != 1) {
        throw DimensionError("cross entropy shape mismatch: " + shape_to_string(y.shape()) + " vs " +
                             shape_to_string(p.shape()));
    }
    std::size_t hot = 0;
    bool one_hot_ok = true;
    for (float v : y.data()) {
        if (v == 1.0f) ++hot;
        else if (v != 0.0f) one_hot_ok = false;
    }
    if (!one_hot_ok || hot != 1) throw ValidationError("cross entropy target is not one-hot");
    double total = 0.0;
    for (float v : p.data()) {
        if (!(v >= 0.0f && v <= 1.0f)) throw ValidationError("cross entropy probability outside [0, 1]");
        total += v;
    }
    if (std::abs(total - 1.0) > 1e-4) throw ValidationError("cross entropy probabilities do not sum to 1");

    double loss = 0.0;
    for (std::size_t c = 0; c < y.size(); ++c) {
        if (y[c] == 0.0f) continue;
        const float clamped = std::clamp(p[c], kProbabilityFloor, 1.0f);
        loss -= static_cast<double>(y[c]) * std::log(static_cast<double>(clamped));
    }
    return static_cast<float>(loss);
}

double accuracy(std::span<const std::size_t> labels, std::span<const Tensor> predictions, double confidence_floor) {
    if (labels.empty() || predictions.empty()) throw ValidationError("accuracy of an empty sample set");
    if (labels.size() != predictions.size()) {
        throw ValidationError("accuracy: " + std::to_string(labels.size()) + " labels vs " +
                              std::to_string(predictions.size()) + " predictions");
    }
    if (!(confidence_floor >= 0.0 && confidence_floor <= 1.0)) {
        throw ValidationError("confidence floor must lie in [0, 1]");
    }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto probs = predictions[i].data();
        const std::size_t top = argmax(probs);
        if (top == labels[i] && static_cast<double>(probs[top]) >= confidence_floor) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(labels.size());
}

double mean_loss(std::span<const std::size_t> labels, std::span<const Tensor> predictions) {
    if (labels.empty() || predictions.empty()) throw ValidationError("mean loss of an empty sample set");
    if (labels.size() != predictions.size()) {
        throw ValidationError("mean loss: " + std::to_string(labels.size()) + " labels vs " +
                              std::to_string(predictions.size()) + " predictions");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        total += categorical_cross_entropy(one_hot(labels[i], predictions[i].size()), predictions[i]);
    }
    return total / static_cast<double>(labels.size());
}

}  // namespace finclass::nn
