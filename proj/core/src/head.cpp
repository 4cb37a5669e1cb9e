// Copyright (C) 2026 The finclass Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "finclass/head.hpp"

#include <cmath>
#include <limits>

#include "finclass/error.hpp"
#include "finclass/nn_ops.hpp"
#include "finclass/rng.hpp"

namespace finclass {
namespace {

std::vector<Tensor*> fields(HeadParams& p) { return {&p.w1, &p.b1, &p.w2, &p.b2}; }
std::vector<const Tensor*> fields(const HeadParams& p) { return {&p.w1, &p.b1, &p.w2, &p.b2}; }

void fill_glorot(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (float& v : t.data()) v = static_cast<float>(rng.uniform(-limit, limit));
}

}  // namespace

void HeadParams::validate() const {
    if (w1.rank() != 2 || w2.rank() != 2 || b1.rank() != 1 || b2.rank() != 1 || b1.dim(0) != w1.dim(0) ||
        w2.dim(1) != w1.dim(0) || b2.dim(0) != w2.dim(0)) {
        throw DimensionError("head parameter shapes do not chain: w1 " + shape_to_string(w1.shape()) + ", b1 " +
                             shape_to_string(b1.shape()) + ", w2 " + shape_to_string(w2.shape()) + ", b2 " +
                             shape_to_string(b2.shape()));
    }
}

HeadParams HeadParams::glorot(std::size_t features, std::size_t hidden, std::size_t classes, std::uint64_t seed) {
    HeadParams p = zeros(features, hidden, classes);
    Rng rng(seed);
    fill_glorot(p.w1, features, hidden, rng);
    fill_glorot(p.w2, hidden, classes, rng);
    return p;
}

HeadParams HeadParams::zeros(std::size_t features, std::size_t hidden, std::size_t classes) {
    return {Tensor({hidden, features}), Tensor({hidden}), Tensor({classes, hidden}), Tensor({classes})};
}

ModelGraph append_classifier(const ModelGraph& backbone, std::size_t hidden, std::vector<std::string> class_names) {
    ModelGraph g = backbone;
    const std::size_t features = g.feature_width();
    g.layers.resize(g.feature_layer_end());
    g.layers.emplace_back(DenseLayer{kHeadHiddenLayer, features, hidden, Activation::relu});
    g.layers.emplace_back(DenseLayer{kHeadOutputLayer, hidden, class_names.size(), Activation::none});
    g.layers.emplace_back(SoftmaxLayer{});
    g.class_names = std::move(class_names);
    g.validate_classifier();
    return g;
}

void store_head(const HeadParams& head, WeightStore& store) {
    head.validate();
    store.set(std::string(kHeadHiddenLayer) + ".weights", head.w1);
    store.set(std::string(kHeadHiddenLayer) + ".bias", head.b1);
    store.set(std::string(kHeadOutputLayer) + ".weights", head.w2);
    store.set(std::string(kHeadOutputLayer) + ".bias", head.b2);
}

HeadParams load_head(const WeightStore& store) {
    HeadParams head{store.get(std::string(kHeadHiddenLayer) + ".weights"),
                    store.get(std::string(kHeadHiddenLayer) + ".bias"),
                    store.get(std::string(kHeadOutputLayer) + ".weights"),
                    store.get(std::string(kHeadOutputLayer) + ".bias")};
    try {
        head.validate();
    } catch (const DimensionError& e) {
        throw WeightError(e.what());
    }
    return head;
}

Tensor head_logits(const HeadParams& params, const Tensor& features) {
    params.validate();
    return nn::dense(nn::relu(nn::dense(features, params.w1, params.b1)), params.w2, params.b2);
}

Tensor head_forward(const HeadParams& params, const Tensor& features) {
    return nn::softmax(head_logits(params, features));
}

GradientResult head_gradients(const HeadParams& params, const Tensor& features, const Tensor& labels) {
    params.validate();
    if (features.rank() != 2 || labels.rank() != 2) {
        throw ValidationError("head_gradients expects [batch x features] and [batch x classes] tensors");
    }
    const std::size_t batch = features.dim(0);
    if (labels.dim(0) != batch) {
        throw ValidationError("head_gradients: " + std::to_string(batch) + " feature rows vs " +
                              std::to_string(labels.dim(0)) + " label rows");
    }
    if (features.dim(1) != params.features() || labels.dim(1) != params.classes()) {
        throw DimensionError("head_gradients: batch shapes " + shape_to_string(features.shape()) + " / " +
                             shape_to_string(labels.shape()) + " do not match the head");
    }
    const std::size_t F = params.features(), H = params.hidden(), K = params.classes();

    std::vector<double> gw1(H * F, 0.0), gb1(H, 0.0), gw2(K * H, 0.0), gb2(K, 0.0);
    std::vector<double> pre(H), hidden(H), dhidden(H), p(K);
    const float* w1 = params.w1.data().data();
    const float* w2 = params.w2.data().data();
    double loss = 0.0;

    // Forward pass in double so that p - y keeps full precision when the
    // per-sample contributions largely cancel across the batch.
    for (std::size_t n = 0; n < batch; ++n) {
        const float* x = features.data().data() + n * F;
        const float* y = labels.data().data() + n * K;
        bool hot = false;
        for (std::size_t k = 0; k < K; ++k) {
            if (y[k] == 1.0f && !hot) hot = true;
            else if (y[k] != 0.0f) throw ValidationError("head_gradients: label row " + std::to_string(n) + " is not one-hot");
        }
        if (!hot) throw ValidationError("head_gradients: label row " + std::to_string(n) + " is not one-hot");

        for (std::size_t j = 0; j < H; ++j) {
            double acc = params.b1[j];
            const float* row = w1 + j * F;
            for (std::size_t i = 0; i < F; ++i) acc += static_cast<double>(row[i]) * x[i];
            pre[j] = acc;
            hidden[j] = acc > 0.0 ? acc : 0.0;
        }
        double peak = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < K; ++k) {
            double acc = params.b2[k];
            const float* row = w2 + k * H;
            for (std::size_t j = 0; j < H; ++j) acc += static_cast<double>(row[j]) * hidden[j];
            p[k] = acc;
            peak = std::max(peak, acc);
        }
        double total = 0.0;
        for (double& v : p) total += (v = std::exp(v - peak));
        for (std::size_t k = 0; k < K; ++k) {
            p[k] /= total;
            if (y[k] == 1.0f) loss -= std::log(std::max(p[k], static_cast<double>(nn::kProbabilityFloor)));
        }

        std::fill(dhidden.begin(), dhidden.end(), 0.0);
        for (std::size_t k = 0; k < K; ++k) {
            const double dz = p[k] - static_cast<double>(y[k]);
            gb2[k] += dz;
            const float* w2row = w2 + k * H;
            double* g2row = gw2.data() + k * H;
            for (std::size_t j = 0; j < H; ++j) {
                g2row[j] += dz * hidden[j];
                dhidden[j] += dz * w2row[j];
            }
        }
        for (std::size_t j = 0; j < H; ++j) {
            if (!(pre[j] > 0.0)) continue;
            const double d = dhidden[j];
            gb1[j] += d;
            double* g1row = gw1.data() + j * F;
            for (std::size_t i = 0; i < F; ++i) g1row[i] += d * x[i];
        }
    }

    const double scale = 1.0 / static_cast<double>(batch);
    auto finish = [scale](const std::vector<double>& acc, Shape shape) {
        Tensor t(std::move(shape));
        for (std::size_t i = 0; i < acc.size(); ++i) t[i] = static_cast<float>(acc[i] * scale);
        return t;
    };
    GradientResult result;
    result.gradients = {finish(gw1, {H, F}), finish(gb1, {H}), finish(gw2, {K, H}), finish(gb2, {K})};
    result.loss = loss * scale;
    return result;
}

AdamState AdamState::zeros_like(const HeadParams& params) {
    params.validate();
    const auto z = HeadParams::zeros(params.features(), params.hidden(), params.classes());
    return {z, z, 0};
}

void adam_step(HeadParams& params, const HeadGradients& gradients, AdamState& state, const AdamConfig& config) {
    auto p = fields(params);
    auto g = fields(gradients);
    auto m = fields(state.m);
    auto v = fields(state.v);
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i]->shape() != g[i]->shape() || p[i]->shape() != m[i]->shape() || p[i]->shape() != v[i]->shape()) {
            throw DimensionError("adam_step: parameter " + shape_to_string(p[i]->shape()) + " vs gradient " +
                                 shape_to_string(g[i]->shape()));
        }
    }
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double correction1 = 1.0 - std::pow(config.beta1, t);
    const double correction2 = 1.0 - std::pow(config.beta2, t);
    for (std::size_t i = 0; i < p.size(); ++i) {
        auto pd = p[i]->data();
        auto gd = g[i]->data();
        auto md = m[i]->data();
        auto vd = v[i]->data();
        for (std::size_t j = 0; j < pd.size(); ++j) {
            const double grad = gd[j];
            const double mj = config.beta1 * md[j] + (1.0 - config.beta1) * grad;
            const double vj = config.beta2 * vd[j] + (1.0 - config.beta2) * grad * grad;
            md[j] = static_cast<float>(mj);
            vd[j] = static_cast<float>(vj);
            const double m_hat = mj / correction1;
            const double v_hat = vj / correction2;
            pd[j] = static_cast<float>(pd[j] - config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon));
        }
    }
}

}  // namespace finclass
