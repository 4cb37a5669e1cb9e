// Copyright (C) 2026 The finclass Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "finclass/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "finclass/error.hpp"
#include "finclass/rng.hpp"

namespace finclass {
namespace {

Tensor normal_tensor(Shape shape, double stddev, Rng& rng) {
    Tensor t(std::move(shape));
    for (float& v : t.data()) v = static_cast<float>(rng.normal() * stddev);
    return t;
}

Tensor uniform_tensor(Shape shape, double lo, double hi, Rng& rng) {
    Tensor t(std::move(shape));
    for (float& v : t.data()) v = static_cast<float>(rng.uniform(lo, hi));
    return t;
}

void add_conv(WeightStore& store, const std::string& prefix, Shape weight_shape, std::size_t fan_in,
              std::size_t out_channels, double gain, Rng& rng) {
    store.set(prefix + ".weights", normal_tensor(std::move(weight_shape), std::sqrt(gain / static_cast<double>(fan_in)), rng));
    store.set(prefix + ".bn.gamma", uniform_tensor({out_channels}, 0.9, 1.1, rng));
    store.set(prefix + ".bn.beta", uniform_tensor({out_channels}, -0.05, 0.05, rng));
    store.set(prefix + ".bn.mean", uniform_tensor({out_channels}, -0.05, 0.05, rng));
    store.set(prefix + ".bn.variance", uniform_tensor({out_channels}, 0.9, 1.1, rng));
}

struct Palette {
    std::uint8_t r, g, b;
};

constexpr Palette kBody[9] = {
    {200, 200, 215}, {230, 190, 90}, {90, 140, 200}, {220, 70, 60}, {230, 120, 150},
    {120, 120, 120}, {250, 160, 120}, {170, 40, 90}, {90, 170, 90},
};

constexpr Palette kBackdrop[9] = {
    {30, 40, 80}, {60, 30, 20}, {230, 230, 200}, {20, 60, 60}, {40, 40, 40},
    {200, 230, 250}, {20, 20, 60}, {240, 220, 160}, {70, 50, 110},
};

}  // namespace

WeightStore random_backbone_weights(const ModelGraph& graph, std::uint64_t seed) {
    Rng rng(seed);
    WeightStore store;
    for (const auto& layer : graph.layers) {
        if (const auto* c = std::get_if<ConvLayer>(&layer)) {
            add_conv(store, c->name, {c->kernel, c->kernel, c->in_channels, c->out_channels},
                     c->kernel * c->kernel * c->in_channels, c->out_channels, 2.0, rng);
        } else if (const auto* b = std::get_if<BottleneckLayer>(&layer)) {
            const std::size_t hidden = b->hidden_channels();
            if (b->spec.expansion != 1) {
                add_conv(store, b->name + ".expand", {1, 1, b->in_channels, hidden}, b->in_channels, hidden, 2.0, rng);
            }
            add_conv(store, b->name + ".depthwise", {3, 3, hidden}, 9, hidden, 2.0, rng);
            add_conv(store, b->name + ".project", {1, 1, hidden, b->spec.out_channels}, hidden, b->spec.out_channels,
                     1.0, rng);
        } else if (const auto* d = std::get_if<DenseLayer>(&layer)) {
            store.set(d->name + ".weights",
                      normal_tensor({d->out_features, d->in_features}, std::sqrt(1.0 / static_cast<double>(d->in_features)), rng));
            store.set(d->name + ".bias", Tensor({d->out_features}));
        }
    }
    return store;
}

RasterImage synthetic_image(std::size_t class_index, std::uint64_t variant, std::size_t width, std::size_t height) {
    if (class_index >= 9) throw ValidationError("synthetic classes are limited to 9");
    Rng rng((class_index + 1) * 0x9E3779B97F4A7C15ull ^ (variant * 0xD1B54A32D192ED03ull + 17));
    const Palette body = kBody[class_index];
    const Palette back = kBackdrop[class_index];

    // Texture: stripe orientation by class, frequency by class group.
    const double orientation = static_cast<double>(class_index % 3) * std::numbers::pi / 3.0 + rng.uniform(-0.15, 0.15);
    const double frequency = 0.15 + 0.12 * static_cast<double>(class_index / 3);
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double tint = rng.uniform(-18.0, 18.0);

    const double cx = static_cast<double>(width) * rng.uniform(0.4, 0.6);
    const double cy = static_cast<double>(height) * rng.uniform(0.4, 0.6);
    const double rx = static_cast<double>(width) * rng.uniform(0.28, 0.38);
    const double ry = static_cast<double>(height) * rng.uniform(0.18, 0.28);
    const double tilt = rng.uniform(-0.4, 0.4);
    const double ct = std::cos(tilt), st = std::sin(tilt);
    const double ox = std::cos(orientation), oy = std::sin(orientation);

    RasterImage img(width, height);
    auto clamp_byte = [](double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); };
    for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) {
            const double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
            const double u = (dx * ct + dy * st) / rx, v = (-dx * st + dy * ct) / ry;
            const bool inside = u * u + v * v <= 1.0;
            const double noise = rng.uniform(-10.0, 10.0);
            std::uint8_t* p = img.pixel(x, y);
            if (inside) {
                const double wave = std::sin((static_cast<double>(x) * ox + static_cast<double>(y) * oy) * frequency + phase);
                const double shade = 0.75 + 0.25 * wave;
                p[0] = clamp_byte(body.r * shade + tint + noise);
                p[1] = clamp_byte(body.g * shade + tint + noise);
                p[2] = clamp_byte(body.b * shade + tint + noise);
            } else {
                p[0] = clamp_byte(back.r + tint * 0.5 + noise);
                p[1] = clamp_byte(back.g + tint * 0.5 + noise);
                p[2] = clamp_byte(back.b + tint * 0.5 + noise);
            }
        }
    }
    return img;
}

LabeledDataset synthetic_dataset(std::size_t per_class, std::uint64_t seed, std::size_t classes) {
    if (classes == 0 || classes > 9) throw ValidationError("synthetic datasets hold 1 to 9 classes");
    LabeledDataset ds;
    const auto& names = marine_class_names();
    ds.class_names.assign(names.begin(), names.begin() + static_cast<std::ptrdiff_t>(classes));
    for (std::size_t c = 0; c < classes; ++c) {
        for (std::size_t i = 0; i < per_class; ++i) ds.samples.push_back({synthetic_image(c, seed * 1000003 + i), c});
    }
    return ds;
}

void write_synthetic_tree(const std::filesystem::path& root, std::size_t per_class, std::uint64_t seed,
                          std::size_t classes) {
    const auto ds = synthetic_dataset(per_class, seed, classes);
    std::vector<std::size_t> next(classes, 0);
    for (const auto& s : ds.samples) {
        const auto dir = root / ds.class_names[s.label];
        std::filesystem::create_directories(dir);
        char name[32];
        std::snprintf(name, sizeof(name), "img_%04zu.png", next[s.label]++);
        save_image(std::get<RasterImage>(s.source), dir / name);
    }
}

}  // namespace finclass
