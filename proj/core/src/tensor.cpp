// Copyright (C) 2026 The finclass Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "finclass/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "finclass/error.hpp"

namespace finclass {

std::size_t shape_size(const Shape& shape) noexcept {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_to_string(const Shape& shape) {
    std::string out = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i != 0) out += ", ";
        out += std::to_string(shape[i]);
    }
    if (shape.size() == 1) out += ",";
    out += ")";
    return out;
}

namespace {

void check_shape(const Shape& shape) {
    if (shape.empty()) throw DimensionError("tensor shape must have at least one dimension");
    for (auto d : shape) {
        if (d == 0) throw DimensionError("tensor dimensions must be positive, got " + shape_to_string(shape));
    }
}

}  // namespace

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
    check_shape(shape_);
    data_.assign(shape_size(shape_), 0.0f);
}

Tensor::Tensor(Shape shape, std::vector<float> data) : shape_(std::move(shape)), data_(std::move(data)) {
    check_shape(shape_);
    if (data_.size() != shape_size(shape_)) {
        throw DimensionError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                             shape_to_string(shape_));
    }
}

Tensor::Tensor(Shape shape, std::initializer_list<float> data) : Tensor(std::move(shape), std::vector<float>(data)) {}

Tensor Tensor::filled(Shape shape, float value) {
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), value);
    return t;
}

Tensor Tensor::identity(std::size_t n) {
    Tensor t({n, n});
    for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1.0f;
    return t;
}

std::size_t Tensor::dim(std::size_t axis) const {
    if (axis >= shape_.size()) {
        throw DimensionError("axis " + std::to_string(axis) + " out of range for shape " + shape_to_string(shape_));
    }
    return shape_[axis];
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
        throw DimensionError("matmul shape mismatch: " + shape_to_string(a.shape()) + " x " +
                             shape_to_string(b.shape()));
    }
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    Tensor out({m, n});
    const float* pa = a.data().data();
    const float* pb = b.data().data();
    float* po = out.data().data();
    for (std::size_t i = 0; i < m; ++i) {
        float* row = po + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const float av = pa[i * k + p];
            const float* brow = pb + p * n;
            for (std::size_t j = 0; j < n; ++j) row[j] += av * brow[j];
        }
    }
    return out;
}

Tensor elementwise(const Tensor& a, const Tensor& b, ElementwiseOp op) {
    const bool same = a.shape() == b.shape();
    const bool per_channel = !same && b.rank() == 1 && a.rank() >= 1 && b.dim(0) == a.shape().back();
    if (!same && !per_channel) {
        throw DimensionError("elementwise shape mismatch: " + shape_to_string(a.shape()) + " vs " +
                             shape_to_string(b.shape()));
    }
    Tensor out = a;
    auto dst = out.data();
    auto src = b.data();
    const std::size_t period = src.size();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        const float rhs = src[same ? i : i % period];
        dst[i] = op == ElementwiseOp::add ? dst[i] + rhs : dst[i] * rhs;
    }
    return out;
}

Tensor reshape(const Tensor& t, Shape new_shape) {
    if (shape_size(new_shape) != t.size()) {
        throw DimensionError("cannot reshape " + shape_to_string(t.shape()) + " to " + shape_to_string(new_shape));
    }
    return Tensor(std::move(new_shape), t.values());
}

bool all_finite(const Tensor& t) noexcept {
    return std::all_of(t.data().begin(), t.data().end(), [](float v) { return std::isfinite(v); });
}

}  // namespace finclass
