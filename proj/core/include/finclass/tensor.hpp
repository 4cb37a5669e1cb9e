// Copyright (C) 2026 The finclass Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace finclass {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape) noexcept;
std::string shape_to_string(const Shape& shape);

/// Dense row-major float32 tensor. Images and feature maps use (height, width,
/// channels); batches prepend a leading dimension.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape);
    Tensor(Shape shape, std::vector<float> data);
    Tensor(Shape shape, std::initializer_list<float> data);

    static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
    static Tensor filled(Shape shape, float value);
    static Tensor identity(std::size_t n);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t axis) const;
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::span<const float> data() const noexcept { return data_; }
    std::span<float> data() noexcept { return data_; }
    const std::vector<float>& values() const noexcept { return data_; }

    float operator[](std::size_t i) const noexcept { return data_[i]; }
    float& operator[](std::size_t i) noexcept { return data_[i]; }

    /// Element at (row, col) of a rank-2 tensor.
    float at(std::size_t row, std::size_t col) const noexcept { return data_[row * shape_[1] + col]; }
    float& at(std::size_t row, std::size_t col) noexcept { return data_[row * shape_[1] + col]; }

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    Shape shape_;
    std::vector<float> data_;
};

enum class ElementwiseOp { add, mul };

/// Standard matrix product of a [m x k] and b [k x n].
Tensor matmul(const Tensor& a, const Tensor& b);

/// Pointwise a (op) b. `b` either has the same shape as `a` or is a rank-1
/// vector whose length equals the last (channel) dimension of `a`.
Tensor elementwise(const Tensor& a, const Tensor& b, ElementwiseOp op);

inline Tensor add(const Tensor& a, const Tensor& b) { return elementwise(a, b, ElementwiseOp::add); }
inline Tensor mul(const Tensor& a, const Tensor& b) { return elementwise(a, b, ElementwiseOp::mul); }

Tensor reshape(const Tensor& t, Shape new_shape);

bool all_finite(const Tensor& t) noexcept;

}  // namespace finclass
