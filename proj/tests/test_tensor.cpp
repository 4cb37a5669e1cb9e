// Copyright (C) 2026 The finclass Authors
// SPDX-License-Identifier: Apache-2.0
//

#include <gtest/gtest.h>

#include "finclass/error.hpp"
#include "finclass/rng.hpp"
#include "finclass/tensor.hpp"
#include "support/oracles.hpp"

using namespace finclass;

namespace {

Tensor random_tensor(Rng& rng, Shape shape) {
    const auto n = shape_size(shape);
    return Tensor(std::move(shape), oracle::random_floats(rng, n));
}

}  // namespace

TEST(Tensor, ConstructorRejectsLengthMismatch) {
    EXPECT_THROW(Tensor({2, 3}, std::vector<float>(5)), DimensionError);
    EXPECT_NO_THROW(Tensor({2, 3}, std::vector<float>(6)));
}

TEST(Tensor, ZeroShapeIsRejected) { EXPECT_THROW(Tensor(Shape{2, 0}), DimensionError); }

TEST(Tensor, DimOutOfRange) {
    const Tensor t({2, 3});
    EXPECT_EQ(t.dim(1), 3u);
    EXPECT_THROW(t.dim(2), DimensionError);
}

TEST(Matmul, IdentityLeavesOperandUnchanged) {
    Rng rng(1);
    const Tensor a = random_tensor(rng, {3, 4});
    EXPECT_EQ(matmul(Tensor::identity(3), a), a);
}

TEST(Matmul, HandComputedProduct) {
    const Tensor a({2, 2}, {1, 2, 3, 4});
    const Tensor b({2, 1}, {1, 1});
    EXPECT_EQ(matmul(a, b), Tensor({2, 1}, {3, 7}));
}

TEST(Matmul, ZeroAnnihilates) {
    Rng rng(2);
    EXPECT_EQ(matmul(Tensor::zeros({2, 5}), random_tensor(rng, {5, 4})), Tensor::zeros({2, 4}));
}

TEST(Matmul, ShapeMismatchNamesBothShapes) {
    try {
        matmul(Tensor({2, 3}), Tensor({4, 2}));
        FAIL() << "expected DimensionError";
    } catch (const DimensionError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("(2, 3)"), std::string::npos) << msg;
        EXPECT_NE(msg.find("(4, 2)"), std::string::npos) << msg;
    }
}

TEST(Matmul, RandomMatchesOracle) {
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t m = 1 + rng.index(6), k = 1 + rng.index(6), n = 1 + rng.index(6);
        const Tensor a = random_tensor(rng, {m, k});
        const Tensor b = random_tensor(rng, {k, n});
        const Tensor c = matmul(a, b);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                double acc = 0.0;
                for (std::size_t t = 0; t < k; ++t) acc += static_cast<double>(a.at(i, t)) * b.at(t, j);
                EXPECT_NEAR(c.at(i, j), acc, 1e-5);
            }
    }
}

TEST(Matmul, AssociativityProperty) {
    Rng rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t m = 1 + rng.index(5), k = 1 + rng.index(5), p = 1 + rng.index(5), n = 1 + rng.index(5);
        const Tensor a = random_tensor(rng, {m, k});
        const Tensor b = random_tensor(rng, {k, p});
        const Tensor c = random_tensor(rng, {p, n});
        const Tensor left = matmul(matmul(a, b), c);
        const Tensor right = matmul(a, matmul(b, c));
        for (std::size_t i = 0; i < left.size(); ++i) EXPECT_NEAR(left[i], right[i], 1e-4);
    }
}

TEST(Elementwise, Identities) {
    Rng rng(5);
    const Tensor a = random_tensor(rng, {3, 4, 2});
    EXPECT_EQ(add(a, Tensor::zeros({3, 4, 2})), a);
    EXPECT_EQ(mul(a, Tensor::filled({3, 4, 2}, 1.0f)), a);
}

TEST(Elementwise, ScalarOracle) {
    EXPECT_EQ(add(Tensor({3}, {1, 2, 3}), Tensor({3}, {10, 20, 30})), Tensor({3}, {11, 22, 33}));
    EXPECT_EQ(mul(Tensor({3}, {1, 2, 3}), Tensor({3}, {10, 20, 30})), Tensor({3}, {10, 40, 90}));
}

TEST(Elementwise, PerChannelVectorBroadcast) {
    const Tensor x({2, 2, 2}, {1, 2, 3, 4, 5, 6, 7, 8});
    const Tensor v({2}, {10, 100});
    EXPECT_EQ(add(x, v), Tensor({2, 2, 2}, {11, 102, 13, 104, 15, 106, 17, 108}));
}

TEST(Elementwise, IncompatibleShapes) {
    EXPECT_THROW(add(Tensor({2, 3}), Tensor({3, 2})), DimensionError);
    EXPECT_THROW(add(Tensor({2, 3}), Tensor({2})), DimensionError);
}

TEST(Elementwise, BroadcastAddThenSubtractRoundTrips) {
    Rng rng(6);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t c = 1 + rng.index(8);
        const Tensor x = random_tensor(rng, {1 + rng.index(5), 1 + rng.index(5), c});
        const Tensor v = random_tensor(rng, {c});
        Tensor neg = v;
        for (float& e : neg.data()) e = -e;
        const Tensor back = add(add(x, v), neg);
        for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(back[i], x[i], 1e-6);
    }
}

TEST(Reshape, PreservesFlatOrder) {
    const Tensor t({2, 3}, {1, 2, 3, 4, 5, 6});
    const Tensor r = reshape(t, {3, 2});
    EXPECT_EQ(r.shape(), (Shape{3, 2}));
    EXPECT_EQ(r.values(), t.values());
}

TEST(Reshape, FeatureMapToHeadInput) {
    const Tensor fm({1, 7, 7, 1280});
    EXPECT_EQ(reshape(fm, {1, 62720}).shape(), (Shape{1, 62720}));
}

TEST(Reshape, MismatchedCountThrows) { EXPECT_THROW(reshape(Tensor({2, 3}), {4, 2}), DimensionError); }

TEST(Reshape, RoundTripIsBitExact) {
    Rng rng(7);
    const Tensor t = random_tensor(rng, {4, 3, 2});
    EXPECT_EQ(reshape(reshape(t, {6, 4}), {4, 3, 2}), t);
}

TEST(Tensor, AllFinite) {
    Tensor t({3}, {1, 2, 3});
    EXPECT_TRUE(all_finite(t));
    t[1] = std::numeric_limits<float>::quiet_NaN();
    EXPECT_FALSE(all_finite(t));
    t[1] = std::numeric_limits<float>::infinity();
    EXPECT_FALSE(all_finite(t));
}
