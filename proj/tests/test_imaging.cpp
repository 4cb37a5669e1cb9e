// Copyright (C) 2026 The finclass Authors
// SPDX-License-Identifier: Apache-2.0
//

#include <gtest/gtest.h>

#include <png.h>

#include <cmath>

#include "finclass/error.hpp"
#include "finclass/imaging.hpp"
#include "finclass/rng.hpp"
#include "finclass/synthetic.hpp"
#include "support/fixture.hpp"

using namespace finclass;

namespace {

RasterImage random_image(std::size_t w, std::size_t h, std::uint64_t seed) {
    Rng rng(seed);
    RasterImage img(w, h);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.index(256));
    return img;
}

RasterImage constant_image(std::size_t w, std::size_t h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    RasterImage img(w, h);
    for (std::size_t i = 0; i < w * h; ++i) {
        img.pixels[i * 3] = r;
        img.pixels[i * 3 + 1] = g;
        img.pixels[i * 3 + 2] = b;
    }
    return img;
}

int max_deviation(const RasterImage& a, const RasterImage& b, std::size_t border = 0) {
    int worst = 0;
    for (std::size_t y = border; y + border < a.height; ++y)
        for (std::size_t x = border; x + border < a.width; ++x)
            for (int c = 0; c < 3; ++c) worst = std::max(worst, std::abs(int(a.pixel(x, y)[c]) - int(b.pixel(x, y)[c])));
    return worst;
}

std::vector<std::uint8_t> rgba_png(std::size_t w, std::size_t h, const std::vector<std::uint8_t>& rgba) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(w);
    image.height = static_cast<png_uint_32>(h);
    image.format = PNG_FORMAT_RGBA;
    png_alloc_size_t size = 0;
    png_image_write_get_memory_size(image, size, 0, rgba.data(), 0, nullptr);
    std::vector<std::uint8_t> out(size);
    EXPECT_TRUE(png_image_write_to_memory(&image, out.data(), &size, 0, rgba.data(), 0, nullptr));
    out.resize(size);
    return out;
}

}  // namespace

TEST(Decode, OneWhitePixelPng) {
    const auto img = decode_image(encode_png(constant_image(1, 1, 255, 255, 255)));
    ASSERT_EQ(img.width, 1u);
    ASSERT_EQ(img.height, 1u);
    EXPECT_EQ(img.pixels, (std::vector<std::uint8_t>{255, 255, 255}));
}

TEST(Decode, PngRoundTripIsLossless) {
    const auto img = random_image(37, 23, 1);
    EXPECT_EQ(decode_image(encode_png(img)), img);
}

TEST(Decode, AlphaIsCompositedOverWhite) {
    // Opaque red, fully transparent black, half-transparent black.
    const auto bytes = rgba_png(3, 1, {255, 0, 0, 255, 0, 0, 0, 0, 0, 0, 0, 128});
    const auto img = decode_image(bytes);
    EXPECT_EQ(img.pixel(0, 0)[0], 255);
    EXPECT_EQ(img.pixel(0, 0)[1], 0);
    EXPECT_EQ(img.pixel(1, 0)[0], 255);
    EXPECT_EQ(img.pixel(1, 0)[2], 255);
    EXPECT_NEAR(img.pixel(2, 0)[0], 127, 2);
}

TEST(Decode, JpegRoundTripIsClose) {
    const auto img = constant_image(16, 16, 200, 100, 50);
    const auto back = decode_image(encode_jpeg(img, 95));
    ASSERT_EQ(back.width, 16u);
    EXPECT_LE(max_deviation(img, back), 3);
}

TEST(Decode, TruncatedStreamsFail) {
    const auto png = encode_png(random_image(20, 20, 2));
    const auto jpg = encode_jpeg(random_image(20, 20, 3));
    for (const auto* bytes : {&png, &jpg}) {
        for (std::size_t n : {std::size_t{0}, std::size_t{3}, bytes->size() / 2, bytes->size() - 5}) {
            EXPECT_THROW(decode_image(std::span(bytes->data(), n)), DecodeError) << n;
        }
    }
}

TEST(Decode, NonImageBytesFail) {
    const std::string text = "definitely not an image";
    EXPECT_THROW(decode_image(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size())), DecodeError);
}

TEST(Files, SaveLoadByExtension) {
    fixture::TempDir dir("imaging");
    const auto img = random_image(12, 9, 4);
    save_image(img, dir / "a.png");
    EXPECT_EQ(load_image(dir / "a.png"), img);
    save_image(img, dir / "b.JPG");
    EXPECT_EQ(load_image(dir / "b.JPG").width, 12u);
    EXPECT_THROW(save_image(img, dir / "c.bmp"), ValidationError);
    EXPECT_THROW(load_image(dir / "missing.png"), IoError);
    EXPECT_EQ(format_from_extension("x.jpeg"), ImageFormat::jpeg);
    EXPECT_FALSE(format_from_extension("x.gif").has_value());
}

TEST(Resize, ConstantStaysConstant) {
    const auto img = constant_image(31, 17, 10, 200, 77);
    for (auto [w, h] : {std::pair{224, 224}, std::pair{5, 3}, std::pair{1, 1}, std::pair{64, 17}}) {
        const auto out = resize_bilinear(img, static_cast<std::size_t>(w), static_cast<std::size_t>(h));
        EXPECT_EQ(out, constant_image(static_cast<std::size_t>(w), static_cast<std::size_t>(h), 10, 200, 77));
    }
}

TEST(Resize, DatasetResolutionToModelInput) {
    const auto out = resize_bilinear(random_image(590, 445, 5), 224, 224);
    EXPECT_EQ(out.width, 224u);
    EXPECT_EQ(out.height, 224u);
    EXPECT_EQ(out.pixels.size(), 224u * 224 * 3);
}

TEST(Resize, TwoPixelUpscaleMatchesHandOracle) {
    RasterImage img(2, 1);
    img.pixels = {0, 0, 0, 255, 255, 255};
    const auto out = resize_bilinear(img, 4, 1);
    // Half-pixel centers: x_src = (x + 0.5) / 2 - 0.5 = {-0.25, 0.25, 0.75, 1.25} -> clamp -> {0, .25, .75, 1}
    const std::uint8_t expect[] = {0, 64, 191, 255};
    for (std::size_t x = 0; x < 4; ++x) EXPECT_EQ(out.pixel(x, 0)[0], expect[x]) << x;
}

TEST(Resize, SameSizeIsIdentityWithinOneLevel) {
    const auto img = random_image(40, 30, 6);
    EXPECT_LE(max_deviation(img, resize_bilinear(img, 40, 30)), 1);
}

TEST(Resize, ZeroTargetRejected) {
    EXPECT_THROW(resize_bilinear(random_image(4, 4, 7), 0, 4), ValidationError);
}

TEST(Preprocess, RangeEndpointsAndMidpoint) {
    RasterImage img(224, 224);
    img.pixels[0] = 0;
    img.pixels[1] = 255;
    img.pixels[2] = 127;
    img.pixels[3] = 128;
    const auto t = preprocess(img);
    ASSERT_EQ(t.shape(), (Shape{224, 224, 3}));
    EXPECT_FLOAT_EQ(t[0], -1.0f);
    EXPECT_FLOAT_EQ(t[1], 1.0f);
    EXPECT_NEAR(t[2], -0.00392157, 1e-6);
    EXPECT_NEAR(t[3], 0.00392157, 1e-6);
}

TEST(Preprocess, GrayImage) {
    const auto t = preprocess(constant_image(224, 224, 128, 128, 128));
    for (float v : t.data()) ASSERT_NEAR(v, 128.0 / 127.5 - 1.0, 1e-7);
}

TEST(Preprocess, ExhaustiveRange) {
    RasterImage img(224, 224);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<std::uint8_t>(i % 256);
    const auto t = preprocess(img);
    for (std::size_t v = 0; v < 256; ++v) {
        EXPECT_GE(t[v], -1.0f);
        EXPECT_LE(t[v], 1.0f);
        EXPECT_FLOAT_EQ(t[v], static_cast<float>(v) / 127.5f - 1.0f);
    }
}

TEST(Preprocess, WrongDimensions) { EXPECT_THROW(preprocess(RasterImage(100, 224)), DimensionError); }

TEST(Rotate, FullTurnAndHalfTurnTwice) {
    const auto img = synthetic_image(3, 1, 64, 48);
    const auto full = rotate(img, 360.0);
    EXPECT_EQ(full.width, img.width);
    EXPECT_EQ(full.height, img.height);
    EXPECT_LE(max_deviation(img, full), 2);
    EXPECT_LE(max_deviation(img, rotate(rotate(img, 180.0), 180.0)), 2);
}

TEST(Rotate, HalfTurnMapsPixelsThroughCenter) {
    const auto img = random_image(9, 7, 8);
    const auto out = rotate(img, 180.0);
    int worst = 0;
    for (std::size_t y = 0; y < 7; ++y)
        for (std::size_t x = 0; x < 9; ++x)
            for (int c = 0; c < 3; ++c)
                worst = std::max(worst, std::abs(int(out.pixel(x, y)[c]) - int(img.pixel(8 - x, 6 - y)[c])));
    EXPECT_LE(worst, 1);
}

TEST(Rotate, ConstantImageInscribedDiscAndBlackCorners) {
    const auto img = constant_image(41, 41, 90, 180, 30);
    for (double angle : {17.0, 45.0, 123.4, 271.9}) {
        const auto out = rotate(img, angle);
        const double c = 20.0, r = 19.0;
        for (std::size_t y = 0; y < 41; ++y)
            for (std::size_t x = 0; x < 41; ++x) {
                const double d = std::hypot(double(x) - c, double(y) - c);
                if (d <= r) {
                    ASSERT_NEAR(out.pixel(x, y)[0], 90, 1) << angle;
                    ASSERT_NEAR(out.pixel(x, y)[1], 180, 1) << angle;
                }
            }
        if (std::fmod(angle, 90.0) != 0.0) {
            EXPECT_EQ(out.pixel(0, 0)[0], 0) << angle;
            EXPECT_EQ(out.pixel(40, 40)[1], 0) << angle;
        }
    }
}

TEST(Reflect, InvolutionAndColumns) {
    const auto img = random_image(13, 8, 9);
    for (auto axis : {ReflectAxis::horizontal, ReflectAxis::vertical}) EXPECT_EQ(reflect(reflect(img, axis), axis), img);
    const auto h = reflect(img, ReflectAxis::horizontal);
    for (std::size_t y = 0; y < 8; ++y) {
        for (int c = 0; c < 3; ++c) EXPECT_EQ(h.pixel(12, y)[c], img.pixel(0, y)[c]);
    }
    const auto v = reflect(img, ReflectAxis::vertical);
    for (std::size_t x = 0; x < 13; ++x) EXPECT_EQ(v.pixel(x, 7)[0], img.pixel(x, 0)[0]);
}

TEST(Reflect, SymmetricImageIsFixedPoint) {
    auto img = random_image(10, 6, 10);
    for (std::size_t y = 0; y < 6; ++y)
        for (std::size_t x = 0; x < 5; ++x)
            for (int c = 0; c < 3; ++c) img.pixel(9 - x, y)[c] = img.pixel(x, y)[c];
    EXPECT_EQ(reflect(img, ReflectAxis::horizontal), img);
}

TEST(PrepareInput, BytesAndRasterAgree) {
    const auto img = synthetic_image(1, 2);
    EXPECT_EQ(prepare_input(encode_png(img)), prepare_input(img));
    EXPECT_EQ(prepare_input(img).shape(), (Shape{224, 224, 3}));
}
