// Copyright (C) 2026 The finclass Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "finclass/tensor.hpp"

namespace finclass {

/// 8-bit RGB raster, row-major, 3 bytes per pixel.
struct RasterImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> pixels;

    RasterImage() = default;
    /// Black image; throws ValidationError for a zero dimension.
    RasterImage(std::size_t w, std::size_t h);
    RasterImage(std::size_t w, std::size_t h, std::vector<std::uint8_t> rgb);

    std::uint8_t* pixel(std::size_t x, std::size_t y) noexcept { return pixels.data() + (y * width + x) * 3; }
    const std::uint8_t* pixel(std::size_t x, std::size_t y) const noexcept {
        return pixels.data() + (y * width + x) * 3;
    }

    friend bool operator==(const RasterImage&, const RasterImage&) = default;
};

enum class ImageFormat { png, jpeg };

/// Accepts PNG and JPEG (sniffed from the leading bytes). Alpha is composited
/// over white. Throws DecodeError for anything else, including truncated data.
RasterImage decode_image(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_png(const RasterImage& img);
std::vector<std::uint8_t> encode_jpeg(const RasterImage& img, int quality = 95);
std::vector<std::uint8_t> encode_image(const RasterImage& img, ImageFormat format);

/// Format implied by a .png/.jpg/.jpeg extension (case-insensitive); nullopt otherwise.
std::optional<ImageFormat> format_from_extension(const std::filesystem::path& path);

RasterImage load_image(const std::filesystem::path& path);
/// Encodes by extension and writes atomically.
void save_image(const RasterImage& img, const std::filesystem::path& path);

/// Bilinear resampling with half-pixel-center alignment.
RasterImage resize_bilinear(const RasterImage& img, std::size_t out_w, std::size_t out_h);

/// x / 127.5 - 1 per channel into a (height, width, 3) tensor. Requires a
/// kBackboneInputSize square image unless `expected_size` says otherwise.
Tensor preprocess(const RasterImage& img, std::size_t expected_size = 224);

/// decode -> resize to size x size -> preprocess.
Tensor prepare_input(std::span<const std::uint8_t> bytes, std::size_t size = 224);
Tensor prepare_input(const RasterImage& img, std::size_t size = 224);

/// Counter-clockwise (as displayed) rotation about the image center with
/// bilinear sampling; same dimensions, uncovered pixels black.
RasterImage rotate(const RasterImage& img, double degrees);

enum class ReflectAxis {
    horizontal,  // mirror left <-> right
    vertical,    // mirror top <-> bottom
};

RasterImage reflect(const RasterImage& img, ReflectAxis axis);

}  // namespace finclass
