// Copyright (C) 2026 The finclass Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "finclass/imaging.hpp"

#include <jpeglib.h>
#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <numbers>
#include <string>

#include "binary_io.hpp"
#include "finclass/error.hpp"

namespace finclass {
namespace {

bool is_png(std::span<const std::uint8_t> b) {
    static constexpr std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
    return b.size() >= 8 && std::equal(sig, sig + 8, b.begin());
}

bool is_jpeg(std::span<const std::uint8_t> b) { return b.size() >= 3 && b[0] == 0xFF && b[1] == 0xD8 && b[2] == 0xFF; }

std::uint32_t read_be32(const std::uint8_t* p) {
    return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | p[3];
}

// The simplified libpng reader accepts streams cut inside the image data, so
// the chunk layout is checked up front: every chunk within bounds, IEND last.
void check_png_chunks(std::span<const std::uint8_t> bytes) {
    std::size_t pos = 8;
    while (pos + 12 <= bytes.size()) {
        const std::uint64_t length = read_be32(bytes.data() + pos);
        const bool iend = std::memcmp(bytes.data() + pos + 4, "IEND", 4) == 0;
        if (length > bytes.size() - pos - 12) break;
        pos += 12 + static_cast<std::size_t>(length);
        if (iend) return;
    }
    throw DecodeError("png: truncated stream (no complete IEND chunk)");
}

RasterImage decode_png(std::span<const std::uint8_t> bytes) {
    check_png_chunks(bytes);
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()) == 0) {
        std::string msg = image.message;
        png_image_free(&image);
        throw DecodeError("png: " + msg);
    }
    image.format = PNG_FORMAT_RGBA;
    if (image.width == 0 || image.height == 0) {
        png_image_free(&image);
        throw DecodeError("png: empty image");
    }
    std::vector<std::uint8_t> rgba(PNG_IMAGE_SIZE(image));
    if (png_image_finish_read(&image, nullptr, rgba.data(), 0, nullptr) == 0) {
        std::string msg = image.message;
        png_image_free(&image);
        throw DecodeError("png: " + msg);
    }
    RasterImage out(image.width, image.height);
    for (std::size_t i = 0; i < static_cast<std::size_t>(image.width) * image.height; ++i) {
        const unsigned a = rgba[i * 4 + 3];
        for (int c = 0; c < 3; ++c) {
            const unsigned v = rgba[i * 4 + c];
            out.pixels[i * 3 + c] = static_cast<std::uint8_t>((v * a + 255u * (255u - a) + 127u) / 255u);
        }
    }
    return out;
}

struct JpegErrorManager {
    jpeg_error_mgr base;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, err->message);
    std::longjmp(err->jump, 1);
}

void jpeg_silent(j_common_ptr, int) {}

// Decoder-side message hook: any warning (level -1) is fatal, which turns
// premature end of data and corrupt entropy segments into decode errors.
void jpeg_warning_is_error(j_common_ptr cinfo, int msg_level) {
    if (msg_level < 0) jpeg_error_exit(cinfo);
}

// Returns false and fills `error` on failure. Kept free of objects with
// non-trivial destructors because of the longjmp.
bool jpeg_decode_raw(std::span<const std::uint8_t> bytes, std::vector<std::uint8_t>& rgb, std::size_t& width,
                     std::size_t& height, char* error) {
    jpeg_decompress_struct cinfo;
    JpegErrorManager err;
    cinfo.err = jpeg_std_error(&err.base);
    err.base.error_exit = jpeg_error_exit;
    err.base.emit_message = jpeg_warning_is_error;
    if (setjmp(err.jump)) {
        std::snprintf(error, JMSG_LENGTH_MAX, "%s", err.message);
        jpeg_destroy_decompress(&cinfo);
        return false;
    }
    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);
    width = cinfo.output_width;
    height = cinfo.output_height;
    rgb.resize(width * height * 3);
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = rgb.data() + static_cast<std::size_t>(cinfo.output_scanline) * width * 3;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return true;
}

RasterImage decode_jpeg(std::span<const std::uint8_t> bytes) {
    std::vector<std::uint8_t> rgb;
    std::size_t w = 0, h = 0;
    char error[JMSG_LENGTH_MAX] = {0};
    if (!jpeg_decode_raw(bytes, rgb, w, h, error)) throw DecodeError(std::string("jpeg: ") + error);
    if (w == 0 || h == 0) throw DecodeError("jpeg: empty image");
    return RasterImage(w, h, std::move(rgb));
}

bool jpeg_encode_raw(const RasterImage& img, int quality, unsigned char** out, unsigned long* size, char* error) {
    jpeg_compress_struct cinfo;
    JpegErrorManager err;
    cinfo.err = jpeg_std_error(&err.base);
    err.base.error_exit = jpeg_error_exit;
    err.base.emit_message = jpeg_silent;
    if (setjmp(err.jump)) {
        std::snprintf(error, JMSG_LENGTH_MAX, "%s", err.message);
        jpeg_destroy_compress(&cinfo);
        return false;
    }
    jpeg_create_compress(&cinfo);
    jpeg_mem_dest(&cinfo, out, size);
    cinfo.image_width = static_cast<JDIMENSION>(img.width);
    cinfo.image_height = static_cast<JDIMENSION>(img.height);
    cinfo.input_components = 3;
    cinfo.in_color_space = JCS_RGB;
    jpeg_set_defaults(&cinfo);
    jpeg_set_quality(&cinfo, quality, TRUE);
    jpeg_start_compress(&cinfo, TRUE);
    while (cinfo.next_scanline < cinfo.image_height) {
        auto* row = const_cast<JSAMPROW>(img.pixels.data() + static_cast<std::size_t>(cinfo.next_scanline) * img.width * 3);
        jpeg_write_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_compress(&cinfo);
    jpeg_destroy_compress(&cinfo);
    return true;
}

std::uint8_t to_byte(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
}

void check_raster(const RasterImage& img) {
    if (img.width == 0 || img.height == 0 || img.pixels.size() != img.width * img.height * 3) {
        throw ValidationError("raster image buffer does not match its dimensions");
    }
}

}  // namespace

RasterImage::RasterImage(std::size_t w, std::size_t h) : width(w), height(h) {
    if (w == 0 || h == 0) throw ValidationError("image dimensions must be positive");
    pixels.assign(w * h * 3, 0);
}

RasterImage::RasterImage(std::size_t w, std::size_t h, std::vector<std::uint8_t> rgb)
    : width(w), height(h), pixels(std::move(rgb)) {
    check_raster(*this);
}

RasterImage decode_image(std::span<const std::uint8_t> bytes) {
    if (is_png(bytes)) return decode_png(bytes);
    if (is_jpeg(bytes)) return decode_jpeg(bytes);
    throw DecodeError("unsupported image format (expected PNG or JPEG)");
}

std::vector<std::uint8_t> encode_png(const RasterImage& img) {
    check_raster(img);
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width);
    image.height = static_cast<png_uint_32>(img.height);
    image.format = PNG_FORMAT_RGB;
    png_alloc_size_t size = 0;
    if (png_image_write_to_memory(&image, nullptr, &size, 0, img.pixels.data(), 0, nullptr) == 0) {
        throw IoError(std::string("png encode: ") + image.message);
    }
    std::vector<std::uint8_t> out(size);
    if (png_image_write_to_memory(&image, out.data(), &size, 0, img.pixels.data(), 0, nullptr) == 0) {
        throw IoError(std::string("png encode: ") + image.message);
    }
    out.resize(size);
    return out;
}

std::vector<std::uint8_t> encode_jpeg(const RasterImage& img, int quality) {
    check_raster(img);
    unsigned char* buffer = nullptr;
    unsigned long size = 0;
    char error[JMSG_LENGTH_MAX] = {0};
    const bool ok = jpeg_encode_raw(img, quality, &buffer, &size, error);
    std::vector<std::uint8_t> out;
    if (ok) out.assign(buffer, buffer + size);
    std::free(buffer);
    if (!ok) throw IoError(std::string("jpeg encode: ") + error);
    return out;
}

std::vector<std::uint8_t> encode_image(const RasterImage& img, ImageFormat format) {
    return format == ImageFormat::png ? encode_png(img) : encode_jpeg(img);
}

std::optional<ImageFormat> format_from_extension(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png") return ImageFormat::png;
    if (ext == ".jpg" || ext == ".jpeg") return ImageFormat::jpeg;
    return std::nullopt;
}

RasterImage load_image(const std::filesystem::path& path) {
    const auto bytes = detail::read_file(path);
    try {
        return decode_image(bytes);
    } catch (const DecodeError& e) {
        throw DecodeError(path.string() + ": " + e.what());
    }
}

void save_image(const RasterImage& img, const std::filesystem::path& path) {
    const auto format = format_from_extension(path);
    if (!format) throw ValidationError("cannot infer image format from " + path.string());
    detail::write_file_atomic(path, encode_image(img, *format));
}

RasterImage resize_bilinear(const RasterImage& img, std::size_t out_w, std::size_t out_h) {
    check_raster(img);
    if (out_w == 0 || out_h == 0) throw ValidationError("resize target dimensions must be positive");
    RasterImage out(out_w, out_h);
    const double sx = static_cast<double>(img.width) / static_cast<double>(out_w);
    const double sy = static_cast<double>(img.height) / static_cast<double>(out_h);
    const double max_x = static_cast<double>(img.width - 1), max_y = static_cast<double>(img.height - 1);

    std::vector<std::size_t> x0(out_w), x1(out_w);
    std::vector<double> fx(out_w);
    for (std::size_t x = 0; x < out_w; ++x) {
        const double src = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0, max_x);
        x0[x] = static_cast<std::size_t>(src);
        x1[x] = std::min(x0[x] + 1, img.width - 1);
        fx[x] = src - static_cast<double>(x0[x]);
    }
    for (std::size_t y = 0; y < out_h; ++y) {
        const double src_y = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0, max_y);
        const auto y0 = static_cast<std::size_t>(src_y);
        const std::size_t y1 = std::min(y0 + 1, img.height - 1);
        const double fy = src_y - static_cast<double>(y0);
        for (std::size_t x = 0; x < out_w; ++x) {
            const std::uint8_t* a = img.pixel(x0[x], y0);
            const std::uint8_t* b = img.pixel(x1[x], y0);
            const std::uint8_t* c = img.pixel(x0[x], y1);
            const std::uint8_t* d = img.pixel(x1[x], y1);
            std::uint8_t* o = out.pixel(x, y);
            for (int ch = 0; ch < 3; ++ch) {
                const double top = a[ch] + (b[ch] - a[ch]) * fx[x];
                const double bottom = c[ch] + (d[ch] - c[ch]) * fx[x];
                o[ch] = to_byte(top + (bottom - top) * fy);
            }
        }
    }
    return out;
}

Tensor preprocess(const RasterImage& img, std::size_t expected_size) {
    check_raster(img);
    if (img.width != expected_size || img.height != expected_size) {
        throw DimensionError("preprocess expects a " + std::to_string(expected_size) + "x" +
                             std::to_string(expected_size) + " image, got " + std::to_string(img.width) + "x" +
                             std::to_string(img.height));
    }
    Tensor out({img.height, img.width, 3});
    auto d = out.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = static_cast<float>(img.pixels[i]) / 127.5f - 1.0f;
    return out;
}

Tensor prepare_input(const RasterImage& img, std::size_t size) {
    if (img.width == size && img.height == size) return preprocess(img, size);
    return preprocess(resize_bilinear(img, size, size), size);
}

Tensor prepare_input(std::span<const std::uint8_t> bytes, std::size_t size) {
    return prepare_input(decode_image(bytes), size);
}

RasterImage rotate(const RasterImage& img, double degrees) {
    check_raster(img);
    const double theta = degrees * std::numbers::pi / 180.0;
    const double c = std::cos(theta), s = std::sin(theta);
    const double cx = (static_cast<double>(img.width) - 1.0) / 2.0;
    const double cy = (static_cast<double>(img.height) - 1.0) / 2.0;
    const double max_x = static_cast<double>(img.width - 1), max_y = static_cast<double>(img.height - 1);
    constexpr double slack = 1e-6;

    RasterImage out(img.width, img.height);
    for (std::size_t y = 0; y < img.height; ++y) {
        for (std::size_t x = 0; x < img.width; ++x) {
            const double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
            double sx = c * dx - s * dy + cx;
            double sy = s * dx + c * dy + cy;
            if (sx < -slack || sy < -slack || sx > max_x + slack || sy > max_y + slack) continue;
            sx = std::clamp(sx, 0.0, max_x);
            sy = std::clamp(sy, 0.0, max_y);
            const auto x0 = static_cast<std::size_t>(sx), y0 = static_cast<std::size_t>(sy);
            const std::size_t x1 = std::min(x0 + 1, img.width - 1), y1 = std::min(y0 + 1, img.height - 1);
            const double fx = sx - static_cast<double>(x0), fy = sy - static_cast<double>(y0);
            const std::uint8_t* a = img.pixel(x0, y0);
            const std::uint8_t* b = img.pixel(x1, y0);
            const std::uint8_t* cc = img.pixel(x0, y1);
            const std::uint8_t* d = img.pixel(x1, y1);
            std::uint8_t* o = out.pixel(x, y);
            for (int ch = 0; ch < 3; ++ch) {
                const double top = a[ch] + (b[ch] - a[ch]) * fx;
                const double bottom = cc[ch] + (d[ch] - cc[ch]) * fx;
                o[ch] = to_byte(top + (bottom - top) * fy);
            }
        }
    }
    return out;
}

RasterImage reflect(const RasterImage& img, ReflectAxis axis) {
    check_raster(img);
    RasterImage out(img.width, img.height);
    for (std::size_t y = 0; y < img.height; ++y) {
        for (std::size_t x = 0; x < img.width; ++x) {
            const std::size_t sx = axis == ReflectAxis::horizontal ? img.width - 1 - x : x;
            const std::size_t sy = axis == ReflectAxis::vertical ? img.height - 1 - y : y;
            std::copy_n(img.pixel(sx, sy), 3, out.pixel(x, y));
        }
    }
    return out;
}

}  // namespace finclass
