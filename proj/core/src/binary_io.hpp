// Copyright (C) 2026 The finclass Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "finclass/error.hpp"
#include "finclass/tensor.hpp"

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

namespace finclass::detail {

class ByteWriter {
public:
    void bytes(const void* src, std::size_t n) {
        const auto* p = static_cast<const std::uint8_t*>(src);
        buffer_.insert(buffer_.end(), p, p + n);
    }
    template <typename T>
    void pod(T value) {
        bytes(&value, sizeof(T));
    }
    void u8(std::uint8_t v) { pod(v); }
    void u16(std::uint16_t v) { pod(v); }
    void u32(std::uint32_t v) { pod(v); }

    void short_string(const std::string& s);
    /// name, rank u8, dims u32[], float32 payload
    void tensor_entry(const std::string& name, const Tensor& t);

    std::vector<std::uint8_t>& buffer() noexcept { return buffer_; }

private:
    std::vector<std::uint8_t> buffer_;
};

/// Bounds-checked cursor; every overrun raises FormatError with `context`.
class ByteReader {
public:
    ByteReader(std::span<const std::uint8_t> data, std::string context)
        : data_(data), context_(std::move(context)) {}

    void bytes(void* dst, std::size_t n) {
        require(n);
        std::memcpy(dst, data_.data() + pos_, n);
        pos_ += n;
    }
    template <typename T>
    T pod() {
        T value;
        bytes(&value, sizeof(T));
        return value;
    }
    std::uint8_t u8() { return pod<std::uint8_t>(); }
    std::uint16_t u16() { return pod<std::uint16_t>(); }
    std::uint32_t u32() { return pod<std::uint32_t>(); }

    std::string short_string();
    std::pair<std::string, Tensor> tensor_entry();

    std::size_t position() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return data_.size() - pos_; }

private:
    void require(std::size_t n) const {
        if (data_.size() - pos_ < n) throw FormatError(context_ + ": unexpected end of data");
    }

    std::span<const std::uint8_t> data_;
    std::string context_;
    std::size_t pos_ = 0;
};

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it into place, so a failed
/// write never leaves a partial file at `path`.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace finclass::detail
