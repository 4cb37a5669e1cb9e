// Copyright (C) 2026 The finclass Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "binary_io.hpp"

#include <zlib.h>

#include <fstream>
#include <limits>
#include <system_error>

namespace finclass::detail {

void ByteWriter::short_string(const std::string& s) {
    if (s.size() > std::numeric_limits<std::uint16_t>::max()) throw ValidationError("name too long: " + s);
    u16(static_cast<std::uint16_t>(s.size()));
    bytes(s.data(), s.size());
}

void ByteWriter::tensor_entry(const std::string& name, const Tensor& t) {
    short_string(name);
    if (t.rank() > std::numeric_limits<std::uint8_t>::max()) throw ValidationError("rank too large for " + name);
    u8(static_cast<std::uint8_t>(t.rank()));
    for (auto d : t.shape()) {
        if (d > std::numeric_limits<std::uint32_t>::max()) throw ValidationError("dimension too large for " + name);
        u32(static_cast<std::uint32_t>(d));
    }
    bytes(t.data().data(), t.size() * sizeof(float));
}

std::string ByteReader::short_string() {
    const auto n = u16();
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
}

std::pair<std::string, Tensor> ByteReader::tensor_entry() {
    std::string name = short_string();
    const auto rank = u8();
    if (rank == 0) throw FormatError(context_ + ": parameter '" + name + "' has rank 0");
    Shape shape(rank);
    std::size_t count = 1;
    for (auto& d : shape) {
        d = u32();
        if (d == 0) throw FormatError(context_ + ": parameter '" + name + "' has a zero dimension");
        if (count > remaining() / d) throw FormatError(context_ + ": parameter '" + name + "' exceeds file size");
        count *= d;
    }
    if (count > remaining() / sizeof(float)) throw FormatError(context_ + ": unexpected end of data in '" + name + "'");
    std::vector<float> data(count);
    bytes(data.data(), count * sizeof(float));
    return {std::move(name), Tensor(std::move(shape), std::move(data))};
}

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
    uLong crc = ::crc32(0L, Z_NULL, 0);
    std::size_t offset = 0;
    while (offset < bytes.size()) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - offset, 1u << 30));
        crc = ::crc32(crc, bytes.data() + offset, chunk);
        offset += chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("failed reading " + path.string());
    return bytes;
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) {
            std::error_code ignored;
            std::filesystem::remove(tmp, ignored);
            throw IoError("failed writing " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError("cannot move " + tmp.string() + " to " + path.string());
    }
}

}  // namespace finclass::detail
