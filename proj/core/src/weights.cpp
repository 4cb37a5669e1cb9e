// Copyright (C) 2026 The finclass Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "finclass/weights.hpp"

#include <cstring>

#include "binary_io.hpp"
#include "finclass/error.hpp"

namespace finclass {

const Tensor& WeightStore::get(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw WeightError("missing parameter '" + name + "'");
    return it->second;
}

const Tensor& WeightStore::get(const std::string& name, const Shape& expected) const {
    const Tensor& t = get(name);
    if (t.shape() != expected) {
        throw WeightError("parameter '" + name + "' has shape " + shape_to_string(t.shape()) + ", expected " +
                          shape_to_string(expected));
    }
    return t;
}

void WeightStore::set(const std::string& name, Tensor value) { entries_.insert_or_assign(name, std::move(value)); }

std::size_t WeightStore::parameter_count() const noexcept {
    std::size_t n = 0;
    for (const auto& [_, t] : entries_) n += t.size();
    return n;
}

std::uint32_t WeightStore::checksum() const {
    detail::ByteWriter w;
    for (const auto& [name, t] : entries_) w.tensor_entry(name, t);
    return detail::crc32(w.buffer());
}

std::vector<std::uint8_t> encode_weights(const WeightStore& store) {
    detail::ByteWriter w;
    w.bytes(kWeightFileMagic, sizeof(kWeightFileMagic));
    w.u16(kWeightFileVersion);
    w.u32(static_cast<std::uint32_t>(store.size()));
    for (const auto& [name, t] : store.entries()) w.tensor_entry(name, t);
    return std::move(w.buffer());
}

WeightStore decode_weights(std::span<const std::uint8_t> bytes) {
    detail::ByteReader r(bytes, "weight file");
    char magic[4];
    if (bytes.size() < sizeof(magic)) throw FormatError("weight file: too short for magic");
    r.bytes(magic, sizeof(magic));
    if (std::memcmp(magic, kWeightFileMagic, sizeof(magic)) != 0) throw FormatError("weight file: bad magic");
    const auto version = r.u16();
    if (version != kWeightFileVersion) {
        throw FormatError("weight file: unsupported version " + std::to_string(version));
    }
    const auto count = r.u32();
    WeightStore::Map entries;
    for (std::uint32_t i = 0; i < count; ++i) {
        auto [name, tensor] = r.tensor_entry();
        if (!entries.emplace(name, std::move(tensor)).second) {
            throw FormatError("weight file: duplicate parameter '" + name + "'");
        }
    }
    if (r.remaining() != 0) throw FormatError("weight file: trailing bytes after last entry");
    return WeightStore(std::move(entries));
}

WeightStore load_weights(const std::filesystem::path& path) { return decode_weights(detail::read_file(path)); }

void save_weights(const WeightStore& store, const std::filesystem::path& path) {
    detail::write_file_atomic(path, encode_weights(store));
}

}  // namespace finclass
