// Copyright (C) 2026 The finclass Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "finclass/tensor.hpp"

namespace finclass {

/// Named parameter arrays. Iteration order is lexicographic by name, which is
/// also the on-disk order.
class WeightStore {
public:
    using Map = std::map<std::string, Tensor>;

    WeightStore() = default;
    explicit WeightStore(Map entries) : entries_(std::move(entries)) {}

    bool contains(const std::string& name) const { return entries_.count(name) != 0; }
    std::size_t size() const noexcept { return entries_.size(); }

    /// Throws WeightError if the parameter is missing.
    const Tensor& get(const std::string& name) const;
    /// Throws WeightError naming the parameter, the expected and the actual shape.
    const Tensor& get(const std::string& name, const Shape& expected) const;

    void set(const std::string& name, Tensor value);

    const Map& entries() const noexcept { return entries_; }

    std::size_t parameter_count() const noexcept;

    /// CRC32 over names, shapes and raw float bits.
    std::uint32_t checksum() const;

    friend bool operator==(const WeightStore&, const WeightStore&) = default;

private:
    Map entries_;
};

inline constexpr char kWeightFileMagic[4] = {'F', 'H', 'W', 'T'};
inline constexpr std::uint16_t kWeightFileVersion = 1;

/// Little-endian blob: magic "FHWT", version u16, entry count u32, then per
/// entry name (u16 length + UTF-8), rank u8, dims u32[rank], float32 payload.
std::vector<std::uint8_t> encode_weights(const WeightStore& store);
WeightStore decode_weights(std::span<const std::uint8_t> bytes);

WeightStore load_weights(const std::filesystem::path& path);
void save_weights(const WeightStore& store, const std::filesystem::path& path);

}  // namespace finclass
