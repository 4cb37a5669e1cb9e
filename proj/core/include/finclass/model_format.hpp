// Copyright (C) 2026 The finclass Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "finclass/backbone.hpp"
#include "finclass/head.hpp"
#include "finclass/imaging.hpp"
#include "finclass/weights.hpp"

namespace finclass {

inline constexpr char kModelFileMagic[4] = {'F', 'H', 'K', 'M'};
inline constexpr std::uint16_t kModelFileVersion = 1;

struct BundleMetadata {
    /// Seconds since the Unix epoch; 0 unless the exporter stamps a time.
    std::int64_t created_unix = 0;
    /// Hex digest of the training configuration that produced the head.
    std::string config_hash;

    friend bool operator==(const BundleMetadata&, const BundleMetadata&) = default;
};

/// A complete inference model: classifier graph, folded weights (backbone and
/// head), class table and build metadata.
struct ModelBundle {
    std::uint16_t version = kModelFileVersion;
    ModelGraph graph;
    WeightStore weights;
    BundleMetadata metadata;
    HeadParams head;

    const std::vector<std::string>& class_names() const noexcept { return graph.class_names; }

    /// Checks every invariant: classifier graph, parameters present with the
    /// declared shapes and nothing else, head consistent with the graph.
    void validate() const;
};

/// Builds an in-memory bundle from a backbone graph, its folded weights and a
/// trained head. Throws WeightError when a parameter is missing.
ModelBundle make_bundle(const ModelGraph& backbone, const WeightStore& folded, const HeadParams& head,
                        std::vector<std::string> class_names, BundleMetadata metadata = {});

/// Little-endian: magic "FHKM", version u16, u32-length JSON block (topology,
/// class table, metadata), u32 parameter count and per-parameter name, rank,
/// dims, float32 data, then a CRC32 of every preceding byte.
std::vector<std::uint8_t> encode_bundle(const ModelBundle& bundle);
ModelBundle decode_bundle(std::span<const std::uint8_t> bytes);

/// Writes the bundle atomically; nothing is created on failure.
void export_model(const ModelGraph& backbone, const WeightStore& folded, const HeadParams& head,
                  std::vector<std::string> class_names, const std::filesystem::path& path,
                  BundleMetadata metadata = {});
void save_bundle(const ModelBundle& bundle, const std::filesystem::path& path);

ModelBundle load_model(const std::filesystem::path& path);

/// Short identifier derived from the encoded bundle's CRC.
std::string model_version(const ModelBundle& bundle);

struct Classification {
    std::string label;
    std::size_t class_index = 0;
    float confidence = 0.0f;
    std::vector<float> probabilities;

    friend bool operator==(const Classification&, const Classification&) = default;
};

Classification classify_probabilities(const ModelBundle& bundle, const Tensor& probabilities);

/// decode -> resize 224x224 -> preprocess -> backbone -> head.
Classification predict(const ModelBundle& bundle, std::span<const std::uint8_t> image_bytes);
Classification predict(const ModelBundle& bundle, const RasterImage& image);

}  // namespace finclass
