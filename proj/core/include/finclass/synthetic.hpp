// Copyright (C) 2026 The finclass Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>

#include "finclass/backbone.hpp"
#include "finclass/dataset.hpp"
#include "finclass/imaging.hpp"
#include "finclass/weights.hpp"

namespace finclass {

inline constexpr std::uint64_t kDefaultSeed = 20230401;

/// Seeded stand-in for pretrained weights: He-scaled convolutions plus mild
/// per-channel batch-norm statistics (`<conv>.bn.*`) for attach_weights to fold.
WeightStore random_backbone_weights(const ModelGraph& graph, std::uint64_t seed = kDefaultSeed);

/// One image of a class-distinct color/texture pattern. Different `variant`
/// values jitter phase, position, tint and noise.
RasterImage synthetic_image(std::size_t class_index, std::uint64_t variant, std::size_t width = 128,
                            std::size_t height = 96);

/// In-memory dataset over marine_class_names(), `per_class` images each.
LabeledDataset synthetic_dataset(std::size_t per_class, std::uint64_t seed = kDefaultSeed,
                                 std::size_t classes = 9);

/// Writes the same images as PNG files in a class-per-subdirectory tree.
void write_synthetic_tree(const std::filesystem::path& root, std::size_t per_class, std::uint64_t seed = kDefaultSeed,
                          std::size_t classes = 9);

}  // namespace finclass
