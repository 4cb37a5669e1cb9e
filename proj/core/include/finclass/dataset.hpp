// Copyright (C) 2026 The finclass Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "finclass/imaging.hpp"

namespace finclass {

/// The nine class labels of the marine-species task, in table order.
inline const std::vector<std::string>& marine_class_names() {
    static const std::vector<std::string> names = {
        "Black Sea Sprat", "Gilt-Head Bream", "Horse Mackerel",     "Red Mullet", "Red Sea Bream",
        "Sea Bass",        "Shrimp",          "Striped Red Mullet", "Trout",
    };
    return names;
}

struct LabeledSample {
    std::variant<std::filesystem::path, RasterImage> source;
    std::size_t label = 0;

    RasterImage image() const;
    std::string describe() const;
};

struct LabeledDataset {
    std::vector<std::string> class_names;
    std::vector<LabeledSample> samples;

    std::vector<std::size_t> labels() const;
    std::vector<std::size_t> class_counts() const;
};

/// Lists image files (png/jpg/jpeg) directly inside `dir`, sorted by name.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

/// Loads a class-per-subdirectory tree (sorted directory names form the class
/// table), or the `manifest.tsv` inside `root` when one exists, or `root`
/// itself when it is a manifest file. Throws DatasetError if nothing is found.
LabeledDataset load_labeled_dataset(const std::filesystem::path& root);

}  // namespace finclass
