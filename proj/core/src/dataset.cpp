// Copyright (C) 2026 The finclass Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "finclass/dataset.hpp"

#include <algorithm>
#include <set>

#include "finclass/augment.hpp"
#include "finclass/error.hpp"

namespace finclass {

namespace fs = std::filesystem;

RasterImage LabeledSample::image() const {
    if (const auto* img = std::get_if<RasterImage>(&source)) return *img;
    return load_image(std::get<fs::path>(source));
}

std::string LabeledSample::describe() const {
    if (const auto* p = std::get_if<fs::path>(&source)) return p->string();
    return "<in-memory image>";
}

std::vector<std::size_t> LabeledDataset::labels() const {
    std::vector<std::size_t> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.label);
    return out;
}

std::vector<std::size_t> LabeledDataset::class_counts() const {
    std::vector<std::size_t> counts(class_names.size(), 0);
    for (const auto& s : samples) ++counts.at(s.label);
    return counts;
}

std::vector<fs::path> list_images(const fs::path& dir) {
    std::vector<fs::path> out;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(dir, ec)) {
        if (!entry.is_regular_file()) continue;
        const auto name = entry.path().filename().string();
        if (name.empty() || name.front() == '.') continue;
        if (format_from_extension(entry.path())) out.push_back(entry.path());
    }
    if (ec) throw IoError("cannot list " + dir.string() + ": " + ec.message());
    std::sort(out.begin(), out.end());
    return out;
}

namespace {

LabeledDataset from_manifest(const fs::path& manifest_path) {
    const Manifest manifest = read_manifest(manifest_path);
    const fs::path base = manifest_path.parent_path();
    std::set<std::string> names;
    for (const auto& e : manifest.entries) names.insert(e.class_name);
    LabeledDataset ds;
    ds.class_names.assign(names.begin(), names.end());
    for (const auto& e : manifest.entries) {
        const auto it = std::lower_bound(ds.class_names.begin(), ds.class_names.end(), e.class_name);
        ds.samples.push_back({base / e.output_path, static_cast<std::size_t>(it - ds.class_names.begin())});
    }
    return ds;
}

}  // namespace

LabeledDataset load_labeled_dataset(const fs::path& root) {
    std::error_code ec;
    if (fs::is_regular_file(root, ec)) return from_manifest(root);
    if (!fs::is_directory(root, ec)) throw IoError("dataset path " + root.string() + " is not a directory");
    if (fs::is_regular_file(root / kManifestFileName, ec)) return from_manifest(root / kManifestFileName);

    std::vector<fs::path> class_dirs;
    for (const auto& entry : fs::directory_iterator(root)) {
        const auto name = entry.path().filename().string();
        if (entry.is_directory() && !name.empty() && name.front() != '.') class_dirs.push_back(entry.path());
    }
    std::sort(class_dirs.begin(), class_dirs.end());
    LabeledDataset ds;
    for (const auto& dir : class_dirs) {
        const auto images = list_images(dir);
        if (images.empty()) continue;
        const std::size_t label = ds.class_names.size();
        ds.class_names.push_back(dir.filename().string());
        for (const auto& p : images) ds.samples.push_back({p, label});
    }
    if (ds.samples.empty()) throw ValidationError("no labeled images found under " + root.string());
    return ds;
}

}  // namespace finclass
