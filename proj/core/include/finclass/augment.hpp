// Copyright (C) 2026 The finclass Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace finclass {

struct AugmentPlan {
    std::size_t target_count = 1100;
    /// Open interval in degrees; angles are drawn on a 0.1 degree grid.
    double min_angle = 0.0;
    double max_angle = 360.0;
    bool include_reflections = true;
    std::uint64_t rng_seed = 20230401;

    void validate() const;
};

enum class Transform { original, rotate, reflect_horizontal, reflect_vertical };

std::string transform_name(Transform t);
Transform parse_transform(const std::string& name);

struct ManifestEntry {
    std::string output_path;  // relative to the manifest's directory
    std::string class_name;
    std::string source_path;
    Transform transform = Transform::original;
    std::optional<double> angle;  // degrees, rotations only

    friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct Manifest {
    std::vector<ManifestEntry> entries;

    std::map<std::string, std::size_t> class_counts() const;

    /// Tab-separated: output_path, class, source_path, transform, angle
    /// ("-" when not a rotation). One line per entry, no header.
    std::string to_tsv() const;
    static Manifest from_tsv(const std::string& text);

    friend bool operator==(const Manifest&, const Manifest&) = default;
};

inline constexpr const char* kManifestFileName = "manifest.tsv";

Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);

/// Rotation angles for `count` variants of one source: distinct values on the
/// 0.1 degree grid inside the plan's open interval, drawn by rejection.
std::vector<double> draw_unique_angles(std::size_t count, const AugmentPlan& plan, std::uint64_t stream_seed);

/// For every class subdirectory of `source_dir`, writes originals, uniquely
/// angled rotations and reflections to `out_dir/<class>/` until each class
/// holds plan.target_count images, then writes `out_dir/manifest.tsv`.
Manifest build_augmented_dataset(const std::filesystem::path& source_dir, const AugmentPlan& plan,
                                 const std::filesystem::path& out_dir);

}  // namespace finclass
