// Copyright (C) 2026 The finclass Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "finclass/augment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "binary_io.hpp"
#include "finclass/dataset.hpp"
#include "finclass/error.hpp"
#include "finclass/imaging.hpp"
#include "finclass/rng.hpp"

namespace finclass {

namespace fs = std::filesystem;

namespace {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

// Grid of tenths of a degree strictly inside (min_angle, max_angle).
std::pair<long, long> angle_grid(const AugmentPlan& plan) {
    const long lo = static_cast<long>(std::floor(plan.min_angle * 10.0 + 1e-9)) + 1;
    const long hi = static_cast<long>(std::ceil(plan.max_angle * 10.0 - 1e-9)) - 1;
    return {lo, hi};
}

std::string format_angle(double degrees) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", degrees);
    return buf;
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto tab = line.find('\t', start);
        out.push_back(line.substr(start, tab - start));
        if (tab == std::string::npos) return out;
        start = tab + 1;
    }
}

}  // namespace

void AugmentPlan::validate() const {
    if (target_count == 0) throw ValidationError("target_count must be at least 1");
    if (!(min_angle >= 0.0 && max_angle <= 360.0 && min_angle < max_angle)) {
        throw ValidationError("rotation angle range must satisfy 0 <= min < max <= 360");
    }
    const auto [lo, hi] = angle_grid(*this);
    if (hi < lo) throw ValidationError("rotation angle range contains no 0.1 degree grid point");
}

std::string transform_name(Transform t) {
    switch (t) {
        case Transform::original: return "original";
        case Transform::rotate: return "rotate";
        case Transform::reflect_horizontal: return "reflect_horizontal";
        case Transform::reflect_vertical: return "reflect_vertical";
    }
    return "original";
}

Transform parse_transform(const std::string& name) {
    for (auto t : {Transform::original, Transform::rotate, Transform::reflect_horizontal, Transform::reflect_vertical}) {
        if (transform_name(t) == name) return t;
    }
    throw FormatError("unknown manifest transform '" + name + "'");
}

std::map<std::string, std::size_t> Manifest::class_counts() const {
    std::map<std::string, std::size_t> counts;
    for (const auto& e : entries) ++counts[e.class_name];
    return counts;
}

std::string Manifest::to_tsv() const {
    std::string out;
    for (const auto& e : entries) {
        out += e.output_path + '\t' + e.class_name + '\t' + e.source_path + '\t' + transform_name(e.transform) + '\t' +
               (e.angle ? format_angle(*e.angle) : std::string("-")) + '\n';
    }
    return out;
}

Manifest Manifest::from_tsv(const std::string& text) {
    Manifest m;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cols = split_tabs(line);
        if (cols.size() != 5) throw FormatError("manifest line " + std::to_string(line_no) + ": expected 5 columns");
        ManifestEntry e{cols[0], cols[1], cols[2], parse_transform(cols[3]), std::nullopt};
        if (cols[4] != "-") {
            double angle = 0.0;
            const auto [ptr, ec] = std::from_chars(cols[4].data(), cols[4].data() + cols[4].size(), angle);
            if (ec != std::errc() || ptr != cols[4].data() + cols[4].size()) {
                throw FormatError("manifest line " + std::to_string(line_no) + ": bad angle '" + cols[4] + "'");
            }
            e.angle = angle;
        }
        m.entries.push_back(std::move(e));
    }
    return m;
}

Manifest read_manifest(const fs::path& path) {
    const auto bytes = detail::read_file(path);
    return Manifest::from_tsv(std::string(bytes.begin(), bytes.end()));
}

void write_manifest(const Manifest& manifest, const fs::path& path) {
    const std::string text = manifest.to_tsv();
    detail::write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::vector<double> draw_unique_angles(std::size_t count, const AugmentPlan& plan, std::uint64_t stream_seed) {
    plan.validate();
    const auto [lo, hi] = angle_grid(plan);
    const auto slots = static_cast<std::size_t>(hi - lo + 1);
    if (count > slots) {
        throw ValidationError("cannot draw " + std::to_string(count) + " distinct angles from " +
                              std::to_string(slots) + " grid points");
    }
    Rng rng(stream_seed);
    std::set<long> used;
    std::vector<double> angles;
    angles.reserve(count);
    while (angles.size() < count) {
        const long tenths = lo + static_cast<long>(rng.index(slots));
        if (!used.insert(tenths).second) continue;
        angles.push_back(static_cast<double>(tenths) / 10.0);
    }
    return angles;
}

Manifest build_augmented_dataset(const fs::path& source_dir, const AugmentPlan& plan, const fs::path& out_dir) {
    plan.validate();
    std::error_code ec;
    if (!fs::is_directory(source_dir, ec)) throw IoError("source directory " + source_dir.string() + " not found");

    std::vector<fs::path> class_dirs;
    for (const auto& entry : fs::directory_iterator(source_dir)) {
        const auto name = entry.path().filename().string();
        if (entry.is_directory() && !name.empty() && name.front() != '.') class_dirs.push_back(entry.path());
    }
    std::sort(class_dirs.begin(), class_dirs.end());
    if (class_dirs.empty()) throw ValidationError("no class subdirectories in " + source_dir.string());

    // Validate every class before writing anything.
    std::vector<std::vector<fs::path>> sources;
    for (const auto& dir : class_dirs) {
        auto images = list_images(dir);
        if (images.empty()) throw ValidationError("class directory " + dir.string() + " holds no images");
        if (plan.target_count < images.size()) {
            throw ValidationError("target count " + std::to_string(plan.target_count) + " is below the " +
                                  std::to_string(images.size()) + " source images of " + dir.filename().string());
        }
        sources.push_back(std::move(images));
    }

    Manifest manifest;
    for (std::size_t c = 0; c < class_dirs.size(); ++c) {
        const std::string class_name = class_dirs[c].filename().string();
        const auto& files = sources[c];
        const std::size_t n = files.size();
        const std::size_t extra = plan.target_count - n;
        const std::size_t reflections = plan.include_reflections ? std::min(extra, 2 * n) : 0;
        const std::size_t rotations = extra - reflections;

        const fs::path class_out = out_dir / class_name;
        fs::create_directories(class_out, ec);
        if (ec) throw IoError("cannot create " + class_out.string() + ": " + ec.message());

        const std::uint64_t class_seed = plan.rng_seed ^ fnv1a(class_name);
        std::vector<ManifestEntry> reflected;
        for (std::size_t i = 0; i < n; ++i) {
            const fs::path& src = files[i];
            RasterImage img;
            try {
                img = load_image(src);
            } catch (const Error& e) {
                throw IoError("cannot read source image " + src.string() + ": " + e.what());
            }
            const std::string stem = src.stem().string();
            const std::string ext = src.extension().string();
            const std::string src_str = src.generic_string();
            auto emit = [&](const RasterImage& out_img, const std::string& suffix, Transform t,
                            std::optional<double> angle) {
                const std::string rel = class_name + "/" + stem + suffix + ext;
                save_image(out_img, out_dir / rel);
                return ManifestEntry{rel, class_name, src_str, t, angle};
            };

            manifest.entries.push_back(emit(img, "_orig", Transform::original, std::nullopt));

            const std::size_t my_rotations = rotations / n + (i < rotations % n ? 1 : 0);
            for (double angle : draw_unique_angles(my_rotations, plan, class_seed + 0x9E3779B97F4A7C15ull * (i + 1))) {
                manifest.entries.push_back(emit(rotate(img, angle), "_rot" + format_angle(angle), Transform::rotate, angle));
            }
            // Horizontal mirrors for the first sources, then vertical ones.
            if (i < reflections) {
                reflected.push_back(emit(reflect(img, ReflectAxis::horizontal), "_flip_h", Transform::reflect_horizontal,
                                         std::nullopt));
            }
            if (n + i < reflections) {
                reflected.push_back(emit(reflect(img, ReflectAxis::vertical), "_flip_v", Transform::reflect_vertical,
                                         std::nullopt));
            }
        }
        manifest.entries.insert(manifest.entries.end(), reflected.begin(), reflected.end());
    }
    write_manifest(manifest, out_dir / kManifestFileName);
    return manifest;
}

}  // namespace finclass
