// Copyright (C) 2026 The finclass Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <filesystem>
#include <memory>

#include "finclass/model_format.hpp"

namespace fixture {

/// Random-weight backbone plus a head trained on the synthetic 9-class set.
/// Built once per process.
const finclass::ModelBundle& trained_bundle();

/// Synthetic image of the given class that was not part of the training set.
finclass::RasterImage held_out_image(std::size_t class_index, std::size_t variant);

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag);
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const noexcept { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

}  // namespace fixture
