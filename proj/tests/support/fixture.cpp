// Copyright (C) 2026 The finclass Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "fixture.hpp"

#include <atomic>
#include <random>
#include <unistd.h>

#include "finclass/backbone.hpp"
#include "finclass/dataset.hpp"
#include "finclass/head.hpp"
#include "finclass/synthetic.hpp"
#include "finclass/trainer.hpp"

namespace fixture {

namespace fs = std::filesystem;

const finclass::ModelBundle& trained_bundle() {
    static const finclass::ModelBundle bundle = [] {
        const auto graph = finclass::build_backbone();
        const auto folded = finclass::attach_weights(graph, finclass::random_backbone_weights(graph, 7));
        const auto dataset = finclass::synthetic_dataset(16, 11);
        finclass::TrainConfig config;
        config.max_epochs = 50;
        config.early_stop_patience = 50;
        config.rng_seed = 5;
        const auto result = finclass::train(graph, folded, dataset, config);
        return finclass::make_bundle(graph, folded, result.head, dataset.class_names);
    }();
    return bundle;
}

finclass::RasterImage held_out_image(std::size_t class_index, std::size_t variant) {
    return finclass::synthetic_image(class_index, 0x5eed0000ull + variant);
}

TempDir::TempDir(const std::string& tag) {
    static std::atomic<unsigned> counter{0};
    path_ = fs::temp_directory_path() /
            ("finclass_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

}  // namespace fixture
