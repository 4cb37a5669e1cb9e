// Copyright (C) 2026 The finclass Authors
// SPDX-License-Identifier: Apache-2.0
//
// Writes a deterministic synthetic class-per-directory image tree for demos
// and tests: finclass-fixtures <out_dir> [--per-class N] [--classes K] [--seed S]

#include <CLI11.hpp>

#include <iostream>

#include "finclass/error.hpp"
#include "finclass/synthetic.hpp"

int main(int argc, char** argv) {
    std::string out_dir;
    std::size_t per_class = 10;
    std::size_t classes = 9;
    std::uint64_t seed = finclass::kDefaultSeed;
    CLI::App app{"synthetic labeled image tree generator", "finclass-fixtures"};
    app.add_option("out_dir", out_dir)->required();
    app.add_option("--per-class", per_class)->capture_default_str();
    app.add_option("--classes", classes)->capture_default_str();
    app.add_option("--seed", seed)->capture_default_str();
    CLI11_PARSE(app, argc, argv);
    try {
        finclass::write_synthetic_tree(out_dir, per_class, seed, classes);
        std::cout << "wrote " << per_class * classes << " images to " << out_dir << "\n";
    } catch (const finclass::Error& e) {
        std::cerr << finclass::error_kind_name(e.kind()) << " error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
