// Copyright (C) 2026 The finclass Authors
// SPDX-License-Identifier: Apache-2.0
//

#include <gtest/gtest.h>

#include <fstream>

#include "finclass/augment.hpp"
#include "finclass/dataset.hpp"
#include "finclass/error.hpp"
#include "finclass/imaging.hpp"
#include "finclass/synthetic.hpp"
#include "support/fixture.hpp"

using namespace finclass;
namespace fs = std::filesystem;

TEST(ClassTable, NineMarineLabels) {
    const auto& names = marine_class_names();
    ASSERT_EQ(names.size(), 9u);
    EXPECT_EQ(names.front(), "Black Sea Sprat");
    EXPECT_EQ(names.back(), "Trout");
    EXPECT_TRUE(std::is_sorted(names.begin(), names.end()));
}

TEST(ListImages, SortedFilteredAndSkipsHidden) {
    fixture::TempDir dir("dataset");
    const RasterImage img(4, 4);
    for (const char* name : {"b.png", "a.jpg", "c.JPEG", ".hidden.png"}) save_image(img, dir / name);
    std::ofstream(dir / "notes.txt") << "x";
    fs::create_directory(dir / "sub.png");
    const auto files = list_images(dir.path());
    ASSERT_EQ(files.size(), 3u);
    EXPECT_EQ(files[0].filename(), "a.jpg");
    EXPECT_EQ(files[1].filename(), "b.png");
    EXPECT_EQ(files[2].filename(), "c.JPEG");
}

TEST(LoadDataset, ClassDirectoriesInNameOrder) {
    fixture::TempDir dir("dataset");
    write_synthetic_tree(dir.path(), 2, 1, 3);
    const auto ds = load_labeled_dataset(dir.path());
    EXPECT_EQ(ds.class_names, (std::vector<std::string>{"Black Sea Sprat", "Gilt-Head Bream", "Horse Mackerel"}));
    EXPECT_EQ(ds.class_counts(), (std::vector<std::size_t>{2, 2, 2}));
    EXPECT_EQ(ds.labels(), (std::vector<std::size_t>{0, 0, 1, 1, 2, 2}));
    EXPECT_EQ(ds.samples[0].image().width, 128u);
}

TEST(LoadDataset, ManifestFormIsPreferred) {
    fixture::TempDir dir("dataset");
    write_synthetic_tree(dir / "src", 2, 1, 2);
    AugmentPlan plan;
    plan.target_count = 5;
    const auto manifest = build_augmented_dataset(dir / "src", plan, dir / "out");
    const auto from_dir = load_labeled_dataset(dir / "out");
    const auto from_file = load_labeled_dataset(dir / "out" / kManifestFileName);
    EXPECT_EQ(from_dir.samples.size(), 10u);
    EXPECT_EQ(from_file.samples.size(), 10u);
    EXPECT_EQ(from_dir.class_counts(), (std::vector<std::size_t>{5, 5}));
    for (const auto& s : from_dir.samples) EXPECT_NO_THROW(s.image());
}

TEST(LoadDataset, Errors) {
    fixture::TempDir dir("dataset");
    EXPECT_THROW(load_labeled_dataset(dir / "missing"), IoError);
    EXPECT_THROW(load_labeled_dataset(dir.path()), ValidationError);
    fs::create_directory(dir / "empty_class");
    EXPECT_THROW(load_labeled_dataset(dir.path()), ValidationError);
}

TEST(Synthetic, DeterministicAndClassDistinct) {
    EXPECT_EQ(synthetic_image(2, 5), synthetic_image(2, 5));
    EXPECT_NE(synthetic_image(2, 5), synthetic_image(2, 6));
    EXPECT_NE(synthetic_image(2, 5), synthetic_image(3, 5));
    const auto a = synthetic_dataset(3, 9);
    const auto b = synthetic_dataset(3, 9);
    ASSERT_EQ(a.samples.size(), 27u);
    for (std::size_t i = 0; i < a.samples.size(); ++i) EXPECT_EQ(a.samples[i].image(), b.samples[i].image());
    EXPECT_EQ(a.class_names, marine_class_names());
}
