// Copyright (C) 2026 The finclass Authors
// SPDX-License-Identifier: Apache-2.0
//

#include <gtest/gtest.h>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <fstream>
#include <future>

#include "finclass/dataset.hpp"
#include "finclass/error.hpp"
#include "finclass/imaging.hpp"
#include "finclass/service.hpp"
#include "support/fixture.hpp"

using namespace finclass;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::shared_ptr<const ModelBundle> fixture_model() {
    static const auto ptr = std::make_shared<const ModelBundle>(fixture::trained_bundle());
    return ptr;
}

ServiceConfig any_port() {
    ServiceConfig c;
    c.port = 0;
    return c;
}

std::string png_string(const RasterImage& img) {
    const auto bytes = encode_png(img);
    return {bytes.begin(), bytes.end()};
}

std::vector<std::string> lines_of(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::string> out;
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

std::size_t count_files(const fs::path& dir) {
    if (!fs::exists(dir)) return 0;
    return static_cast<std::size_t>(std::distance(fs::directory_iterator(dir), fs::directory_iterator{}));
}

}  // namespace

TEST(Service, ClassifyRawBodyRecognizesSprat) {
    ClassifyService service(any_port(), fixture_model());
    service.start();
    httplib::Client client("127.0.0.1", service.port());
    const auto res = client.Post("/classify", png_string(fixture::held_out_image(0, 1)), "image/png");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 200);
    const auto j = json::parse(res->body);
    EXPECT_EQ(j["label"], "Black Sea Sprat");
    EXPECT_GE(j["confidence"].get<double>(), 0.5);
    EXPECT_EQ(j["class_index"], 0);
    EXPECT_EQ(j["probabilities"].size(), 9u);
    EXPECT_EQ(j["model_version"], service.model().version());
    EXPECT_TRUE(j.contains("processing_ms"));
}

TEST(Service, MultipartUploadMatchesRawBody) {
    ClassifyService service(any_port(), fixture_model());
    service.start();
    httplib::Client client("127.0.0.1", service.port());
    const std::string body = png_string(fixture::held_out_image(4, 2));
    const auto raw = client.Post("/classify", body, "application/octet-stream");
    httplib::MultipartFormDataItems items{{"image", body, "fish.png", "image/png"}};
    const auto multi = client.Post("/classify", items);
    ASSERT_TRUE(raw && multi);
    EXPECT_EQ(multi->status, 200);
    auto a = json::parse(raw->body), b = json::parse(multi->body);
    a.erase("processing_ms");
    b.erase("processing_ms");
    EXPECT_EQ(a, b);
}

TEST(Service, NonImageBytesGive400) {
    ClassifyService service(any_port(), fixture_model());
    service.start();
    httplib::Client client("127.0.0.1", service.port());
    const auto res = client.Post("/classify", "this is not an image", "image/png");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 400);
    EXPECT_EQ(json::parse(res->body)["error"], "decode");
    const auto empty = client.Post("/classify", "", "image/png");
    ASSERT_TRUE(empty);
    EXPECT_EQ(empty->status, 400);
}

TEST(Service, OversizedBodyRejected) {
    ServiceConfig config = any_port();
    config.max_body_bytes = 1024;
    ClassifyService service(config, fixture_model());
    EXPECT_EQ(service.classify(std::string(2048, 'x')).status, 413);
    service.start();
    httplib::Client client("127.0.0.1", service.port());
    const auto res = client.Post("/classify", std::string(4096, 'x'), "image/png");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 413);
}

TEST(Service, LabelsAndHealth) {
    ClassifyService service(any_port(), fixture_model());
    service.start();
    httplib::Client client("127.0.0.1", service.port());
    const auto labels = client.Get("/labels");
    ASSERT_TRUE(labels);
    EXPECT_EQ(json::parse(labels->body)["labels"].get<std::vector<std::string>>(), marine_class_names());
    const auto h1 = json::parse(client.Get("/health")->body);
    const auto h2 = json::parse(client.Get("/health")->body);
    EXPECT_EQ(h1["status"], "ok");
    EXPECT_EQ(h1["model_version"], h2["model_version"]);
    EXPECT_LE(h1["uptime_s"].get<double>(), h2["uptime_s"].get<double>());
}

TEST(Service, ConcurrentRequestsAreIdentical) {
    ClassifyService service(any_port(), fixture_model());
    service.start();
    const std::string body = png_string(fixture::held_out_image(7, 3));
    std::vector<std::future<std::string>> futures;
    for (int i = 0; i < 16; ++i) {
        futures.push_back(std::async(std::launch::async, [&] {
            httplib::Client client("127.0.0.1", service.port());
            client.set_read_timeout(120, 0);
            const auto res = client.Post("/classify", body, "image/png");
            if (!res) return "failed: " + httplib::to_string(res.error());
            if (res->status != 200) return "status " + std::to_string(res->status);
            auto j = json::parse(res->body);
            j.erase("processing_ms");
            return j.dump();
        }));
    }
    std::vector<std::string> results;
    for (auto& f : futures) results.push_back(f.get());
    for (const auto& r : results) EXPECT_EQ(r, results.front());
    const auto direct = predict(*fixture_model(), encode_png(fixture::held_out_image(7, 3)));
    const auto j = json::parse(results.front());
    EXPECT_EQ(j["label"], direct.label);
    EXPECT_EQ(j["confidence"].get<float>(), direct.confidence);
}

TEST(Service, BusyPortIsABindError) {
    ClassifyService first(any_port(), fixture_model());
    first.start();
    ServiceConfig config;
    config.port = first.port();
    ClassifyService second(config, fixture_model());
    EXPECT_THROW(second.start(), BindError);
}

TEST(Service, UnloadableBundleFailsAtStartup) {
    fixture::TempDir dir("service");
    std::ofstream(dir / "bad.fhkm") << "garbage";
    ServiceConfig config = any_port();
    config.model_path = dir / "bad.fhkm";
    EXPECT_THROW(ClassifyService{config}, FormatError);
}

TEST(Service, ReloadSwapsModelAndKeepsOldOnFailure) {
    fixture::TempDir dir("service");
    ServiceConfig config = any_port();
    config.model_path = dir / "m.fhkm";
    save_bundle(*fixture_model(), config.model_path);
    ClassifyService service(config);
    const auto v1 = service.model().version();

    ModelBundle changed = *fixture_model();
    changed.metadata.config_hash = "retrained";
    save_bundle(changed, config.model_path);
    service.reload();
    const auto v2 = service.model().version();
    EXPECT_NE(v1, v2);

    std::ofstream(config.model_path, std::ios::trunc) << "broken";
    EXPECT_THROW(service.reload(), FormatError);
    EXPECT_EQ(service.model().version(), v2);
}

TEST(Ingest, ThreeValidImagesProcessedExactlyOnce) {
    fixture::TempDir dir("ingest");
    fs::create_directories(dir / "drop");
    const fs::path sink = dir / "results.tsv";
    IngestWorker worker(dir / "drop", fixture_model, sink);
    EXPECT_TRUE(worker.poll_once().empty());
    EXPECT_FALSE(fs::exists(sink));
    for (int i = 0; i < 3; ++i) save_image(fixture::held_out_image(static_cast<std::size_t>(i), 9), dir / "drop" / ("img" + std::to_string(i) + ".png"));
    const auto records = worker.poll_once();
    ASSERT_EQ(records.size(), 3u);
    for (const auto& r : records) {
        EXPECT_TRUE(r.error.empty());
        EXPECT_FALSE(r.timestamp.empty());
    }
    EXPECT_EQ(records[0].label, "Black Sea Sprat");
    EXPECT_EQ(lines_of(sink).size(), 3u);
    EXPECT_EQ(count_files(dir / "drop" / "done"), 3u);
    EXPECT_TRUE(worker.poll_once().empty());

    // A restarted worker never revisits done/.
    IngestWorker restarted(dir / "drop", fixture_model, sink);
    EXPECT_TRUE(restarted.poll_once().empty());
    EXPECT_EQ(lines_of(sink).size(), 3u);
}

TEST(Ingest, CorruptFileGoesToFailedAndWorkerContinues) {
    fixture::TempDir dir("ingest");
    fs::create_directories(dir / "drop");
    const fs::path sink = dir / "results.tsv";
    IngestWorker worker(dir / "drop", fixture_model, sink);
    std::ofstream(dir / "drop" / "broken.png") << "not an image";
    std::ofstream(dir / "drop" / "partial.png.tmp") << "still uploading";
    const auto records = worker.poll_once();
    ASSERT_EQ(records.size(), 1u);
    EXPECT_FALSE(records[0].error.empty());
    EXPECT_TRUE(fs::exists(dir / "drop" / "failed" / "broken.png"));
    EXPECT_TRUE(fs::exists(dir / "drop" / "failed" / "broken.png.error.txt"));
    EXPECT_TRUE(fs::exists(dir / "drop" / "partial.png.tmp"));
    const auto line = lines_of(sink).at(0);
    EXPECT_EQ(line.rfind("broken.png\t-\t-\t", 0), 0u) << line;

    save_image(fixture::held_out_image(1, 4), dir / "drop" / "good.png");
    EXPECT_EQ(worker.poll_once().size(), 1u);
    EXPECT_EQ(worker.processed(), 2u);
}

TEST(Ingest, BackgroundRunPicksUpNewFiles) {
    fixture::TempDir dir("ingest");
    fs::create_directories(dir / "drop");
    auto worker = std::make_shared<IngestWorker>(dir / "drop", fixture_model, dir / "results.tsv");
    std::jthread thread([worker](std::stop_token st) { worker->run(st, std::chrono::milliseconds(50)); });
    save_image(fixture::held_out_image(2, 2), dir / "staged.png");
    fs::rename(dir / "staged.png", dir / "drop" / "x.png");
    for (int i = 0; i < 200 && worker->processed() < 1; ++i) std::this_thread::sleep_for(std::chrono::milliseconds(50));
    thread.request_stop();
    thread.join();
    EXPECT_EQ(worker->processed(), 1u);
    EXPECT_TRUE(fs::exists(dir / "drop" / "done" / "x.png"));
}

TEST(Ingest, SinkInsideWatchedDirectoryIsNotIngested) {
    fixture::TempDir dir("ingest");
    fs::create_directories(dir / "drop");
    IngestWorker worker(dir / "drop", fixture_model, dir / "drop" / "results.tsv");
    save_image(fixture::held_out_image(3, 3), dir / "drop" / "a.png");
    ASSERT_EQ(worker.poll_once().size(), 1u);
    EXPECT_TRUE(worker.poll_once().empty());
    EXPECT_TRUE(fs::exists(dir / "drop" / "results.tsv"));
    EXPECT_EQ(lines_of(dir / "drop" / "results.tsv").size(), 1u);
    EXPECT_EQ(count_files(dir / "drop" / "failed"), 0u);
}

TEST(Ingest, MissingDirectoryIsAnIoError) {
    fixture::TempDir dir("ingest");
    EXPECT_THROW(IngestWorker(dir / "absent", fixture_model, dir / "r.tsv"), IoError);
}

TEST(IngestRecord, TsvColumns) {
    IngestRecord ok{"a.png", "Trout", 0.75f, "2026-01-01T00:00:00Z", ""};
    EXPECT_EQ(ok.to_tsv(), "a.png\tTrout\t0.750000\t2026-01-01T00:00:00Z\t\n");
    IngestRecord bad{"b.png", "", 0.0f, "2026-01-01T00:00:00Z", "bad\tdata\nhere"};
    const auto line = bad.to_tsv();
    EXPECT_EQ(std::count(line.begin(), line.end(), '\t'), 4);
    EXPECT_EQ(std::count(line.begin(), line.end(), '\n'), 1);
}

TEST(DeploymentAccuracy, Examples) {
    std::vector<DeploymentRecord> records;
    for (int i = 0; i < 38; ++i) {
        const bool correct = i < 35;
        records.push_back({correct ? "Trout" : "Shrimp", "Trout", 0.9f});
    }
    EXPECT_NEAR(deployment_accuracy(records), 35.0 / 38.0, 1e-12);

    for (auto& r : records) {
        r.label = r.truth;
        r.confidence = 0.4f;
    }
    EXPECT_DOUBLE_EQ(deployment_accuracy(records), 0.0);
    EXPECT_DOUBLE_EQ(deployment_accuracy({{"Sea Bass", "Sea Bass", 0.5f}}), 1.0);
    EXPECT_THROW(deployment_accuracy({}), ValidationError);
}

TEST(UtcTimestamp, Iso8601) {
    const auto t = utc_timestamp(std::chrono::system_clock::time_point{});
    EXPECT_EQ(t, "1970-01-01T00:00:00Z");
}
