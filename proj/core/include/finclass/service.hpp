// Copyright (C) 2026 The finclass Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <stop_token>
#include <string>
#include <thread>
#include <vector>

#include "finclass/model_format.hpp"

namespace httplib {
class Server;
}

namespace finclass {

struct ServiceConfig {
    std::string bind_host = "127.0.0.1";
    int port = 8080;  // 0 picks a free port
    std::size_t max_body_bytes = 10 * 1024 * 1024;
    std::filesystem::path model_path;
};

/// Shared, atomically replaceable reference to the loaded model. Readers take
/// a snapshot; requests in flight keep the bundle they started with.
class ModelSlot {
public:
    explicit ModelSlot(std::shared_ptr<const ModelBundle> bundle);

    struct Snapshot {
        std::shared_ptr<const ModelBundle> bundle;
        std::string version;
    };

    std::shared_ptr<const ModelBundle> get() const;
    std::string version() const;
    Snapshot snapshot() const;
    void replace(std::shared_ptr<const ModelBundle> bundle);

private:
    mutable std::mutex mutex_;
    std::shared_ptr<const ModelBundle> bundle_;
    std::string version_;
};

struct HttpResult {
    int status = 200;
    std::string body;  // JSON
};

/// HTTP front end: POST /classify, GET /health, GET /labels.
class ClassifyService {
public:
    /// Loads the bundle at config.model_path; throws the loader's error.
    explicit ClassifyService(ServiceConfig config);
    ClassifyService(ServiceConfig config, std::shared_ptr<const ModelBundle> bundle);
    ~ClassifyService();

    ClassifyService(const ClassifyService&) = delete;
    ClassifyService& operator=(const ClassifyService&) = delete;

    /// Binds and serves on a background thread. Throws BindError.
    void start();
    void stop();
    /// Actual bound port (useful with port 0).
    int port() const noexcept { return port_; }

    /// Re-reads config.model_path and swaps it in; the old model stays live on failure.
    void reload();

    HttpResult classify(const std::string& image_bytes) const;
    HttpResult health() const;
    HttpResult labels() const;

    const ModelSlot& model() const noexcept { return slot_; }

private:
    void install_routes();

    ServiceConfig config_;
    ModelSlot slot_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    int port_ = 0;
    std::chrono::steady_clock::time_point started_;
};

/// JSON object for a classification: label, class_index, confidence,
/// probabilities, model_version, processing_ms.
std::string classification_json(const Classification& c, const std::string& model_version, double processing_ms);

std::string utc_timestamp(std::chrono::system_clock::time_point t = std::chrono::system_clock::now());

struct IngestRecord {
    std::string filename;
    std::string label;
    float confidence = 0.0f;
    std::string timestamp;
    std::string error;  // empty on success

    /// filename, label, confidence, timestamp, error (tab-separated).
    std::string to_tsv() const;
};

/// Pull-based worker over a drop directory. New top-level image files are
/// classified once, recorded in the append-only sink and moved to `done/`;
/// undecodable files go to `failed/` with an error record.
class IngestWorker {
public:
    IngestWorker(std::filesystem::path dir, std::function<std::shared_ptr<const ModelBundle>()> model,
                 std::filesystem::path sink);

    /// Processes every pending file; returns the records written.
    std::vector<IngestRecord> poll_once();

    /// Loops poll_once() until stop is requested.
    void run(std::stop_token stop, std::chrono::milliseconds interval = std::chrono::milliseconds(500));

    std::size_t processed() const noexcept { return processed_.load(); }

private:
    std::filesystem::path dir_;
    std::function<std::shared_ptr<const ModelBundle>()> model_;
    std::filesystem::path sink_;
    std::atomic<std::size_t> processed_{0};
};

struct DeploymentRecord {
    std::string label;
    std::string truth;
    float confidence = 0.0f;
};

inline constexpr double kDeploymentConfidenceFloor = 0.5;

/// Fraction of records that are correct with confidence >= 0.5.
double deployment_accuracy(const std::vector<DeploymentRecord>& records);

}  // namespace finclass
