// Copyright (C) 2026 The finclass Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "finclass/service.hpp"

// The library default of 5 drops connections when a burst of clients arrives
// faster than the accept loop runs.
#define CPPHTTPLIB_LISTEN_BACKLOG 128
#include <httplib.h>

#include <algorithm>
#include <ctime>
#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

#include "finclass/dataset.hpp"
#include "finclass/error.hpp"
#include "finclass/nn_ops.hpp"

namespace finclass {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

ModelSlot::ModelSlot(std::shared_ptr<const ModelBundle> bundle) { replace(std::move(bundle)); }

std::shared_ptr<const ModelBundle> ModelSlot::get() const {
    std::lock_guard lock(mutex_);
    return bundle_;
}

std::string ModelSlot::version() const {
    std::lock_guard lock(mutex_);
    return version_;
}

ModelSlot::Snapshot ModelSlot::snapshot() const {
    std::lock_guard lock(mutex_);
    return {bundle_, version_};
}

void ModelSlot::replace(std::shared_ptr<const ModelBundle> bundle) {
    if (!bundle) throw ValidationError("model slot requires a bundle");
    std::string version = model_version(*bundle);
    std::lock_guard lock(mutex_);
    bundle_ = std::move(bundle);
    version_ = std::move(version);
}

std::string classification_json(const Classification& c, const std::string& version, double processing_ms) {
    json j;
    j["label"] = c.label;
    j["class_index"] = c.class_index;
    j["confidence"] = c.confidence;
    j["probabilities"] = c.probabilities;
    j["model_version"] = version;
    j["processing_ms"] = processing_ms;
    return j.dump();
}

namespace {

std::string error_json(const std::string& kind, const std::string& message) {
    json j;
    j["error"] = kind;
    j["message"] = message;
    return j.dump();
}

}  // namespace

ClassifyService::ClassifyService(ServiceConfig config)
    : config_(config), slot_(std::make_shared<const ModelBundle>(load_model(config.model_path))) {
    started_ = std::chrono::steady_clock::now();
}

ClassifyService::ClassifyService(ServiceConfig config, std::shared_ptr<const ModelBundle> bundle)
    : config_(std::move(config)), slot_(std::move(bundle)) {
    started_ = std::chrono::steady_clock::now();
}

ClassifyService::~ClassifyService() { stop(); }

HttpResult ClassifyService::classify(const std::string& image_bytes) const {
    if (image_bytes.empty()) return {400, error_json("validation", "empty request body")};
    if (image_bytes.size() > config_.max_body_bytes) return {413, error_json("validation", "request body too large")};
    const auto [bundle, version] = slot_.snapshot();
    const auto t0 = std::chrono::steady_clock::now();
    try {
        const auto bytes = std::span(reinterpret_cast<const std::uint8_t*>(image_bytes.data()), image_bytes.size());
        const Classification c = predict(*bundle, bytes);
        const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        return {200, classification_json(c, version, ms)};
    } catch (const DecodeError& e) {
        return {400, error_json("decode", e.what())};
    } catch (const Error& e) {
        return {500, error_json(std::string(error_kind_name(e.kind())), e.what())};
    }
}

HttpResult ClassifyService::health() const {
    json j;
    j["status"] = "ok";
    j["model_version"] = slot_.version();
    j["uptime_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
    return {200, j.dump()};
}

HttpResult ClassifyService::labels() const {
    json j;
    j["labels"] = slot_.get()->class_names();
    return {200, j.dump()};
}

void ClassifyService::install_routes() {
    server_->set_payload_max_length(config_.max_body_bytes);
    server_->Post("/classify", [this](const httplib::Request& req, httplib::Response& res) {
        const std::string* body = &req.body;
        if (req.is_multipart_form_data()) {
            if (req.files.empty()) {
                res.status = 400;
                res.set_content(error_json("validation", "multipart request carries no file"), "application/json");
                return;
            }
            auto it = req.files.find("image");
            body = &(it != req.files.end() ? it->second : req.files.begin()->second).content;
        }
        const HttpResult r = classify(*body);
        res.status = r.status;
        res.set_content(r.body, "application/json");
    });
    server_->Get("/health", [this](const httplib::Request&, httplib::Response& res) {
        const HttpResult r = health();
        res.status = r.status;
        res.set_content(r.body, "application/json");
    });
    server_->Get("/labels", [this](const httplib::Request&, httplib::Response& res) {
        const HttpResult r = labels();
        res.status = r.status;
        res.set_content(r.body, "application/json");
    });
}

void ClassifyService::start() {
    if (server_) return;
    server_ = std::make_unique<httplib::Server>();
    // No SO_REUSEPORT: a second instance on a busy port must fail to bind.
    server_->set_socket_options([](auto sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    });
    install_routes();
    if (config_.port == 0) {
        port_ = server_->bind_to_any_port(config_.bind_host);
        if (port_ <= 0) {
            server_.reset();
            throw BindError("cannot bind " + config_.bind_host + " on any port");
        }
    } else {
        if (!server_->bind_to_port(config_.bind_host, config_.port)) {
            server_.reset();
            throw BindError("cannot bind " + config_.bind_host + ":" + std::to_string(config_.port));
        }
        port_ = config_.port;
    }
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
}

void ClassifyService::stop() {
    if (!server_) return;
    server_->stop();
    if (thread_.joinable()) thread_.join();
    server_.reset();
}

void ClassifyService::reload() { slot_.replace(std::make_shared<const ModelBundle>(load_model(config_.model_path))); }

std::string utc_timestamp(std::chrono::system_clock::time_point t) {
    const std::time_t secs = std::chrono::system_clock::to_time_t(t);
    std::tm tm{};
    gmtime_r(&secs, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string IngestRecord::to_tsv() const {
    char conf[32];
    std::snprintf(conf, sizeof(conf), "%.6f", static_cast<double>(confidence));
    std::string err = error;
    std::replace(err.begin(), err.end(), '\t', ' ');
    std::replace(err.begin(), err.end(), '\n', ' ');
    return filename + '\t' + (error.empty() ? label : "-") + '\t' + (error.empty() ? conf : "-") + '\t' + timestamp +
           '\t' + err + '\n';
}

IngestWorker::IngestWorker(fs::path dir, std::function<std::shared_ptr<const ModelBundle>()> model, fs::path sink)
    : dir_(std::move(dir)), model_(std::move(model)), sink_(std::move(sink)) {
    std::error_code ec;
    if (!fs::is_directory(dir_, ec)) throw IoError("ingest directory " + dir_.string() + " is not readable");
    fs::create_directories(dir_ / "done", ec);
    fs::create_directories(dir_ / "failed", ec);
}

namespace {

fs::path unique_destination(const fs::path& dir, const fs::path& name) {
    fs::path target = dir / name;
    std::error_code ec;
    for (int i = 1; fs::exists(target, ec); ++i) {
        target = dir / (name.stem().string() + "." + std::to_string(i) + name.extension().string());
    }
    return target;
}

void move_file(const fs::path& from, const fs::path& dir) {
    std::error_code ec;
    fs::rename(from, unique_destination(dir, from.filename()), ec);
    if (ec) throw IoError("cannot move " + from.string() + " into " + dir.string() + ": " + ec.message());
}

}  // namespace

std::vector<IngestRecord> IngestWorker::poll_once() {
    std::vector<fs::path> pending;
    std::error_code ec;
    const fs::path sink = fs::weakly_canonical(sink_, ec);
    for (const auto& entry : fs::directory_iterator(dir_, ec)) {
        const auto name = entry.path().filename().string();
        if (!entry.is_regular_file() || name.empty() || name.front() == '.') continue;
        if (name.size() > 4 && name.compare(name.size() - 4, 4, ".tmp") == 0) continue;
        std::error_code canon_ec;
        if (fs::weakly_canonical(entry.path(), canon_ec) == sink) continue;
        pending.push_back(entry.path());
    }
    std::sort(pending.begin(), pending.end());

    std::vector<IngestRecord> records;
    for (const auto& path : pending) {
        IngestRecord rec;
        rec.filename = path.filename().string();
        bool ok = false;
        try {
            const auto bundle = model_();
            const Classification c = predict(*bundle, load_image(path));
            rec.label = c.label;
            rec.confidence = c.confidence;
            ok = true;
        } catch (const std::exception& e) {
            rec.error = e.what();
        }
        rec.timestamp = utc_timestamp();
        {
            std::ofstream out(sink_, std::ios::app);
            out << rec.to_tsv();
        }
        try {
            move_file(path, dir_ / (ok ? "done" : "failed"));
            if (!ok) {
                std::ofstream err(unique_destination(dir_ / "failed", rec.filename + ".error.txt"));
                err << rec.error << '\n';
            }
        } catch (const Error&) {
            // Leave the file in place; the record already names it.
        }
        ++processed_;
        records.push_back(std::move(rec));
    }
    return records;
}

void IngestWorker::run(std::stop_token stop, std::chrono::milliseconds interval) {
    while (!stop.stop_requested()) {
        try {
            poll_once();
        } catch (const std::exception&) {
            // Transient directory errors; retry on the next tick.
        }
        const auto until = std::chrono::steady_clock::now() + interval;
        while (!stop.stop_requested() && std::chrono::steady_clock::now() < until) {
            std::this_thread::sleep_for(std::chrono::milliseconds(20));
        }
    }
}

double deployment_accuracy(const std::vector<DeploymentRecord>& records) {
    if (records.empty()) throw ValidationError("deployment accuracy of an empty record list");
    std::map<std::string, std::size_t> index;
    for (const auto& r : records) {
        index.emplace(r.label, 0);
        index.emplace(r.truth, 0);
    }
    std::size_t next = 0;
    for (auto& [_, i] : index) i = next++;

    std::vector<std::size_t> truths;
    std::vector<Tensor> predictions;
    for (const auto& r : records) {
        Tensor p({index.size()});
        p[index.at(r.label)] = r.confidence;
        predictions.push_back(std::move(p));
        truths.push_back(index.at(r.truth));
    }
    return nn::accuracy(truths, predictions, kDeploymentConfidenceFloor);
}

}  // namespace finclass
