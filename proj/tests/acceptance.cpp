// Copyright (C) 2026 The finclass Authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <set>
#include <sstream>

#include "cli/cli.hpp"
#include "finclass/augment.hpp"
#include "finclass/backbone.hpp"
#include "finclass/dataset.hpp"
#include "finclass/error.hpp"
#include "finclass/head.hpp"
#include "finclass/imaging.hpp"
#include "finclass/model_format.hpp"
#include "finclass/nn_ops.hpp"
#include "finclass/service.hpp"
#include "finclass/synthetic.hpp"
#include "finclass/trainer.hpp"
#include "support/fixture.hpp"
#include "support/gradient_check.hpp"
#include "support/kernel_checks.hpp"

using namespace finclass;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), f, v);
    return buf;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

Outcome kernels() {
    const auto t0 = Clock::now();
    const double worst = std::max({checks::conv2d_sweep(11, 150), checks::depthwise_sweep(12, 150),
                                   checks::pool_sweep(13, 150), checks::dense_sweep(14, 150)});
    const double t = seconds_since(t0);
    return {worst <= 1e-5 && t < 30.0, "max abs error " + fmt("%.3g", worst) + ", " + fmt("%.2f s", t)};
}

Outcome gradients() {
    const auto t0 = Clock::now();
    double worst = 0.0;
    for (std::uint64_t seed = 1000; seed < 1010; ++seed) {
        worst = std::max(worst, checks::gradient_check(checks::gradient_problem(seed, 32, 16, 9)).worst_relative);
    }
    const double t = seconds_since(t0);
    return {worst <= 1e-4 && t < 10.0, "worst relative error " + fmt("%.3g", worst) + ", " + fmt("%.2f s", t)};
}

Outcome softmax_suite() {
    Rng rng(3);
    double norm_err = 0.0;
    bool argmax_ok = true, ce_ok = true;
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t k = 2 + rng.index(15);
        Tensor z({k}, oracle::random_floats(rng, k, -20.0, 20.0));
        const Tensor p = nn::softmax(z);
        double sum = 0.0;
        for (float v : p.data()) sum += v;
        norm_err = std::max(norm_err, std::abs(sum - 1.0));
        Tensor shifted = z;
        const float c = static_cast<float>(rng.uniform(-100.0, 100.0));
        for (float& v : shifted.data()) v += c;
        argmax_ok = argmax_ok && nn::argmax(nn::softmax(shifted).data()) == nn::argmax(p.data()) &&
                    nn::argmax(p.data()) == nn::argmax(z.data());
        ce_ok = ce_ok && nn::categorical_cross_entropy(nn::one_hot(rng.index(k), k), p) >= 0.0f;
    }
    const Tensor uniform = nn::softmax(Tensor({9}));
    const double ce_uniform = nn::categorical_cross_entropy(nn::one_hot(4, 9), uniform);
    const double ln9_err = std::abs(ce_uniform - std::log(9.0));
    return {norm_err <= 1e-6 && argmax_ok && ce_ok && ln9_err <= 1e-6,
            "normalization error " + fmt("%.3g", norm_err) + ", |CE(uniform) - ln 9| " + fmt("%.3g", ln9_err) +
                (argmax_ok ? "" : ", argmax changed under shift") + (ce_ok ? "" : ", negative CE")};
}

Outcome backbone() {
    struct Row {
        std::size_t t, c, n, s;
    };
    constexpr Row table[] = {{1, 16, 1, 1}, {6, 24, 2, 2}, {6, 32, 3, 2}, {6, 64, 4, 2},
                             {6, 96, 3, 1}, {6, 160, 3, 2}, {6, 320, 1, 1}};
    const ModelGraph g = build_backbone();
    std::vector<const BottleneckLayer*> blocks;
    for (const auto& l : g.layers)
        if (const auto* b = std::get_if<BottleneckLayer>(&l)) blocks.push_back(b);
    bool structure = blocks.size() == 17 && std::get<ConvLayer>(g.layers.front()).out_channels == 32;
    std::size_t i = 0;
    for (const auto& row : table) {
        for (std::size_t r = 0; r < row.n && structure; ++r, ++i) {
            structure = blocks[i]->spec.expansion == row.t && blocks[i]->spec.out_channels == row.c &&
                        blocks[i]->spec.stride == (r == 0 ? row.s : 1u);
        }
    }
    structure = structure && std::get<ConvLayer>(g.layers[g.feature_layer_end() - 2]).out_channels == 1280;

    const WeightStore folded = attach_weights(g, random_backbone_weights(g, 1));
    const Tensor input = prepare_input(synthetic_image(2, 1, 224, 224), 224);
    extract_features(g, folded, input);  // warm-up
    const auto t0 = Clock::now();
    const Tensor features = extract_features(g, folded, input);
    const double t = seconds_since(t0);
    const bool length = features.shape() == Shape{1280};
    return {structure && length && t < 2.0,
            std::string(structure ? "table matches" : "table MISMATCH") + ", feature length " +
                std::to_string(features.size()) + ", forward " + fmt("%.3f s", t)};
}

Outcome training() {
    const auto t0 = Clock::now();
    const ModelGraph g = build_backbone();
    const WeightStore folded = attach_weights(g, random_backbone_weights(g, kDefaultSeed));
    const LabeledDataset data = synthetic_dataset(60, kDefaultSeed);
    TrainConfig config;
    config.batch_size = 32;
    config.validation_split = 0.2;
    config.max_epochs = 50;
    config.early_stop_patience = 50;
    config.rng_seed = kDefaultSeed;
    const TrainResult result = train(g, folded, data, config);
    double best_val = 0.0;
    for (const auto& e : result.report.epochs) best_val = std::max(best_val, e.val_accuracy);
    const double restored = result.report.best().val_accuracy;
    const double t = seconds_since(t0);
    return {restored >= 0.90 && t < 600.0,
            "val accuracy " + fmt("%.4f", restored) + " at best epoch " + std::to_string(result.report.best_epoch) +
                " (peak " + fmt("%.4f", best_val) + "), " + std::to_string(result.report.epochs.size()) +
                " epochs, " + fmt("%.1f s", t)};
}

Outcome early_stopping() {
    Rng rng(8);
    FeatureSet fs;
    fs.classes = 3;
    for (std::size_t k = 0; k < 3; ++k)
        for (int i = 0; i < 10; ++i) {
            auto v = oracle::random_floats(rng, 16, 0.0, 1.0);
            v[k] += 3.0f;
            fs.features.emplace_back(Shape{16}, v);
            fs.labels.push_back(k);
        }
    TrainConfig config;
    config.early_stop_patience = 0;
    config.hidden_width = 8;
    config.batch_size = 8;
    const std::vector<double> trace{0.5, 0.4, 0.45};
    std::vector<HeadParams> snapshots;
    TrainHooks hooks;
    hooks.on_epoch = [&](const EpochMetrics&, const HeadParams& p) { snapshots.push_back(p); };
    hooks.monitor = [&](std::size_t epoch, double v) { return epoch <= trace.size() ? trace[epoch - 1] : v; };
    const TrainResult result = train_on_features(fs, config, hooks);
    const bool ok = result.report.stopped_epoch == 3 && snapshots.size() == 3 && result.head == snapshots[1];
    return {ok, "stopped at epoch " + std::to_string(result.report.stopped_epoch) + ", restored epoch " +
                    std::to_string(result.report.best_epoch)};
}

Outcome deployment() {
    std::vector<DeploymentRecord> records;
    for (int i = 0; i < 38; ++i) {
        const std::string truth = marine_class_names()[static_cast<std::size_t>(i) % 9];
        const std::string label = i < 35 ? truth : marine_class_names()[(static_cast<std::size_t>(i) + 1) % 9];
        records.push_back({label, truth, 0.5f + 0.01f * static_cast<float>(i)});
    }
    const double pct = 100.0 * deployment_accuracy(records);
    return {std::abs(pct - 92.105) <= 0.005, "deployment accuracy " + fmt("%.4f%%", pct)};
}

Outcome augmentation() {
    fixture::TempDir dir("acceptance_augment");
    fs::create_directories(dir / "src" / "Red Mullet");
    for (std::size_t i = 0; i < 50; ++i) {
        save_image(synthetic_image(3, i, 24, 18), dir / "src" / "Red Mullet" / ("fish_" + std::to_string(100 + i) + ".png"));
    }
    AugmentPlan plan;
    const Manifest m = build_augmented_dataset(dir / "src", plan, dir / "a");
    build_augmented_dataset(dir / "src", plan, dir / "b");
    std::map<std::string, std::set<long>> angles;
    bool unique = true;
    for (const auto& e : m.entries) {
        if (e.transform == Transform::rotate) unique = unique && angles[e.source_path].insert(std::lround(*e.angle * 10)).second;
    }
    const bool same = slurp(dir / "a" / kManifestFileName) == slurp(dir / "b" / kManifestFileName);
    return {m.entries.size() == 1100 && unique && same,
            std::to_string(m.entries.size()) + " images, angles " + (unique ? "unique" : "DUPLICATED") +
                ", manifests " + (same ? "identical" : "DIFFER")};
}

Outcome serialization() {
    fixture::TempDir dir("acceptance_bundle");
    const ModelGraph g = build_backbone();
    const WeightStore folded = attach_weights(g, random_backbone_weights(g, 9));
    const HeadParams head = HeadParams::glorot(1280, kDefaultHiddenWidth, 9, 10);
    const ModelBundle memory = make_bundle(g, folded, head, marine_class_names());
    export_model(g, folded, head, marine_class_names(), dir / "m.fhkm");
    const ModelBundle loaded = load_model(dir / "m.fhkm");
    std::size_t identical = 0;
    for (std::size_t i = 0; i < 10; ++i) {
        const auto img = fixture::held_out_image(i % 9, 40 + i);
        identical += predict(loaded, img) == predict(memory, img) ? 1 : 0;
    }
    const auto clean = encode_bundle(memory);
    Rng rng(17);
    std::size_t detected = 0, trials = 64;
    for (std::size_t t = 0; t < trials; ++t) {
        auto bytes = clean;
        bytes[rng.index(bytes.size())] ^= static_cast<std::uint8_t>(1u << rng.index(8));
        try {
            decode_bundle(bytes);
        } catch (const Error&) {
            ++detected;
        }
    }
    return {identical == 10 && detected == trials,
            std::to_string(identical) + "/10 predictions bitwise identical, " + std::to_string(detected) + "/" +
                std::to_string(trials) + " corruptions detected"};
}

Outcome service() {
    fixture::TempDir dir("acceptance_service");
    const auto bundle = std::make_shared<const ModelBundle>(fixture::trained_bundle());
    save_bundle(*bundle, dir / "m.fhkm");
    save_image(fixture::held_out_image(6, 77), dir / "fish.png");

    std::ostringstream out, err;
    const int code = cli::run({"predict", (dir / "m.fhkm").string(), (dir / "fish.png").string()}, out, err);
    if (code != 0) return {false, "cli predict failed: " + err.str()};
    const std::string cli_line = out.str();

    ServiceConfig config;
    config.port = 0;
    ClassifyService svc(config, bundle);
    svc.start();
    const std::string body = slurp(dir / "fish.png");
    std::vector<std::future<std::string>> futures;
    for (int i = 0; i < 16; ++i) {
        futures.push_back(std::async(std::launch::async, [&] {
            httplib::Client client("127.0.0.1", svc.port());
            client.set_read_timeout(120, 0);
            const auto res = client.Post("/classify", body, "image/png");
            if (!res || res->status != 200) return std::string("request failed");
            const auto j = nlohmann::json::parse(res->body);
            char conf[32];
            std::snprintf(conf, sizeof(conf), "%.9g", static_cast<double>(j["confidence"].get<float>()));
            return j["label"].get<std::string>() + "\tclass " + std::to_string(j["class_index"].get<std::size_t>()) +
                   "\tconfidence " + conf + "\n";
        }));
    }
    std::size_t matching = 0;
    for (auto& f : futures) matching += f.get() == cli_line ? 1 : 0;

    httplib::Client client("127.0.0.1", svc.port());
    const auto labels = client.Get("/labels");
    const bool labels_ok = labels && labels->status == 200 &&
                           nlohmann::json::parse(labels->body)["labels"].get<std::vector<std::string>>() ==
                               marine_class_names();
    return {matching == 16 && labels_ok, std::to_string(matching) + "/16 responses equal CLI predict, /labels " +
                                             (labels_ok ? "lists the 9 classes" : "WRONG")};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"kernel-oracle equivalence", kernels},
        {"head gradient check", gradients},
        {"softmax / cross-entropy", softmax_suite},
        {"backbone structure and speed", backbone},
        {"synthetic end-to-end training", training},
        {"early-stopping semantics", early_stopping},
        {"deployment accuracy", deployment},
        {"augmentation contract", augmentation},
        {"serialization", serialization},
        {"service consistency", service},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += o.pass ? 0 : 1;
        std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
