// Copyright (C) 2026 The finclass Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "cli.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "finclass/augment.hpp"
#include "finclass/backbone.hpp"
#include "finclass/dataset.hpp"
#include "finclass/error.hpp"
#include "finclass/head.hpp"
#include "finclass/model_format.hpp"
#include "finclass/service.hpp"
#include "finclass/synthetic.hpp"
#include "finclass/trainer.hpp"

namespace finclass::cli {

namespace fs = std::filesystem;

namespace {

std::atomic<bool> g_stop{false};
std::atomic<bool> g_reload{false};

void on_stop_signal(int) { g_stop = true; }
void on_reload_signal(int) { g_reload = true; }

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
}

std::string format_percent_truncated(double fraction) {
    // Two decimals, truncated rather than rounded: 35/38 prints as 92.10%.
    const double hundredths = std::floor(fraction * 10000.0 + 1e-9);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f%%", hundredths / 100.0);
    return buf;
}

struct Options {
    std::uint64_t seed = kDefaultSeed;
    std::string config_file;

    // augment
    std::string source_dir, out_dir;
    AugmentPlan plan;
    bool no_reflections = false;

    // train / export
    std::string dataset_dir;
    std::string weights_file;
    std::string head_file;
    std::string labels_file;
    std::string bundle_out;
    bool backbone_only = false;
    bool stamp_time = false;
    TrainConfig train;

    // eval / predict / serve
    std::string bundle;
    std::string image;
    double confidence_floor = 0.0;
    std::string host = "127.0.0.1";
    int port = 8080;
    double max_body_mb = 10.0;
    std::string ingest_dir;
    std::string sink;
};

WeightStore backbone_weights(const ModelGraph& graph, const Options& o) {
    const WeightStore raw = o.weights_file.empty() ? random_backbone_weights(graph, o.seed) : load_weights(o.weights_file);
    return attach_weights(graph, raw);
}

BundleMetadata metadata_for(const Options& o, const std::string& config_hash) {
    BundleMetadata meta;
    meta.config_hash = config_hash;
    if (o.stamp_time) {
        meta.created_unix =
            std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch()).count();
    }
    return meta;
}

std::vector<std::string> read_labels(const Options& o, std::size_t classes) {
    if (o.labels_file.empty()) {
        if (classes == marine_class_names().size()) return marine_class_names();
        throw ValidationError("--labels-file is required for a " + std::to_string(classes) + "-class head");
    }
    std::vector<std::string> labels;
    std::istringstream in(read_text(o.labels_file));
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line);
        if (!line.empty()) labels.push_back(line);
    }
    return labels;
}

int cmd_augment(const Options& o, std::ostream& out) {
    AugmentPlan plan = o.plan;
    plan.rng_seed = o.seed;
    plan.include_reflections = !o.no_reflections;
    const Manifest manifest = build_augmented_dataset(o.source_dir, plan, o.out_dir);
    const auto counts = manifest.class_counts();
    out << "augmented " << counts.size() << " classes into " << o.out_dir << "\n";
    for (const auto& [name, n] : counts) out << "  " << name << ": " << n << "\n";
    out << "manifest: " << (fs::path(o.out_dir) / kManifestFileName).string() << "\n";
    return 0;
}

int cmd_train(const Options& o, std::ostream& out) {
    TrainConfig config = o.train;
    config.rng_seed = o.seed;
    const ModelGraph graph = build_backbone();
    const WeightStore folded = backbone_weights(graph, o);
    const LabeledDataset dataset = load_labeled_dataset(o.dataset_dir);
    out << "dataset: " << dataset.samples.size() << " images, " << dataset.class_names.size() << " classes\n";

    TrainHooks hooks;
    hooks.on_epoch = [&out, &config](const EpochMetrics& m, const HeadParams&) {
        char line[200];
        std::snprintf(line, sizeof(line),
                      "epoch %zu/%zu  train_accuracy %.4f  train_loss %.6f  val_accuracy %.4f  val_loss %.6f  (%.2fs)\n",
                      m.epoch, config.max_epochs, m.train_accuracy, m.train_loss, m.val_accuracy, m.val_loss,
                      m.wall_time_s);
        out << line << std::flush;
    };
    const TrainResult result = train(graph, folded, dataset, config, hooks);

    const fs::path dir = o.out_dir.empty() ? fs::path("run") : fs::path(o.out_dir);
    fs::create_directories(dir);
    WeightStore head_store;
    store_head(result.head, head_store);
    save_weights(head_store, dir / "head.fhwt");
    write_text(dir / "report.txt", result.report.to_text_table());
    write_text(dir / "report.jsonl", result.report.to_jsonl());
    const fs::path bundle_path = o.bundle_out.empty() ? dir / "model.fhkm" : fs::path(o.bundle_out);
    export_model(graph, folded, result.head, dataset.class_names, bundle_path, metadata_for(o, config.hash()));

    out << "stopped_epoch " << result.report.stopped_epoch << ", best_epoch " << result.report.best_epoch << "\n";
    out << "wrote " << (dir / "head.fhwt").string() << ", " << (dir / "report.txt").string() << ", "
        << (dir / "report.jsonl").string() << ", " << bundle_path.string() << "\n";
    return 0;
}

int cmd_export(const Options& o, std::ostream& out) {
    if (o.bundle_out.empty()) throw ValidationError("--out is required");
    const ModelGraph graph = build_backbone();
    if (o.backbone_only) {
        save_weights(random_backbone_weights(graph, o.seed), o.bundle_out);
        out << "wrote seeded backbone weights (seed " << o.seed << ") to " << o.bundle_out << "\n";
        return 0;
    }
    if (o.head_file.empty()) throw ValidationError("--head is required unless --backbone-only is given");
    const WeightStore folded = backbone_weights(graph, o);
    const HeadParams head = load_head(load_weights(o.head_file));
    export_model(graph, folded, head, read_labels(o, head.classes()), o.bundle_out, metadata_for(o, ""));
    out << "wrote " << o.bundle_out << "\n";
    return 0;
}

int cmd_predict(const Options& o, std::ostream& out) {
    const ModelBundle bundle = load_model(o.bundle);
    const Classification c = predict(bundle, load_image(o.image));
    char conf[32];
    std::snprintf(conf, sizeof(conf), "%.9g", static_cast<double>(c.confidence));
    out << c.label << "\tclass " << c.class_index << "\tconfidence " << conf << "\n";
    return 0;
}

int cmd_eval(const Options& o, std::ostream& out) {
    const ModelBundle bundle = load_model(o.bundle);
    const LabeledDataset dataset = load_labeled_dataset(o.dataset_dir);
    std::vector<Tensor> probs;
    std::vector<std::size_t> labels;
    for (const auto& s : dataset.samples) {
        const auto& name = dataset.class_names[s.label];
        const auto it = std::find(bundle.class_names().begin(), bundle.class_names().end(), name);
        if (it == bundle.class_names().end()) throw DatasetError("class '" + name + "' is not in the model's class table");
        labels.push_back(static_cast<std::size_t>(it - bundle.class_names().begin()));
        const Classification c = predict(bundle, s.image());
        probs.emplace_back(Shape{c.probabilities.size()}, c.probabilities);
    }
    const double acc = nn::accuracy(labels, probs, o.confidence_floor);
    const double loss = nn::mean_loss(labels, probs);
    const auto correct = static_cast<std::size_t>(std::llround(acc * static_cast<double>(labels.size())));
    char floor_buf[16];
    std::snprintf(floor_buf, sizeof(floor_buf), "%.2f", o.confidence_floor);
    out << "images: " << labels.size() << "\n";
    out << "accuracy: " << format_percent_truncated(acc) << " (" << correct << "/" << labels.size()
        << " correct at confidence >= " << floor_buf << ")\n";
    char loss_buf[32];
    std::snprintf(loss_buf, sizeof(loss_buf), "%.6f", loss);
    out << "loss: " << loss_buf << "\n";
    return 0;
}

int cmd_serve(const Options& o, std::ostream& out) {
    ServiceConfig config;
    config.bind_host = o.host;
    config.port = o.port;
    config.max_body_bytes = static_cast<std::size_t>(o.max_body_mb * 1024.0 * 1024.0);
    config.model_path = o.bundle;
    ClassifyService service(config);
    service.start();
    out << "serving " << o.bundle << " (" << service.model().version() << ") on http://" << o.host << ":"
        << service.port() << "\n"
        << std::flush;

    std::jthread ingest;
    if (!o.ingest_dir.empty()) {
        const fs::path sink = o.sink.empty() ? fs::path(o.ingest_dir) / "results.tsv" : fs::path(o.sink);
        auto worker = std::make_shared<IngestWorker>(o.ingest_dir, [&service] { return service.model().get(); }, sink);
        ingest = std::jthread([worker](std::stop_token st) { worker->run(st); });
        out << "watching " << o.ingest_dir << " -> " << sink.string() << "\n" << std::flush;
    }

    g_stop = false;
    g_reload = false;
    std::signal(SIGINT, on_stop_signal);
    std::signal(SIGTERM, on_stop_signal);
    std::signal(SIGHUP, on_reload_signal);
    while (!g_stop) {
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
        if (g_reload.exchange(false)) {
            try {
                service.reload();
                out << "reloaded model " << service.model().version() << "\n" << std::flush;
            } catch (const Error& e) {
                out << "reload failed, keeping current model: " << e.what() << "\n" << std::flush;
            }
        }
    }
    ingest.request_stop();
    service.stop();
    return 0;
}

std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return v && *v ? std::string(v) : fallback;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text) {
    std::vector<std::pair<std::string, std::string>> out;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ValidationError("config line " + std::to_string(line_no) + ": expected key=value");
        }
        std::string key = trim(line.substr(0, eq));
        std::replace(key.begin(), key.end(), '_', '-');
        out.emplace_back(key, trim(line.substr(eq + 1)));
    }
    return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"finclass: frozen-backbone image classification pipeline", "finclass"};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.require_subcommand(1);
    app.fallthrough();
    app.add_option("--seed", o.seed, "RNG seed for every stochastic step")->capture_default_str();
    app.add_option("--config", o.config_file, "flat key=value file of option defaults");

    auto* augment = app.add_subcommand("augment", "expand a class-per-directory image tree");
    augment->add_option("source_dir", o.source_dir)->required();
    augment->add_option("out_dir", o.out_dir)->required();
    augment->add_option("--target", o.plan.target_count, "images per class")->capture_default_str();
    augment->add_option("--min-angle", o.plan.min_angle)->capture_default_str();
    augment->add_option("--max-angle", o.plan.max_angle)->capture_default_str();
    augment->add_flag("--no-reflections", o.no_reflections);

    auto* train_cmd = app.add_subcommand("train", "train the classification head on a labeled image tree");
    train_cmd->add_option("dataset_dir", o.dataset_dir)->required();
    train_cmd->add_option("--weights", o.weights_file, "backbone weight file (default: seeded random backbone)");
    train_cmd->add_option("--out", o.out_dir, "output directory (default ./run)");
    train_cmd->add_option("--bundle", o.bundle_out, "model bundle path (default <out>/model.fhkm)");
    train_cmd->add_option("--batch-size", o.train.batch_size)->capture_default_str();
    train_cmd->add_option("--epochs", o.train.max_epochs)->capture_default_str();
    train_cmd->add_option("--patience", o.train.early_stop_patience)->capture_default_str();
    train_cmd->add_option("--hidden", o.train.hidden_width)->capture_default_str();
    train_cmd->add_option("--learning-rate", o.train.adam.learning_rate)->capture_default_str();
    train_cmd->add_option("--validation-split", o.train.validation_split)->capture_default_str();
    train_cmd->add_option("--threads", o.train.feature_threads, "feature extraction workers (0 = all cores)");
    train_cmd->add_flag("--stamp-time", o.stamp_time, "record the wall-clock time in the bundle");

    auto* eval_cmd = app.add_subcommand("eval", "accuracy and loss of a bundle on a labeled image tree");
    eval_cmd->add_option("bundle", o.bundle)->required();
    eval_cmd->add_option("dataset_dir", o.dataset_dir)->required();
    eval_cmd->add_option("--confidence-floor", o.confidence_floor)->capture_default_str();

    auto* predict_cmd = app.add_subcommand("predict", "classify one image");
    predict_cmd->add_option("bundle", o.bundle)->required();
    predict_cmd->add_option("image", o.image)->required();

    auto* export_cmd = app.add_subcommand("export", "write a model bundle or the seeded backbone weights");
    export_cmd->add_option("--out", o.bundle_out, "output path")->required();
    export_cmd->add_option("--weights", o.weights_file, "backbone weight file (default: seeded random backbone)");
    export_cmd->add_option("--head", o.head_file, "head parameter file written by train");
    export_cmd->add_option("--labels-file", o.labels_file, "class names, one per line");
    export_cmd->add_flag("--backbone-only", o.backbone_only, "write the seeded random backbone weights instead");
    export_cmd->add_flag("--stamp-time", o.stamp_time, "record the wall-clock time in the bundle");

    auto* serve_cmd = app.add_subcommand("serve", "HTTP classification service");
    o.bundle = env_or("FINCLASS_MODEL", "");
    o.host = env_or("FINCLASS_BIND", o.host);
    o.ingest_dir = env_or("FINCLASS_INGEST_DIR", "");
    serve_cmd->add_option("bundle", o.bundle, "model bundle (env FINCLASS_MODEL)");
    serve_cmd->add_option("--host", o.host, "bind address (env FINCLASS_BIND)")->capture_default_str();
    serve_cmd->add_option("--port", o.port)->capture_default_str();
    serve_cmd->add_option("--max-body-mb", o.max_body_mb)->capture_default_str();
    serve_cmd->add_option("--ingest-dir", o.ingest_dir, "watched drop directory (env FINCLASS_INGEST_DIR)");
    serve_cmd->add_option("--sink", o.sink, "ingest results file (default <ingest-dir>/results.tsv)");

    // Config-file entries become leading options of the chosen subcommand, so
    // explicit command-line flags still win.
    std::vector<std::string> argv_tokens(args.begin(), args.end());
    try {
        std::string config_path;
        std::size_t sub_pos = argv_tokens.size();
        CLI::App* sub = nullptr;
        for (std::size_t i = 0; i < argv_tokens.size(); ++i) {
            const auto& t = argv_tokens[i];
            if (t == "--config" && i + 1 < argv_tokens.size()) config_path = argv_tokens[i + 1];
            else if (t.rfind("--config=", 0) == 0) config_path = t.substr(9);
            if (!sub) {
                if (auto* s = app.get_subcommand_no_throw(t)) {
                    sub = s;
                    sub_pos = i;
                }
            }
        }
        if (!config_path.empty()) {
            std::vector<std::string> injected;
            std::vector<std::string> global;
            for (const auto& [key, value] : parse_config_text(read_text(config_path))) {
                const std::string flag = "--" + key;
                if (key == "config") continue;
                if (app.get_option_no_throw(flag)) {
                    global.push_back(flag + "=" + value);
                } else if (sub && sub->get_option_no_throw(flag)) {
                    injected.push_back(flag + "=" + value);
                } else {
                    bool known = false;
                    for (const auto* s : app.get_subcommands([](CLI::App*) { return true; })) {
                        if (s->get_option_no_throw(flag)) known = true;
                    }
                    if (!known) throw ValidationError("unknown config key '" + key + "'");
                }
            }
            if (sub) argv_tokens.insert(argv_tokens.begin() + static_cast<std::ptrdiff_t>(sub_pos) + 1,
                                        injected.begin(), injected.end());
            argv_tokens.insert(argv_tokens.begin(), global.begin(), global.end());
        }
    } catch (const Error& e) {
        err << error_kind_name(e.kind()) << " error: " << e.what() << "\n";
        return 1;
    }

    try {
        std::vector<std::string> reversed(argv_tokens.rbegin(), argv_tokens.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (*augment) return cmd_augment(o, out);
        if (*train_cmd) return cmd_train(o, out);
        if (*eval_cmd) {
            if (o.confidence_floor < 0.0 || o.confidence_floor > 1.0) {
                throw ValidationError("--confidence-floor must lie in [0, 1]");
            }
            return cmd_eval(o, out);
        }
        if (*predict_cmd) return cmd_predict(o, out);
        if (*export_cmd) return cmd_export(o, out);
        if (*serve_cmd) {
            if (o.bundle.empty()) throw ValidationError("serve needs a bundle path or FINCLASS_MODEL");
            return cmd_serve(o, out);
        }
    } catch (const Error& e) {
        err << error_kind_name(e.kind()) << " error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace finclass::cli
