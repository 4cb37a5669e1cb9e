// Copyright (C) 2026 The finclass Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "finclass/model_format.hpp"

#include <cstdio>
#include <cstring>
#include <set>

#include <nlohmann/json.hpp>

#include "binary_io.hpp"
#include "finclass/error.hpp"
#include "finclass/nn_ops.hpp"

namespace finclass {
namespace {

using json = nlohmann::ordered_json;

std::string activation_name(Activation a) {
    switch (a) {
        case Activation::none: return "none";
        case Activation::relu: return "relu";
        case Activation::relu6: return "relu6";
    }
    return "none";
}

Activation parse_activation(const std::string& s) {
    if (s == "none") return Activation::none;
    if (s == "relu") return Activation::relu;
    if (s == "relu6") return Activation::relu6;
    throw FormatError("model file: unknown activation '" + s + "'");
}

json layer_to_json(const Layer& layer) {
    json j;
    if (const auto* l = std::get_if<ConvLayer>(&layer)) {
        j["type"] = "conv";
        j["name"] = l->name;
        j["kernel"] = l->kernel;
        j["stride"] = l->stride;
        j["in"] = l->in_channels;
        j["out"] = l->out_channels;
        j["activation"] = activation_name(l->activation);
    } else if (const auto* b = std::get_if<BottleneckLayer>(&layer)) {
        j["type"] = "bottleneck";
        j["name"] = b->name;
        j["in"] = b->in_channels;
        j["expansion"] = b->spec.expansion;
        j["out"] = b->spec.out_channels;
        j["stride"] = b->spec.stride;
        j["residual"] = b->spec.use_residual;
    } else if (std::holds_alternative<PoolLayer>(layer)) {
        j["type"] = "global_avg_pool";
    } else if (const auto* d = std::get_if<DenseLayer>(&layer)) {
        j["type"] = "dense";
        j["name"] = d->name;
        j["in"] = d->in_features;
        j["out"] = d->out_features;
        j["activation"] = activation_name(d->activation);
    } else {
        j["type"] = "softmax";
    }
    return j;
}

Layer layer_from_json(const json& j) {
    const std::string type = j.at("type").get<std::string>();
    if (type == "conv") {
        return ConvLayer{j.at("name").get<std::string>(), j.at("kernel").get<std::size_t>(),
                         j.at("stride").get<std::size_t>(), j.at("in").get<std::size_t>(),
                         j.at("out").get<std::size_t>(), parse_activation(j.at("activation").get<std::string>())};
    }
    if (type == "bottleneck") {
        return BottleneckLayer{j.at("name").get<std::string>(), j.at("in").get<std::size_t>(),
                               BottleneckSpec{j.at("expansion").get<std::size_t>(), j.at("out").get<std::size_t>(),
                                              j.at("stride").get<std::size_t>(), j.at("residual").get<bool>()}};
    }
    if (type == "global_avg_pool") return PoolLayer{};
    if (type == "dense") {
        return DenseLayer{j.at("name").get<std::string>(), j.at("in").get<std::size_t>(), j.at("out").get<std::size_t>(),
                          parse_activation(j.at("activation").get<std::string>())};
    }
    if (type == "softmax") return SoftmaxLayer{};
    throw FormatError("model file: unknown layer type '" + type + "'");
}

std::string topology_json(const ModelBundle& b) {
    json j;
    j["input_shape"] = b.graph.input_shape;
    json layers = json::array();
    for (const auto& l : b.graph.layers) layers.push_back(layer_to_json(l));
    j["layers"] = std::move(layers);
    j["class_names"] = b.graph.class_names;
    j["metadata"] = {{"created_unix", b.metadata.created_unix}, {"config_hash", b.metadata.config_hash}};
    return j.dump();
}

void parse_topology(const std::string& text, ModelBundle& b) {
    try {
        const json j = json::parse(text);
        b.graph.input_shape = j.at("input_shape").get<Shape>();
        for (const auto& l : j.at("layers")) b.graph.layers.push_back(layer_from_json(l));
        b.graph.class_names = j.at("class_names").get<std::vector<std::string>>();
        const auto& meta = j.at("metadata");
        b.metadata.created_unix = meta.at("created_unix").get<std::int64_t>();
        b.metadata.config_hash = meta.at("config_hash").get<std::string>();
    } catch (const json::exception& e) {
        throw FormatError(std::string("model file: malformed topology block: ") + e.what());
    }
}

}  // namespace

void ModelBundle::validate() const {
    graph.validate_classifier();
    const auto refs = graph.parameters();
    std::set<std::string> expected;
    for (const auto& ref : refs) {
        (void)weights.get(ref.name, ref.shape);
        expected.insert(ref.name);
    }
    for (const auto& [name, _] : weights.entries()) {
        if (!expected.count(name)) throw WeightError("bundle carries unreferenced parameter '" + name + "'");
    }
    if (!(load_head(weights) == head)) throw WeightError("bundle head parameters disagree with its weight payload");
}

ModelBundle make_bundle(const ModelGraph& backbone, const WeightStore& folded, const HeadParams& head,
                        std::vector<std::string> class_names, BundleMetadata metadata) {
    try {
        head.validate();
    } catch (const DimensionError& e) {
        throw WeightError(std::string("head: ") + e.what());
    }
    ModelBundle b;
    b.graph = append_classifier(backbone, head.hidden(), std::move(class_names));
    if (head.features() != backbone.feature_width() || head.classes() != b.graph.class_names.size()) {
        throw WeightError("head shape " + shape_to_string(head.w1.shape()) + " -> " + shape_to_string(head.w2.shape()) +
                          " does not fit the backbone and class table");
    }
    WeightStore store;
    const std::size_t end = b.graph.feature_layer_end();
    ModelGraph feature_part = b.graph;
    feature_part.layers.resize(end);
    for (const auto& ref : feature_part.parameters()) store.set(ref.name, folded.get(ref.name, ref.shape));
    store_head(head, store);
    b.weights = std::move(store);
    b.metadata = std::move(metadata);
    b.head = head;
    b.validate();
    return b;
}

std::vector<std::uint8_t> encode_bundle(const ModelBundle& bundle) {
    detail::ByteWriter w;
    w.bytes(kModelFileMagic, sizeof(kModelFileMagic));
    w.u16(bundle.version);
    const std::string topo = topology_json(bundle);
    w.u32(static_cast<std::uint32_t>(topo.size()));
    w.bytes(topo.data(), topo.size());
    w.u32(static_cast<std::uint32_t>(bundle.weights.size()));
    for (const auto& [name, t] : bundle.weights.entries()) w.tensor_entry(name, t);
    const std::uint32_t crc = detail::crc32(w.buffer());
    w.u32(crc);
    return std::move(w.buffer());
}

ModelBundle decode_bundle(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < sizeof(kModelFileMagic) ||
        std::memcmp(bytes.data(), kModelFileMagic, sizeof(kModelFileMagic)) != 0) {
        throw FormatError("model file: bad magic");
    }
    if (bytes.size() < sizeof(kModelFileMagic) + 2 + 4) throw FormatError("model file: truncated header");
    std::uint16_t version = 0;
    std::memcpy(&version, bytes.data() + sizeof(kModelFileMagic), sizeof(version));
    if (version > kModelFileVersion) {
        throw VersionError("model file version " + std::to_string(version) + " is newer than supported version " +
                           std::to_string(kModelFileVersion));
    }
    if (version == 0) throw FormatError("model file: invalid version 0");
    const auto body = bytes.first(bytes.size() - 4);
    std::uint32_t stored_crc = 0;
    std::memcpy(&stored_crc, bytes.data() + body.size(), sizeof(stored_crc));
    if (detail::crc32(body) != stored_crc) throw CorruptionError("model file: checksum mismatch");

    detail::ByteReader r(body, "model file");
    char magic[4];
    r.bytes(magic, sizeof(magic));
    ModelBundle b;
    b.version = r.u16();
    const auto topo_len = r.u32();
    if (topo_len > r.remaining()) throw FormatError("model file: topology block exceeds file size");
    std::string topo(topo_len, '\0');
    r.bytes(topo.data(), topo_len);
    parse_topology(topo, b);
    const auto count = r.u32();
    WeightStore::Map entries;
    for (std::uint32_t i = 0; i < count; ++i) {
        auto [name, tensor] = r.tensor_entry();
        if (!entries.emplace(name, std::move(tensor)).second) {
            throw FormatError("model file: duplicate parameter '" + name + "'");
        }
    }
    if (r.remaining() != 0) throw FormatError("model file: trailing bytes before checksum");
    b.weights = WeightStore(std::move(entries));
    try {
        b.head = load_head(b.weights);
        b.validate();
    } catch (const WeightError&) {
        throw;
    } catch (const Error& e) {
        throw FormatError(std::string("model file: ") + e.what());
    }
    return b;
}

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& path) {
    bundle.validate();
    detail::write_file_atomic(path, encode_bundle(bundle));
}

void export_model(const ModelGraph& backbone, const WeightStore& folded, const HeadParams& head,
                  std::vector<std::string> class_names, const std::filesystem::path& path, BundleMetadata metadata) {
    save_bundle(make_bundle(backbone, folded, head, std::move(class_names), std::move(metadata)), path);
}

ModelBundle load_model(const std::filesystem::path& path) { return decode_bundle(detail::read_file(path)); }

std::string model_version(const ModelBundle& bundle) {
    const auto bytes = encode_bundle(bundle);
    std::uint32_t crc = 0;
    std::memcpy(&crc, bytes.data() + bytes.size() - 4, sizeof(crc));
    char buf[32];
    std::snprintf(buf, sizeof(buf), "v%u-%08x", static_cast<unsigned>(bundle.version), crc);
    return buf;
}

Classification classify_probabilities(const ModelBundle& bundle, const Tensor& probabilities) {
    Classification c;
    c.class_index = nn::argmax(probabilities.data());
    c.label = bundle.class_names().at(c.class_index);
    c.confidence = probabilities[c.class_index];
    c.probabilities = probabilities.values();
    return c;
}

Classification predict(const ModelBundle& bundle, const RasterImage& image) {
    const Tensor input = prepare_input(image, bundle.graph.input_shape.at(0));
    const Tensor features = extract_features(bundle.graph, bundle.weights, input);
    return classify_probabilities(bundle, head_forward(bundle.head, features));
}

Classification predict(const ModelBundle& bundle, std::span<const std::uint8_t> image_bytes) {
    return predict(bundle, decode_image(image_bytes));
}

}  // namespace finclass
