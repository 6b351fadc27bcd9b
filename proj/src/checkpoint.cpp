#include "tactsim/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "json.hpp"
#include "tactsim/errors.hpp"

namespace tactsim {

namespace {

constexpr char kMagic[8] = {'T', 'S', 'N', 'N', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

const char* kind_name(LayerSpec::Kind k) {
    switch (k) {
        case LayerSpec::Kind::conv2d: return "conv2d";
        case LayerSpec::Kind::batchnorm: return "batchnorm";
        case LayerSpec::Kind::relu: return "relu";
        case LayerSpec::Kind::maxpool: return "maxpool";
        case LayerSpec::Kind::avgpool: return "avgpool";
        case LayerSpec::Kind::flatten: return "flatten";
        case LayerSpec::Kind::dense: return "dense";
    }
    return "?";
}

LayerSpec::Kind kind_from(const std::string& s) {
    if (s == "conv2d") return LayerSpec::Kind::conv2d;
    if (s == "batchnorm") return LayerSpec::Kind::batchnorm;
    if (s == "relu") return LayerSpec::Kind::relu;
    if (s == "maxpool") return LayerSpec::Kind::maxpool;
    if (s == "avgpool") return LayerSpec::Kind::avgpool;
    if (s == "flatten") return LayerSpec::Kind::flatten;
    if (s == "dense") return LayerSpec::Kind::dense;
    throw DataError("checkpoint: unknown layer kind '" + s + "'");
}

nlohmann::json spec_to_json(const ModelSpec& spec) {
    nlohmann::json j;
    j["name"] = spec.name;
    j["input_shape"] = {spec.input_shape[0], spec.input_shape[1], spec.input_shape[2]};
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : spec.layers) {
        layers.push_back({{"kind", kind_name(l.kind)},
                          {"out_channels", l.out_channels},
                          {"kernel", l.kernel},
                          {"stride", l.stride},
                          {"padding", l.padding},
                          {"pool", l.pool},
                          {"units", l.units}});
    }
    j["layers"] = std::move(layers);
    return j;
}

ModelSpec spec_from_json(const nlohmann::json& j) {
    ModelSpec spec;
    spec.name = j.at("name").get<std::string>();
    for (int i = 0; i < 3; ++i) spec.input_shape[i] = j.at("input_shape")[i].get<int>();
    for (const auto& jl : j.at("layers")) {
        LayerSpec l;
        l.kind = kind_from(jl.at("kind").get<std::string>());
        l.out_channels = jl.at("out_channels").get<int>();
        l.kernel = jl.at("kernel").get<int>();
        l.stride = jl.at("stride").get<int>();
        l.padding = jl.at("padding").get<int>();
        l.pool = jl.at("pool").get<int>();
        l.units = jl.at("units").get<int>();
        spec.layers.push_back(l);
    }
    return spec;
}

}  // namespace

Checkpoint snapshot(Model& model, const CheckpointMeta& meta) {
    Checkpoint ckpt;
    ckpt.spec = model.spec();
    ckpt.meta = meta;
    for (const auto& blob : model.blobs()) {
        ckpt.blob_names.push_back(blob.name);
        ckpt.blob_values.push_back(*blob.value);
    }
    return ckpt;
}

void load_into(const Checkpoint& ckpt, Model& model) {
    if (ckpt.spec.hash() != model.spec().hash())
        throw DataError("checkpoint: architecture mismatch (checkpoint is " + ckpt.spec.name +
                        ", model is " + model.spec().name + ")");
    auto blobs = model.blobs();
    if (blobs.size() != ckpt.blob_values.size())
        throw DataError("checkpoint: blob count mismatch");
    for (std::size_t i = 0; i < blobs.size(); ++i) {
        if (blobs[i].value->size() != ckpt.blob_values[i].size())
            throw DataError("checkpoint: blob size mismatch at '" + ckpt.blob_names[i] + "'");
        *blobs[i].value = ckpt.blob_values[i];
    }
}

Model restore(const Checkpoint& ckpt) {
    Model model(ckpt.spec);
    load_into(ckpt, model);
    return model;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    nlohmann::json j;
    j["spec"] = spec_to_json(ckpt.spec);
    j["meta"] = {{"train_seed", ckpt.meta.train_seed},
                 {"epochs_trained", ckpt.meta.epochs_trained},
                 {"best_epoch", ckpt.meta.best_epoch},
                 {"best_val_loss", ckpt.meta.best_val_loss},
                 {"optimizer", ckpt.meta.optimizer},
                 {"learning_rate", ckpt.meta.learning_rate},
                 {"label_scale_xy_mm", ckpt.meta.label_scale_xy_mm},
                 {"label_scale_z_mm", ckpt.meta.label_scale_z_mm},
                 {"init", ckpt.meta.init}};
    nlohmann::json blobs = nlohmann::json::array();
    for (std::size_t i = 0; i < ckpt.blob_names.size(); ++i)
        blobs.push_back({{"name", ckpt.blob_names[i]}, {"size", ckpt.blob_values[i].size()}});
    j["blobs"] = std::move(blobs);
    const std::string header = j.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open " + path + " for writing");
    out.write(kMagic, sizeof kMagic);
    const std::uint32_t version = kVersion;
    const std::uint32_t header_len = static_cast<std::uint32_t>(header.size());
    out.write(reinterpret_cast<const char*>(&version), 4);
    out.write(reinterpret_cast<const char*>(&header_len), 4);
    out.write(header.data(), header.size());
    for (const auto& blob : ckpt.blob_values)
        out.write(reinterpret_cast<const char*>(blob.data()),
                  static_cast<std::streamsize>(blob.size() * sizeof(float)));
    if (!out) throw DataError("short write to " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (in.gcount() != 8 || std::memcmp(magic, kMagic, 8) != 0)
        throw DataError(path + ": not a checkpoint (bad magic)");
    std::uint32_t version = 0, header_len = 0;
    in.read(reinterpret_cast<char*>(&version), 4);
    in.read(reinterpret_cast<char*>(&header_len), 4);
    if (!in || version != kVersion) throw DataError(path + ": unsupported checkpoint version");
    std::string header(header_len, '\0');
    in.read(header.data(), header_len);
    if (in.gcount() != static_cast<std::streamsize>(header_len))
        throw DataError(path + ": truncated header");

    nlohmann::json j;
    try {
        j = nlohmann::json::parse(header);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path + ": corrupt header: " + e.what());
    }

    Checkpoint ckpt;
    try {
        ckpt.spec = spec_from_json(j.at("spec"));
        const auto& m = j.at("meta");
        ckpt.meta.train_seed = m.at("train_seed").get<std::uint64_t>();
        ckpt.meta.epochs_trained = m.at("epochs_trained").get<int>();
        ckpt.meta.best_epoch = m.at("best_epoch").get<int>();
        ckpt.meta.best_val_loss = m.at("best_val_loss").get<double>();
        ckpt.meta.optimizer = m.at("optimizer").get<std::string>();
        ckpt.meta.learning_rate = m.at("learning_rate").get<double>();
        ckpt.meta.label_scale_xy_mm = m.at("label_scale_xy_mm").get<double>();
        ckpt.meta.label_scale_z_mm = m.at("label_scale_z_mm").get<double>();
        ckpt.meta.init = m.at("init").get<std::string>();
        for (const auto& jb : j.at("blobs")) {
            ckpt.blob_names.push_back(jb.at("name").get<std::string>());
            ckpt.blob_values.emplace_back(jb.at("size").get<std::size_t>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path + ": malformed header: " + e.what());
    }

    for (auto& blob : ckpt.blob_values) {
        in.read(reinterpret_cast<char*>(blob.data()),
                static_cast<std::streamsize>(blob.size() * sizeof(float)));
        if (in.gcount() != static_cast<std::streamsize>(blob.size() * sizeof(float)))
            throw DataError(path + ": truncated parameter blob");
    }
    return ckpt;
}

}  // namespace tactsim
