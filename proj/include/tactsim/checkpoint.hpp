#pragma once

#include <string>
#include <vector>

#include "tactsim/model.hpp"

namespace tactsim {

struct CheckpointMeta {
    std::uint64_t train_seed = 0;
    int epochs_trained = 0;
    int best_epoch = -1;
    double best_val_loss = 0.0;
    std::string optimizer = "adam";
    double learning_rate = 0.0;
    double label_scale_xy_mm = 16.0;
    double label_scale_z_mm = 1.5;
    std::string init = "he-uniform";
};

/// Serialized model: spec, metadata and every parameter/state array in the
/// model's blob order (includes batch-norm running statistics).
struct Checkpoint {
    ModelSpec spec;
    CheckpointMeta meta;
    std::vector<std::string> blob_names;
    std::vector<std::vector<float>> blob_values;
};

Checkpoint snapshot(Model& model, const CheckpointMeta& meta);

/// Restores parameters into a model of the same architecture; the spec hash
/// must match.
void load_into(const Checkpoint& ckpt, Model& model);

/// Convenience: build the model the checkpoint describes and load it.
Model restore(const Checkpoint& ckpt);

/// 8-byte magic, version, length-prefixed JSON header (spec + meta + blob
/// table), then the raw little-endian float payload.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace tactsim
