#pragma once

#include <string>
#include <vector>

#include "tactsim/checkpoint.hpp"
#include "tactsim/dataset.hpp"
#include "tactsim/model.hpp"

namespace tactsim {

struct TrainConfig {
    std::string optimizer = "adam";  // or "sgd-momentum"
    double learning_rate = 1e-3;
    double momentum = 0.9;       // sgd-momentum only
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    int batch_size = 32;
    int epochs = 50;
    double lr_decay = 1.0;       // per-epoch multiplier
    std::uint64_t seed = 1;
    double label_scale_xy_mm = 16.0;
    double label_scale_z_mm = 1.5;
    AugmentSpec augment{4.0, 8.0, 0.0, 0};  // probability 0 disables

    void validate() const;
};

struct EpochStats {
    int epoch;
    double train_loss;
    double val_loss;
    double lr;
};

struct TrainResult {
    Checkpoint best;             // lowest validation loss seen
    std::vector<EpochStats> history;
    int best_epoch = -1;
    double best_val_loss = 0.0;
};

/// Seeded training loop: shuffling, init and augmentation all derive from
/// cfg.seed, so a fixed seed reproduces the run bit for bit. Aborts with
/// NumericError if the loss turns non-finite.
TrainResult train(Model& model, const std::vector<Sample>& samples,
                  const std::vector<int>& train_idx, const std::vector<int>& val_idx,
                  const TrainConfig& cfg);

/// Eval-mode predictions (normalized units), shape (N, 3).
Tensor predict(Model& model, const std::vector<Sample>& samples, const std::vector<int>& idx,
               int batch_size = 64);

/// epoch, train_loss, val_loss, lr
void write_history_csv(const std::vector<EpochStats>& history, const std::string& path);

}  // namespace tactsim
