#include "tactsim/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "tactsim/errors.hpp"
#include "tactsim/tensor.hpp"

namespace tactsim {

void TrainConfig::validate() const {
    if (optimizer != "adam" && optimizer != "sgd-momentum")
        throw std::invalid_argument("train: unknown optimizer '" + optimizer + "'");
    if (learning_rate < 0) throw std::invalid_argument("train: negative learning rate");
    if (batch_size < 1) throw std::invalid_argument("train: batch size must be at least 1");
    if (epochs < 0) throw std::invalid_argument("train: negative epoch count");
    if (lr_decay <= 0) throw std::invalid_argument("train: lr decay must be positive");
    augment.validate();
}

namespace {

class Optimizer {
public:
    virtual ~Optimizer() = default;
    virtual void step(std::vector<ParamBlob>& blobs, double lr) = 0;
};

class Adam : public Optimizer {
public:
    Adam(const std::vector<ParamBlob>& blobs, double b1, double b2, double eps)
        : b1_(b1), b2_(b2), eps_(eps) {
        for (const auto& blob : blobs) {
            m_.emplace_back(blob.trainable ? blob.value->size() : 0, 0.0f);
            v_.emplace_back(blob.trainable ? blob.value->size() : 0, 0.0f);
        }
    }

    void step(std::vector<ParamBlob>& blobs, double lr) override {
        ++t_;
        const double bias1 = 1.0 - std::pow(b1_, t_);
        const double bias2 = 1.0 - std::pow(b2_, t_);
        for (std::size_t i = 0; i < blobs.size(); ++i) {
            if (!blobs[i].trainable) continue;
            auto& value = *blobs[i].value;
            const auto& grad = *blobs[i].grad;
            for (std::size_t k = 0; k < value.size(); ++k) {
                const double g = grad[k];
                m_[i][k] = static_cast<float>(b1_ * m_[i][k] + (1.0 - b1_) * g);
                v_[i][k] = static_cast<float>(b2_ * v_[i][k] + (1.0 - b2_) * g * g);
                const double mhat = m_[i][k] / bias1;
                const double vhat = v_[i][k] / bias2;
                value[k] -= static_cast<float>(lr * mhat / (std::sqrt(vhat) + eps_));
            }
        }
    }

private:
    double b1_, b2_, eps_;
    long t_ = 0;
    std::vector<std::vector<float>> m_, v_;
};

class SgdMomentum : public Optimizer {
public:
    SgdMomentum(const std::vector<ParamBlob>& blobs, double momentum) : momentum_(momentum) {
        for (const auto& blob : blobs)
            velocity_.emplace_back(blob.trainable ? blob.value->size() : 0, 0.0f);
    }

    void step(std::vector<ParamBlob>& blobs, double lr) override {
        for (std::size_t i = 0; i < blobs.size(); ++i) {
            if (!blobs[i].trainable) continue;
            auto& value = *blobs[i].value;
            const auto& grad = *blobs[i].grad;
            for (std::size_t k = 0; k < value.size(); ++k) {
                velocity_[i][k] =
                    static_cast<float>(momentum_ * velocity_[i][k] - lr * grad[k]);
                value[k] += velocity_[i][k];
            }
        }
    }

private:
    double momentum_;
    std::vector<std::vector<float>> velocity_;
};

double eval_loss(Model& model, const std::vector<Sample>& samples, const std::vector<int>& idx,
                 const TrainConfig& cfg, int batch_size) {
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t at = 0; at < idx.size(); at += batch_size) {
        const std::size_t end = std::min(idx.size(), at + batch_size);
        const std::vector<int> part(idx.begin() + at, idx.begin() + end);
        const Tensor& pred = model.forward(make_batch(samples, part), false);
        const Tensor targets =
            make_targets(samples, part, cfg.label_scale_xy_mm, cfg.label_scale_z_mm);
        acc += mse_loss(pred, targets) * static_cast<double>(part.size());
        n += part.size();
    }
    return acc / static_cast<double>(n);
}

}  // namespace

TrainResult train(Model& model, const std::vector<Sample>& samples,
                  const std::vector<int>& train_idx, const std::vector<int>& val_idx,
                  const TrainConfig& cfg) {
    cfg.validate();
    if (train_idx.empty() || val_idx.empty())
        throw std::invalid_argument("train: training and validation sets must be non-empty");

    auto blobs = model.blobs();
    std::unique_ptr<Optimizer> opt;
    if (cfg.optimizer == "adam")
        opt = std::make_unique<Adam>(blobs, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon);
    else
        opt = std::make_unique<SgdMomentum>(blobs, cfg.momentum);

    Rng rng(derive_seed(cfg.seed, 0x7e41));
    const bool augmenting = cfg.augment.probability > 0.0;

    TrainResult result;
    CheckpointMeta meta;
    meta.train_seed = cfg.seed;
    meta.optimizer = cfg.optimizer;
    meta.learning_rate = cfg.learning_rate;
    meta.label_scale_xy_mm = cfg.label_scale_xy_mm;
    meta.label_scale_z_mm = cfg.label_scale_z_mm;

    // Baseline: the freshly initialized model is the checkpoint to beat, and
    // the one returned when epochs == 0.
    result.best_val_loss = eval_loss(model, samples, val_idx, cfg, cfg.batch_size);
    meta.best_val_loss = result.best_val_loss;
    result.best = snapshot(model, meta);

    std::vector<int> order = train_idx;
    double lr = cfg.learning_rate;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double loss_acc = 0.0;
        std::size_t seen = 0;
        for (std::size_t at = 0; at < order.size(); at += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), at + cfg.batch_size);
            const std::vector<int> part(order.begin() + at, order.begin() + end);

            Tensor batch;
            if (augmenting) {
                std::vector<Sample> local;
                local.reserve(part.size());
                std::vector<int> local_idx(part.size());
                for (std::size_t i = 0; i < part.size(); ++i) {
                    local.push_back(augment(samples[part[i]], cfg.augment, rng));
                    local_idx[i] = static_cast<int>(i);
                }
                batch = make_batch(local, local_idx);
            } else {
                batch = make_batch(samples, part);
            }
            const Tensor targets =
                make_targets(samples, part, cfg.label_scale_xy_mm, cfg.label_scale_z_mm);

            model.forward(batch, true);
            model.zero_grad();
            const double loss = model.backward_mse(targets);
            if (!std::isfinite(loss))
                throw NumericError("train: loss diverged at epoch " + std::to_string(epoch) +
                                   ", batch " + std::to_string(at / cfg.batch_size));
            opt->step(blobs, lr);
            loss_acc += loss * static_cast<double>(part.size());
            seen += part.size();
        }

        const double train_loss = loss_acc / static_cast<double>(seen);
        const double val_loss = eval_loss(model, samples, val_idx, cfg, cfg.batch_size);
        result.history.push_back({epoch, train_loss, val_loss, lr});

        if (val_loss < result.best_val_loss) {
            result.best_val_loss = val_loss;
            result.best_epoch = epoch;
            meta.best_epoch = epoch;
            meta.best_val_loss = val_loss;
            meta.epochs_trained = epoch + 1;
            result.best = snapshot(model, meta);
        }
        lr *= cfg.lr_decay;
    }
    return result;
}

Tensor predict(Model& model, const std::vector<Sample>& samples, const std::vector<int>& idx,
               int batch_size) {
    Tensor out({static_cast<int>(idx.size()), 3});
    for (std::size_t at = 0; at < idx.size(); at += batch_size) {
        const std::size_t end = std::min(idx.size(), at + batch_size);
        const std::vector<int> part(idx.begin() + at, idx.begin() + end);
        const Tensor& pred = model.forward(make_batch(samples, part), false);
        std::copy(pred.data.begin(), pred.data.end(), out.data.begin() + at * 3);
    }
    return out;
}

void write_history_csv(const std::vector<EpochStats>& history, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open " + path + " for writing");
    out << "epoch,train_loss,val_loss,lr\n";
    char line[128];
    for (const auto& e : history) {
        std::snprintf(line, sizeof line, "%d,%.9g,%.9g,%.9g\n", e.epoch, e.train_loss, e.val_loss,
                      e.lr);
        out << line;
    }
}

}  // namespace tactsim
