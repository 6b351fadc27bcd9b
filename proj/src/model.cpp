#include "tactsim/model.hpp"

#include <cstdio>
#include <stdexcept>

#include "tactsim/hash.hpp"

namespace tactsim {

std::string LayerSpec::describe() const {
    char buf[96];
    switch (kind) {
        case Kind::conv2d:
            std::snprintf(buf, sizeof buf, "conv2d(%d,k%d,s%d,p%d)", out_channels, kernel, stride,
                          padding);
            break;
        case Kind::batchnorm: std::snprintf(buf, sizeof buf, "batchnorm"); break;
        case Kind::relu: std::snprintf(buf, sizeof buf, "relu"); break;
        case Kind::maxpool: std::snprintf(buf, sizeof buf, "maxpool(%d)", pool); break;
        case Kind::avgpool: std::snprintf(buf, sizeof buf, "avgpool(%d)", pool); break;
        case Kind::flatten: std::snprintf(buf, sizeof buf, "flatten"); break;
        case Kind::dense: std::snprintf(buf, sizeof buf, "dense(%d)", units); break;
    }
    return buf;
}

namespace {

std::unique_ptr<Layer> instantiate(const LayerSpec& spec, const std::vector<int>& in_shape) {
    switch (spec.kind) {
        case LayerSpec::Kind::conv2d:
            return std::make_unique<Conv2D>(in_shape.back(), spec.out_channels, spec.kernel,
                                            spec.stride, spec.padding);
        case LayerSpec::Kind::batchnorm: return std::make_unique<BatchNorm>(in_shape.back());
        case LayerSpec::Kind::relu: return std::make_unique<ReLU>();
        case LayerSpec::Kind::maxpool: return std::make_unique<MaxPool>(spec.pool);
        case LayerSpec::Kind::avgpool: return std::make_unique<AvgPool>(spec.pool);
        case LayerSpec::Kind::flatten: return std::make_unique<Flatten>();
        case LayerSpec::Kind::dense:
            return std::make_unique<Dense>(in_shape.at(0), spec.units);
    }
    throw std::logic_error("unknown layer kind");
}

}  // namespace

std::vector<std::vector<int>> ModelSpec::infer_shapes() const {
    std::vector<std::vector<int>> shapes;
    std::vector<int> cur = {input_shape[0], input_shape[1], input_shape[2]};
    shapes.push_back(cur);
    for (const auto& l : layers) {
        const auto layer = instantiate(l, cur);
        cur = layer->output_shape(cur);
        shapes.push_back(cur);
    }
    return shapes;
}

std::size_t ModelSpec::param_count() const {
    std::size_t count = 0;
    std::vector<int> cur = {input_shape[0], input_shape[1], input_shape[2]};
    for (const auto& l : layers) {
        auto layer = instantiate(l, cur);
        for (const auto& blob : layer->blobs())
            if (blob.trainable) count += blob.value->size();
        cur = layer->output_shape(cur);
    }
    return count;
}

std::string ModelSpec::hash() const {
    std::string canon = name + "|" + std::to_string(input_shape[0]) + "x" +
                        std::to_string(input_shape[1]) + "x" + std::to_string(input_shape[2]);
    for (const auto& l : layers) canon += "|" + l.describe();
    return hash_hex(fnv1a64(canon));
}

ModelSpec build_model(const std::string& name) {
    ModelSpec spec;
    spec.name = name;
    auto conv = [](int out_c, int k, int pad) {
        LayerSpec l;
        l.kind = LayerSpec::Kind::conv2d;
        l.out_channels = out_c;
        l.kernel = k;
        l.stride = 1;
        l.padding = pad;
        return l;
    };
    auto bn = [] {
        LayerSpec l;
        l.kind = LayerSpec::Kind::batchnorm;
        return l;
    };
    auto relu = [] {
        LayerSpec l;
        l.kind = LayerSpec::Kind::relu;
        return l;
    };
    auto maxpool = [](int k) {
        LayerSpec l;
        l.kind = LayerSpec::Kind::maxpool;
        l.pool = k;
        return l;
    };
    auto avgpool = [](int k) {
        LayerSpec l;
        l.kind = LayerSpec::Kind::avgpool;
        l.pool = k;
        return l;
    };
    auto flatten = [] {
        LayerSpec l;
        l.kind = LayerSpec::Kind::flatten;
        return l;
    };
    auto dense = [](int units) {
        LayerSpec l;
        l.kind = LayerSpec::Kind::dense;
        l.units = units;
        return l;
    };
    auto block = [&](int out_c, int k, int pad) {
        spec.layers.push_back(conv(out_c, k, pad));
        spec.layers.push_back(bn());
        spec.layers.push_back(relu());
    };

    // Every variant: 60x60x25 -> conv 7x7x64 valid -> (54,54,64), then 3x3
    // blocks and pooling chosen so CNN_5 lands on (10,10,128) after conv 5.
    block(64, 7, 0);  // -> 54
    if (name == "CNN_1") {
        spec.layers.push_back(maxpool(2));  // -> 27
        spec.layers.push_back(avgpool(2));  // -> 13
    } else if (name == "CNN_3") {
        spec.layers.push_back(maxpool(2));  // -> 27
        block(64, 3, 1);                    // -> 27
        spec.layers.push_back(maxpool(2));  // -> 13
        block(96, 3, 0);                    // -> 11
        spec.layers.push_back(avgpool(2));  // -> 5
    } else if (name == "CNN_5" || name == "CNN_7") {
        spec.layers.push_back(maxpool(2));  // -> 27
        block(64, 3, 1);                    // -> 27
        block(96, 3, 0);                    // -> 25
        spec.layers.push_back(maxpool(2));  // -> 12
        block(128, 3, 0);                   // -> 10
        block(128, 3, 1);                   // -> 10, the (10,10,128) anchor
        if (name == "CNN_7") {
            block(128, 3, 1);  // -> 10
            block(128, 3, 1);  // -> 10
        }
        spec.layers.push_back(avgpool(2));  // -> 5
    } else {
        throw std::invalid_argument("unknown model name: " + name);
    }
    spec.layers.push_back(flatten());
    spec.layers.push_back(dense(3));
    spec.infer_shapes();  // validate
    return spec;
}

// ============================================================================
// Runtime model
// ============================================================================

Model::Model(const ModelSpec& spec, std::uint64_t init_seed) : spec_(spec) {
    std::vector<int> cur = {spec.input_shape[0], spec.input_shape[1], spec.input_shape[2]};
    Rng rng(derive_seed(init_seed, 0x1217));
    for (const auto& l : spec.layers) {
        layers_.push_back(instantiate(l, cur));
        layers_.back()->init_params(rng);
        cur = layers_.back()->output_shape(cur);
    }
    if (cur != std::vector<int>{3})
        throw std::invalid_argument("model: the head must output exactly (x, y, z)");
    tape_.resize(layers_.size() + 1);
}

std::size_t Model::param_count() const { return spec_.param_count(); }

const Tensor& Model::forward(const Tensor& batch, bool training) {
    if (batch.rank() != 4 || batch.dim(1) != spec_.input_shape[0] ||
        batch.dim(2) != spec_.input_shape[1] || batch.dim(3) != spec_.input_shape[2])
        throw std::invalid_argument("model: input shape mismatch, got " + batch.shape_str());

    tape_[0] = batch;
    for (std::size_t i = 0; i < layers_.size(); ++i)
        layers_[i]->forward(tape_[i], tape_[i + 1], training);
    tape_valid_ = training;
    return tape_.back();
}

double Model::backward_mse(const Tensor& targets) {
    if (!tape_valid_)
        throw std::logic_error("model: backward requires a preceding training-mode forward");
    const Tensor& pred = tape_.back();
    if (pred.shape != targets.shape)
        throw std::invalid_argument("model: target shape mismatch");

    const double inv = 1.0 / static_cast<double>(pred.size());
    double loss = 0.0;
    Tensor grad(pred.shape);
    for (std::int64_t i = 0; i < pred.size(); ++i) {
        const double d = static_cast<double>(pred.data[i]) - targets.data[i];
        loss += d * d;
        grad.data[i] = static_cast<float>(2.0 * d * inv);
    }
    loss *= inv;

    for (int i = static_cast<int>(layers_.size()) - 1; i >= 0; --i) {
        Tensor grad_in;
        const bool need_input = i > 0;
        layers_[i]->backward(tape_[i], tape_[i + 1], grad, need_input ? &grad_in : nullptr);
        grad = std::move(grad_in);
    }
    tape_valid_ = false;
    return loss;
}

void Model::zero_grad() {
    for (auto& layer : layers_)
        for (auto& blob : layer->blobs())
            if (blob.grad) std::fill(blob.grad->begin(), blob.grad->end(), 0.0f);
}

std::vector<ParamBlob> Model::blobs() {
    std::vector<ParamBlob> out;
    for (auto& layer : layers_)
        for (auto& blob : layer->blobs()) out.push_back(blob);
    return out;
}

double mse_loss(const Tensor& predictions, const Tensor& targets) {
    if (predictions.shape != targets.shape)
        throw std::invalid_argument("mse: shape mismatch");
    double acc = 0.0;
    for (std::int64_t i = 0; i < predictions.size(); ++i) {
        const double d = static_cast<double>(predictions.data[i]) - targets.data[i];
        acc += d * d;
    }
    return acc / static_cast<double>(predictions.size());
}

}  // namespace tactsim
